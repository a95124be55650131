//! Binary field and mask files.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic[4] | u32 version | u32 nx, ny, nz | f64 dx, dy, dz | f64 origin[3] | payload
//! ```
//!
//! Field files use magic `UFN1` and an `f32` payload; mask files use `UMSK`
//! and one `u8` per cell (0 fluid, 1 solid). Payloads are x-fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{BuildingMask, Grid3, ScalarField};
use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 4] = b"UFN1";
pub const MASK_MAGIC: &[u8; 4] = b"UMSK";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 3 * 4 + 3 * 8 + 3 * 8;

fn encode_header(magic: &[u8; 4], g: &Grid3, out: &mut Vec<u8>) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for n in g.dims() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for d in g.spacing() {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for o in g.origin {
        out.extend_from_slice(&o.to_le_bytes());
    }
}

fn decode_header(path: &Path, magic: &[u8; 4], bytes: &[u8]) -> Result<Grid3> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            path,
            format!("file is {} bytes, shorter than the {HEADER_LEN}-byte header", bytes.len()),
        ));
    }
    if &bytes[..4] != magic {
        return Err(Error::format(
            path,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&bytes[..4]),
                String::from_utf8_lossy(magic)
            ),
        ));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    let dims = [u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize];
    let spacing = [f64_at(20), f64_at(28), f64_at(36)];
    let origin = [f64_at(44), f64_at(52), f64_at(60)];
    Grid3::new(dims, spacing, origin)
        .map_err(|e| Error::format(path, format!("invalid grid header: {e}")))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp~");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Write `field` with an `f32` payload. Values are rounded to `f32`.
pub fn write_field(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * g.len());
    encode_header(FIELD_MAGIC, g, &mut out);
    for (n, &v) in field.values().iter().enumerate() {
        let x = v as f32;
        if !x.is_finite() {
            return Err(Error::Numeric(format!(
                "refusing to write non-finite value {v} at cell {n} to {}",
                path.display()
            )));
        }
        out.extend_from_slice(&x.to_le_bytes());
    }
    write_atomic(path, &out)
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let grid = decode_header(path, FIELD_MAGIC, &bytes)?;
    let payload = &bytes[HEADER_LEN..];
    let expected = 4 * grid.len();
    if payload.len() != expected {
        return Err(Error::format(
            path,
            format!(
                "payload is {} bytes, header {}x{}x{} requires {expected}",
                payload.len(),
                grid.nx,
                grid.ny,
                grid.nz
            ),
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    ScalarField::new(grid, values).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_mask(mask: &BuildingMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let g = mask.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + g.len());
    encode_header(MASK_MAGIC, g, &mut out);
    out.extend(mask.solid().iter().map(|&s| s as u8));
    write_atomic(path, &out)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BuildingMask> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let grid = decode_header(path, MASK_MAGIC, &bytes)?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != grid.len() {
        return Err(Error::format(
            path,
            format!("payload is {} bytes, expected {}", payload.len(), grid.len()),
        ));
    }
    let solid = payload
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::format(path, format!("invalid mask byte {other}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    BuildingMask::new(grid, solid).map_err(|e| Error::format(path, e.to_string()))
}
