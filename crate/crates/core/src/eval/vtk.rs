//! Legacy VTK structured-points export.

use std::fs;
use std::path::Path;

use crate::error::{ensure, Error, Result};
use crate::field::ScalarField;

/// Header plus big-endian `f32` point data; points sit at cell centers.
pub fn encode_vtk(field: &ScalarField, name: &str) -> Result<Vec<u8>> {
    ensure!(
        !name.is_empty() && name.chars().all(|c| c.is_ascii_graphic()),
        "VTK array name must be non-empty ASCII without spaces, got {name:?}"
    );
    let g = field.grid();
    let [nx, ny, nz] = g.dims();
    let [dx, dy, dz] = g.spacing();
    let o = g.center(0, 0, 0);
    let header = format!(
        "# vtk DataFile Version 3.0\n{name}\nBINARY\nDATASET STRUCTURED_POINTS\n\
         DIMENSIONS {nx} {ny} {nz}\nORIGIN {} {} {}\nSPACING {dx} {dy} {dz}\n\
         POINT_DATA {}\nSCALARS {name} float 1\nLOOKUP_TABLE default\n",
        o[0],
        o[1],
        o[2],
        g.len()
    );
    let mut out = header.into_bytes();
    out.reserve(4 * g.len() + 1);
    for &v in field.values() {
        out.extend_from_slice(&(v as f32).to_be_bytes());
    }
    out.push(b'\n');
    Ok(out)
}

pub fn write_vtk(field: &ScalarField, name: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_vtk(field, name)?).map_err(|e| Error::io(path, e))
}
