//! Binary checkpoint format.
//!
//! Layout (little-endian): magic `UFCK`, `u32` version, `u32` length and
//! that many bytes of JSON metadata, `u32` blob count, then per blob a `u32`
//! name length, the name, a `u32` rank, `u32` dims and the `f32` payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::trainer::{EpochRecord, TrainConfig};
use crate::error::{Error, Result};
use crate::field::NormStats;
use crate::fno::{FnoConfig, FnoParameters};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"UFCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained model plus everything needed to resume or reproduce it.
/// Per-epoch wall times are not persisted and read back as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: FnoParameters,
    pub adam: AdamState,
    pub train: TrainConfig,
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
    pub manifest_hash: String,
    pub seed: u64,
    /// Input normalization the model was trained with.
    pub norm: NormStats,
    /// Grid the model was trained on.
    pub grid_dims: Option<[usize; 3]>,
}

impl Checkpoint {
    pub fn config(&self) -> &FnoConfig {
        self.params.config()
    }
}

#[derive(Serialize, Deserialize)]
struct Meta {
    fno: FnoConfig,
    train: TrainConfig,
    optimizer: String,
    adam: AdamState,
    epoch: usize,
    /// Wall-clock times are not stored so reruns give identical bytes.
    history: Vec<LossPoint>,
    manifest_hash: String,
    seed: u64,
    norm: NormStats,
    #[serde(default)]
    grid_dims: Option<[usize; 3]>,
}

#[derive(Serialize, Deserialize)]
struct LossPoint {
    epoch: usize,
    train_loss: f64,
    #[serde(with = "super::trainer::nan_as_null")]
    test_loss: f64,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_blob(out: &mut Vec<u8>, name: &str, shape: &[usize], values: &[f64]) {
    put_u32(out, name.len() as u32);
    out.extend_from_slice(name.as_bytes());
    put_u32(out, shape.len() as u32);
    for &d in shape {
        put_u32(out, d as u32);
    }
    out.reserve(4 * values.len());
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Result<Vec<u8>> {
    let meta = Meta {
        fno: ck.config().clone(),
        train: ck.train.clone(),
        optimizer: "adam".into(),
        adam: ck.adam.clone(),
        epoch: ck.epoch,
        history: ck
            .history
            .iter()
            .map(|r| LossPoint {
                epoch: r.epoch,
                train_loss: r.train_loss,
                test_loss: r.test_loss,
            })
            .collect(),
        manifest_hash: ck.manifest_hash.clone(),
        seed: ck.seed,
        norm: ck.norm,
        grid_dims: ck.grid_dims,
    };
    let json = serde_json::to_vec(&meta)?;
    let mut out = Vec::with_capacity(12 + json.len() + 12 * ck.params.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION);
    put_u32(&mut out, json.len() as u32);
    out.extend_from_slice(&json);
    let groups = ck.params.layout().groups();
    put_u32(&mut out, groups.len() as u32 + 2);
    for g in groups {
        put_blob(&mut out, &g.name, &g.shape, &ck.params.values()[g.offset..g.offset + g.len]);
    }
    put_blob(&mut out, "adam.m", &[ck.adam.m.len()], &ck.adam.m);
    put_blob(&mut out, "adam.v", &[ck.adam.v.len()], &ck.adam.v);
    Ok(out)
}

/// Write through a temporary file and rename into place.
pub fn save_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(ck)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(self.path, format!("truncated while reading {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

struct Blob {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

fn read_blob(r: &mut Reader) -> Result<Blob> {
    let n = r.u32("blob name length")? as usize;
    let name = String::from_utf8(r.take(n, "blob name")?.to_vec())
        .map_err(|_| Error::format(r.path, "blob name is not UTF-8"))?;
    let rank = r.u32("blob rank")? as usize;
    if rank > 16 {
        return Err(Error::format(r.path, format!("blob {name} has rank {rank}")));
    }
    let shape = (0..rank).map(|_| r.u32("blob shape").map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let len: usize = shape.iter().product();
    let raw = r.take(
        len.checked_mul(4).ok_or_else(|| Error::format(r.path, "blob too large"))?,
        &format!("blob {name}"),
    )?;
    let values = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Blob { name, shape, values })
}

/// Parse a checkpoint from bytes; `path` is only used in messages.
pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0, path };
    if r.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::format(path, "not a checkpoint (bad magic)"));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"),
        ));
    }
    let n = r.u32("metadata length")? as usize;
    let meta: Meta = serde_json::from_slice(r.take(n, "metadata")?)
        .map_err(|e| Error::format(path, format!("metadata: {e}")))?;
    meta.fno.validate()?;
    let count = r.u32("blob count")? as usize;
    let mut blobs = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        blobs.push(read_blob(&mut r)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::format(path, format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let mut params = FnoParameters::zeros(&meta.fno);
    for g in params.layout().groups().to_vec() {
        let b = blobs
            .iter()
            .find(|b| b.name == g.name)
            .ok_or_else(|| Error::format(path, format!("missing parameter blob {}", g.name)))?;
        if b.shape != g.shape {
            return Err(Error::format(
                path,
                format!("blob {} has shape {:?}, metadata implies {:?}", g.name, b.shape, g.shape),
            ));
        }
        params.values_mut()[g.offset..g.offset + g.len].copy_from_slice(&b.values);
    }
    let params = FnoParameters::from_values(&meta.fno, params.values().to_vec())?;
    let mut adam = meta.adam;
    for (name, dst) in [("adam.m", &mut adam.m), ("adam.v", &mut adam.v)] {
        let b = blobs
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::format(path, format!("missing blob {name}")))?;
        if b.values.len() != params.len() {
            return Err(Error::format(path, format!("{name} has {} entries", b.values.len())));
        }
        *dst = b.values.clone();
    }
    Ok(Checkpoint {
        params,
        adam,
        train: meta.train,
        epoch: meta.epoch,
        history: meta
            .history
            .into_iter()
            .map(|p| EpochRecord {
                epoch: p.epoch,
                train_loss: p.train_loss,
                test_loss: p.test_loss,
                wall_seconds: 0.0,
            })
            .collect(),
        manifest_hash: meta.manifest_hash,
        seed: meta.seed,
        norm: meta.norm,
        grid_dims: meta.grid_dims,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}

/// Load and require the stored model to match `expected`.
pub fn load_checkpoint_for(path: impl AsRef<Path>, expected: &FnoConfig) -> Result<Checkpoint> {
    let ck = load_checkpoint(path)?;
    check_config(ck.config(), expected)?;
    Ok(ck)
}

/// Shape-level comparison of two model configurations.
pub fn check_config(found: &FnoConfig, expected: &FnoConfig) -> Result<()> {
    if found == expected {
        return Ok(());
    }
    let a = crate::fno::ParamLayout::new(found);
    let b = crate::fno::ParamLayout::new(expected);
    let mut diffs = Vec::new();
    for g in b.groups() {
        match a.find(&g.name) {
            Some(h) if h.shape == g.shape => {}
            Some(h) => diffs.push(format!("{}: checkpoint {:?}, expected {:?}", g.name, h.shape, g.shape)),
            None => diffs.push(format!("{}: missing from checkpoint (expected {:?})", g.name, g.shape)),
        }
    }
    for g in a.groups() {
        if b.find(&g.name).is_none() {
            diffs.push(format!("{}: unexpected in checkpoint ({:?})", g.name, g.shape));
        }
    }
    if found.activation != expected.activation {
        diffs.push(format!(
            "activation: checkpoint {:?}, expected {:?}",
            found.activation, expected.activation
        ));
    }
    Err(Error::Shape(format!("checkpoint does not match the model configuration: {}", diffs.join("; "))))
}
