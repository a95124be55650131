//! Sliding-window samples, train/test split and normalization statistics.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BuildingMask, ScalarField};
use crate::error::{ensure, Error, Result};

/// A run of consecutive time indices: every index but the last is an input,
/// the last is the prediction target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleWindow {
    pub start: usize,
    pub inputs: usize,
}

impl SampleWindow {
    pub fn input_indices(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.inputs
    }

    pub fn target_index(&self) -> usize {
        self.start + self.inputs
    }
}

/// Slide a window of `window` steps over `t_total` steps with `stride`.
pub fn make_windows(t_total: usize, window: usize, stride: usize) -> Result<Vec<SampleWindow>> {
    ensure!(window >= 2, "window must span at least 2 steps, got {window}");
    ensure!(stride >= 1, "stride must be >= 1");
    ensure!(
        t_total >= window,
        "sequence of {t_total} steps is shorter than the window of {window}"
    );
    let count = (t_total - window) / stride + 1;
    Ok((0..count)
        .map(|w| SampleWindow {
            start: w * stride,
            inputs: window - 1,
        })
        .collect())
}

/// Seeded random partition into `n_train` training and the remaining test
/// windows. Both halves keep the original window order.
pub fn split_dataset<T: Clone>(windows: &[T], n_train: usize, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let (train, test) = split_indices(windows.len(), n_train, seed)?;
    Ok((
        train.iter().map(|&i| windows[i].clone()).collect(),
        test.iter().map(|&i| windows[i].clone()).collect(),
    ))
}

pub(crate) fn split_indices(n: usize, n_train: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    ensure!(
        n_train > 0 && n_train < n,
        "n_train must be in 1..{n}, got {n_train}"
    );
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Scalar mean and standard deviation used to normalize model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

impl NormStats {
    pub const IDENTITY: NormStats = NormStats { mean: 0.0, std: 1.0 };

    /// Population mean/std over the fluid cells of `fields`.
    pub fn from_fields<'a>(
        fields: impl IntoIterator<Item = &'a ScalarField>,
        mask: Option<&BuildingMask>,
    ) -> Result<NormStats> {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut sq = 0.0;
        let mut cells = Vec::new();
        for f in fields {
            if let Some(m) = mask {
                f.grid().check_same(m.grid(), "normalization mask")?;
            }
            cells.push(f);
        }
        // two passes for a stable variance
        for f in &cells {
            for (c, &v) in f.values().iter().enumerate() {
                if mask.is_some_and(|m| m.is_solid(c)) {
                    continue;
                }
                n += 1;
                sum += v;
            }
        }
        ensure!(n > 0, "no fluid samples to compute normalization statistics");
        let mean = sum / n as f64;
        for f in &cells {
            for (c, &v) in f.values().iter().enumerate() {
                if mask.is_some_and(|m| m.is_solid(c)) {
                    continue;
                }
                sq += (v - mean) * (v - mean);
            }
        }
        let std = (sq / n as f64).sqrt();
        ensure!(std > 0.0, "training data has zero variance");
        Ok(NormStats { mean, std })
    }

    fn check(&self) -> Result<()> {
        ensure!(
            self.std > 0.0 && self.std.is_finite() && self.mean.is_finite(),
            "normalization requires a positive finite std, got {}",
            self.std
        );
        Ok(())
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    #[inline]
    pub fn invert(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }
}

pub fn normalize(field: &ScalarField, stats: &NormStats) -> Result<ScalarField> {
    stats.check()?;
    ScalarField::new(*field.grid(), field.values().iter().map(|&v| stats.apply(v)).collect())
}

pub fn denormalize(field: &ScalarField, stats: &NormStats) -> Result<ScalarField> {
    stats.check()?;
    ScalarField::new(*field.grid(), field.values().iter().map(|&v| stats.invert(v)).collect())
}

/// JSON description of a prepared dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Field files in time order, relative to the manifest's directory unless absolute.
    pub fields: Vec<String>,
    pub dt: f64,
    pub windows: Vec<SampleWindow>,
    /// Indices into `windows`.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub norm: NormStats,
    /// Whether model inputs are normalized with `norm` (targets never are).
    #[serde(default = "yes")]
    pub normalize_inputs: bool,
    /// Optional mask file at the dataset resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn yes() -> bool {
    true
}

impl DatasetManifest {
    /// Windows + seeded split + statistics over the training inputs.
    pub fn build(
        fields: Vec<String>,
        data: &[ScalarField],
        dt: f64,
        window: usize,
        stride: usize,
        n_train: usize,
        seed: u64,
        mask: Option<&BuildingMask>,
    ) -> Result<DatasetManifest> {
        ensure!(
            fields.len() == data.len(),
            "{} paths for {} fields",
            fields.len(),
            data.len()
        );
        let windows = make_windows(data.len(), window, stride)?;
        let (train, test) = split_indices(windows.len(), n_train, seed)?;
        let mut used = vec![false; data.len()];
        for &w in &train {
            for t in windows[w].input_indices() {
                used[t] = true;
            }
        }
        let norm = NormStats::from_fields(
            data.iter().zip(&used).filter(|(_, u)| **u).map(|(f, _)| f),
            mask,
        )?;
        let m = DatasetManifest {
            fields,
            dt,
            windows,
            train,
            test,
            seed,
            norm,
            normalize_inputs: true,
            mask: None,
            notes: Vec::new(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.dt > 0.0, "manifest dt must be positive");
        let n = self.windows.len();
        let mut seen = vec![0u8; n];
        for &i in self.train.iter().chain(&self.test) {
            ensure!(i < n, "window index {i} out of range ({n} windows)");
            seen[i] += 1;
        }
        ensure!(
            seen.iter().all(|&c| c == 1),
            "train and test partitions must be disjoint and cover all windows"
        );
        for w in &self.windows {
            ensure!(
                w.target_index() < self.fields.len(),
                "window starting at {} runs past the {} fields",
                w.start,
                self.fields.len()
            );
        }
        self.norm.check()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DatasetManifest> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::format(path, format!("manifest JSON: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Field paths resolved against `base` (usually the manifest's directory).
    pub fn field_paths(&self, base: &Path) -> Vec<PathBuf> {
        self.fields.iter().map(|f| base.join(f)).collect()
    }

    pub fn mask_path(&self, base: &Path) -> Option<PathBuf> {
        self.mask.as_ref().map(|m| base.join(m))
    }

    pub fn train_windows(&self) -> impl Iterator<Item = SampleWindow> + '_ {
        self.train.iter().map(|&i| self.windows[i])
    }

    pub fn test_windows(&self) -> impl Iterator<Item = SampleWindow> + '_ {
        self.test.iter().map(|&i| self.windows[i])
    }

    /// Effective input statistics (identity when inputs are not normalized).
    pub fn input_stats(&self) -> NormStats {
        if self.normalize_inputs {
            self.norm
        } else {
            NormStats::IDENTITY
        }
    }
}
