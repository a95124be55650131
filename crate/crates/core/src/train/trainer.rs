//! The training loop.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::backward::{gradient_check, sample_gradient_into};
use super::checkpoint::{save_checkpoint, Checkpoint};
use super::data::TrainingData;
use super::loss::layerwise_relative_loss;
use crate::error::{ensure, Error, Result};
use crate::fno::{forward, FnoConfig, FnoParameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Seeds parameter initialization and the per-epoch shuffle.
    pub seed: u64,
    /// Finite-difference check on a few parameters before the first epoch.
    pub gradient_check: bool,
    /// Abort once a sample loss exceeds this.
    pub divergence_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 150,
            learning_rate: 1e-3,
            batch_size: 1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            gradient_check: false,
            divergence_threshold: 1e3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.epochs >= 1, "epochs must be >= 1");
        ensure!(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "learning rate must be positive, got {}",
            self.learning_rate
        );
        ensure!(self.batch_size >= 1, "batch size must be >= 1");
        ensure!(self.divergence_threshold > 0.0, "divergence threshold must be positive");
        AdamState::new(0, self.beta1, self.beta2, self.eps).map(|_| ())
    }
}

/// One row of the loss curves. `test_loss` is NaN without test windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    #[serde(with = "nan_as_null")]
    pub test_loss: f64,
    pub wall_seconds: f64,
}

pub(crate) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Lowest test loss (train loss when there is no test set).
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub history: Vec<EpochRecord>,
}

/// Mean loss of `params` over `windows`.
pub fn evaluate_loss(data: &TrainingData, params: &FnoParameters, windows: &[crate::field::SampleWindow]) -> Result<f64> {
    if windows.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for w in windows {
        let pred = forward(&data.input(w)?, params)?;
        total += layerwise_relative_loss(&pred, &data.target(w)?)?;
    }
    Ok(total / windows.len() as f64)
}

pub fn train(data: &TrainingData, tcfg: &TrainConfig, fcfg: &FnoConfig) -> Result<TrainOutcome> {
    train_with(data, tcfg, fcfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    data: &TrainingData,
    tcfg: &TrainConfig,
    fcfg: &FnoConfig,
    mut observe: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    tcfg.validate()?;
    fcfg.validate()?;
    let train_w = data.train_windows();
    let test_w = data.test_windows();
    ensure!(!train_w.is_empty(), "the manifest has no training windows");
    let first_in = data.input(&train_w[0])?;
    if first_in.channels() != fcfg.in_channels {
        return Err(Error::Shape(format!(
            "windows carry {} input steps but the model expects {} channels",
            first_in.channels(),
            fcfg.in_channels
        )));
    }

    let mut params = FnoParameters::init(fcfg, tcfg.seed)?;
    let mut adam = AdamState::new(params.len(), tcfg.beta1, tcfg.beta2, tcfg.eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed.wrapping_add(0x5eed));

    if tcfg.gradient_check {
        let idx: Vec<usize> = (0..params.len()).choose_multiple(&mut rng, 32);
        let target = data.target(&train_w[0])?;
        let (worst, group) = gradient_check(&first_in, &target, &params, Some(&idx))?;
        log::info!("gradient check: worst relative error {worst:e} ({group})");
        if worst > 1e-4 {
            return Err(Error::Numeric(format!(
                "gradient check failed: relative error {worst:e} in {group}"
            )));
        }
    }

    let snapshot = |params: &FnoParameters, adam: &AdamState, epoch: usize, history: &[EpochRecord]| Checkpoint {
        params: params.clone(),
        adam: adam.clone(),
        train: tcfg.clone(),
        epoch,
        history: history.to_vec(),
        manifest_hash: data.hash().to_string(),
        seed: tcfg.seed,
        norm: data.input_stats(),
        grid_dims: data.grid().map(|g| g.dims()),
    };

    let mut history = Vec::with_capacity(tcfg.epochs);
    let mut best: Option<(f64, Checkpoint)> = None;
    let mut order: Vec<usize> = (0..train_w.len()).collect();
    let mut grad_sum = vec![0.0; params.len()];
    let mut grad = if tcfg.batch_size > 1 { vec![0.0; params.len()] } else { Vec::new() };
    for epoch in 1..=tcfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(tcfg.batch_size) {
            for (k, &s) in batch.iter().enumerate() {
                let w = &train_w[s];
                let buf = if k == 0 { &mut grad_sum } else { &mut grad };
                let loss = sample_gradient_into(&data.input(w)?, &data.target(w)?, &params, buf)?;
                if !loss.is_finite() || loss > tcfg.divergence_threshold {
                    return Err(Error::Numeric(format!(
                        "training diverged at epoch {epoch}, window starting at step {}: loss {loss:e} (threshold {:e})",
                        w.start, tcfg.divergence_threshold
                    )));
                }
                loss_sum += loss;
                if k > 0 {
                    for (a, b) in grad_sum.iter_mut().zip(&grad) {
                        *a += b;
                    }
                }
            }
            if batch.len() > 1 {
                let scale = 1.0 / batch.len() as f64;
                grad_sum.iter_mut().for_each(|g| *g *= scale);
            }
            adam_step(params.values_mut(), &grad_sum, &mut adam, tcfg.learning_rate)?;
            params.round_to_f32();
        }
        let train_loss = loss_sum / train_w.len() as f64;
        let test_loss = evaluate_loss(data, &params, &test_w)?;
        let rec = EpochRecord {
            epoch,
            train_loss,
            test_loss,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        log::info!("epoch {epoch}: train {train_loss:.5} test {test_loss:.5}");
        history.push(rec);
        observe(&rec);
        let score = if test_w.is_empty() { train_loss } else { test_loss };
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, snapshot(&params, &adam, epoch, &history)));
        }
    }
    let mut best = best.expect("at least one epoch").1;
    best.history = history.clone();
    Ok(TrainOutcome {
        best,
        last: snapshot(&params, &adam, tcfg.epochs, &history),
        history,
    })
}

pub fn write_loss_csv(history: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("epoch,train_loss,test_loss,wall_seconds\n");
    for r in history {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, r.test_loss, r.wall_seconds));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// File names written by [`train_to_dir`].
pub const BEST_CHECKPOINT: &str = "best.ufck";
pub const FINAL_CHECKPOINT: &str = "final.ufck";
pub const LOSS_CSV: &str = "loss.csv";

/// Train from a manifest on disk and write both checkpoints and the loss CSV
/// into `out_dir`.
pub fn train_to_dir(
    manifest: impl AsRef<Path>,
    tcfg: &TrainConfig,
    fcfg: &FnoConfig,
    out_dir: impl AsRef<Path>,
) -> Result<TrainOutcome> {
    let out = out_dir.as_ref();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let data = TrainingData::load(manifest)?;
    let outcome = train(&data, tcfg, fcfg)?;
    save_checkpoint(&outcome.best, out.join(BEST_CHECKPOINT))?;
    save_checkpoint(&outcome.last, out.join(FINAL_CHECKPOINT))?;
    write_loss_csv(&outcome.history, out.join(LOSS_CSV))?;
    Ok(outcome)
}
