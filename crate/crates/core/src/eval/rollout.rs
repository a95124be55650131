//! One-step evaluation and autoregressive rollout.

use serde::{Deserialize, Serialize};

use super::stats::abs_error_stats;
use super::surrogate::Surrogate;
use crate::error::{ensure, Result};
use crate::field::{BuildingMask, FieldSequence, SampleWindow, ScalarField};
use crate::fno::Tensor;
use crate::train::layerwise_relative_loss;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    /// First input step of the window.
    pub start: usize,
    pub loss: f64,
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStepEval {
    pub mean_loss: f64,
    pub mean_abs_error: f64,
    pub samples: Vec<SampleScore>,
}

/// Layer-wise relative loss and absolute error of single predictions over
/// `windows` of `fields`. Predictions are masked first when `mask` is given.
pub fn one_step_eval(
    model: &Surrogate,
    fields: &[ScalarField],
    windows: &[SampleWindow],
    mask: Option<&BuildingMask>,
) -> Result<OneStepEval> {
    let (_, eval) = one_step_predictions(model, fields, windows, mask)?;
    Ok(eval)
}

/// [`one_step_eval`] that also returns the predicted fields.
pub fn one_step_predictions(
    model: &Surrogate,
    fields: &[ScalarField],
    windows: &[SampleWindow],
    mask: Option<&BuildingMask>,
) -> Result<(Vec<ScalarField>, OneStepEval)> {
    ensure!(!windows.is_empty(), "no windows to evaluate");
    let mut preds = Vec::with_capacity(windows.len());
    let mut samples = Vec::with_capacity(windows.len());
    for w in windows {
        ensure!(
            w.target_index() < fields.len(),
            "window starting at {} needs {} fields, have {}",
            w.start,
            w.target_index() + 1,
            fields.len()
        );
        let history: Vec<&ScalarField> = w.input_indices().map(|t| &fields[t]).collect();
        let pred = model.predict(&history, mask)?;
        let truth = &fields[w.target_index()];
        let loss = layerwise_relative_loss(&Tensor::from_fields([&pred])?, &Tensor::from_fields([truth])?)?;
        samples.push(SampleScore {
            start: w.start,
            loss,
            mean_abs_error: abs_error_stats(&pred, truth).0,
        });
        preds.push(pred);
    }
    let n = samples.len() as f64;
    let eval = OneStepEval {
        mean_loss: samples.iter().map(|s| s.loss).sum::<f64>() / n,
        mean_abs_error: samples.iter().map(|s| s.mean_abs_error).sum::<f64>() / n,
        samples,
    };
    Ok((preds, eval))
}

/// Autoregressive forecast of `n_steps` fields from `initial` (oldest first).
/// Each prediction is masked before it joins the input window.
pub fn rollout(
    model: &Surrogate,
    initial: &[ScalarField],
    n_steps: usize,
    mask: Option<&BuildingMask>,
    dt: f64,
) -> Result<FieldSequence> {
    ensure!(n_steps >= 1, "rollout needs at least one step");
    let h = model.history_len();
    ensure!(
        initial.len() == h,
        "rollout needs {h} initial fields, got {}",
        initial.len()
    );
    let mut window: Vec<ScalarField> = initial.to_vec();
    let mut out = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let next = model.predict(&window.iter().collect::<Vec<_>>(), mask)?;
        window.remove(0);
        window.push(next.clone());
        out.push(next);
    }
    FieldSequence::new(dt, out)
}

/// Teacher-forced variant: step `t` is predicted from the true fields
/// `truth[start + t .. start + t + h]`.
pub fn teacher_forced(
    model: &Surrogate,
    truth: &[ScalarField],
    start: usize,
    n_steps: usize,
    mask: Option<&BuildingMask>,
    dt: f64,
) -> Result<FieldSequence> {
    ensure!(n_steps >= 1, "rollout needs at least one step");
    let h = model.history_len();
    ensure!(
        start + h + n_steps <= truth.len(),
        "teacher forcing from step {start} for {n_steps} steps needs {} fields, have {}",
        start + h + n_steps,
        truth.len()
    );
    let out = (0..n_steps)
        .map(|t| {
            let history: Vec<&ScalarField> = truth[start + t..start + t + h].iter().collect();
            model.predict(&history, mask)
        })
        .collect::<Result<Vec<_>>>()?;
    FieldSequence::new(dt, out)
}
