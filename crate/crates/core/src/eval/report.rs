//! Aggregated metrics and their JSON/CSV serialization.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bench::BenchReport;
use super::rollout::{one_step_predictions, OneStepEval};
use super::stats::{conditional_error, height_profile, pdf_on_bins, ConditionalBin, Histogram, LayerStat, StepError};
use super::surrogate::Surrogate;
use crate::error::{ensure, Error, Result};
use crate::field::{BuildingMask, SampleWindow, ScalarField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub pdf_bin_width: f64,
    pub conditional_bin_width: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            pdf_bin_width: 0.1,
            conditional_bin_width: 0.25,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Usually the inflow direction.
    pub scenario: String,
    pub one_step: Option<OneStepEval>,
    pub pdf_truth: Option<Histogram>,
    pub pdf_pred: Option<Histogram>,
    pub conditional_error: Vec<ConditionalBin>,
    pub height_profile_truth: Vec<LayerStat>,
    pub height_profile_pred: Vec<LayerStat>,
    pub rollout: Vec<StepError>,
    pub timing: Option<BenchReport>,
}

pub const PDF_CSV: &str = "pdf.csv";
pub const COND_ERROR_CSV: &str = "cond_error.csv";
pub const HEIGHT_PROFILE_CSV: &str = "height_profile.csv";
pub const ROLLOUT_ERROR_CSV: &str = "rollout_error.csv";
pub const BENCH_CSV: &str = "bench.csv";
pub const METRICS_JSON: &str = "metrics.json";

/// One-step metrics, PDFs, conditional error and height profiles of the
/// predictions for `windows`.
pub fn evaluate_scenario(
    model: &Surrogate,
    fields: &[ScalarField],
    windows: &[SampleWindow],
    mask: Option<&BuildingMask>,
    scenario: &str,
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    let (preds, one_step) = one_step_predictions(model, fields, windows, mask)?;
    let truth: Vec<&ScalarField> = windows.iter().map(|w| &fields[w.target_index()]).collect();
    let pred: Vec<&ScalarField> = preds.iter().collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for f in truth.iter().chain(&pred) {
        let (a, b) = f.min_max();
        lo = lo.min(a);
        hi = hi.max(b);
    }
    ensure!(lo.is_finite() && hi.is_finite(), "non-finite values in evaluated fields");
    let w = opts.pdf_bin_width;
    ensure!(w > 0.0, "pdf bin width must be positive");
    let lower = (lo / w).floor() * w;
    let count = ((hi - lower) / w).floor() as usize + 1;
    let report = MetricsReport {
        scenario: scenario.to_string(),
        one_step: Some(one_step),
        pdf_truth: Some(pdf_on_bins(&truth, lower, w, count)?),
        pdf_pred: Some(pdf_on_bins(&pred, lower, w, count)?),
        conditional_error: conditional_error(&pred, &truth, opts.conditional_bin_width)?,
        height_profile_truth: height_profile(&truth)?,
        height_profile_pred: height_profile(&pred)?,
        rollout: Vec::new(),
        timing: None,
    };
    report.validate()?;
    Ok(report)
}

impl MetricsReport {
    /// Every reported statistic is finite.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Numeric(format!("non-finite {what} in metrics report")));
        if let Some(o) = &self.one_step {
            if !o.mean_loss.is_finite() || o.samples.iter().any(|s| !s.loss.is_finite()) {
                return bad("one-step loss");
            }
        }
        for h in self.pdf_truth.iter().chain(&self.pdf_pred) {
            if h.density.iter().any(|d| !d.is_finite()) {
                return bad("density");
            }
        }
        if self.conditional_error.iter().any(|b| b.mean_abs_error.is_some_and(|e| !e.is_finite())) {
            return bad("conditional error");
        }
        if self
            .height_profile_truth
            .iter()
            .chain(&self.height_profile_pred)
            .any(|l| !l.mean.is_finite() || !l.std.is_finite())
        {
            return bad("height profile");
        }
        if self
            .rollout
            .iter()
            .any(|s| !s.mean_abs_error.is_finite() || !s.std_abs_error.is_finite())
        {
            return bad("rollout error");
        }
        Ok(())
    }

    pub fn pdf_csv(&self) -> String {
        let mut s = String::from("bin_lower,bin_upper,truth_density,pred_density\n");
        let (t, p) = (self.pdf_truth.as_ref(), self.pdf_pred.as_ref());
        let n = t.map_or(0, |h| h.density.len()).max(p.map_or(0, |h| h.density.len()));
        let cell = |h: Option<&Histogram>, b: usize| {
            h.and_then(|h| h.density.get(b)).map_or(String::new(), |d| d.to_string())
        };
        for b in 0..n {
            let (lo, hi) = t.or(p).unwrap().bin_edges(b);
            let _ = writeln!(s, "{lo},{hi},{},{}", cell(t, b), cell(p, b));
        }
        s
    }

    pub fn cond_error_csv(&self) -> String {
        let mut s = String::from("bin_lower,bin_upper,count,mean_abs_error,empty\n");
        for b in &self.conditional_error {
            let e = b.mean_abs_error.map_or(String::new(), |e| e.to_string());
            let _ = writeln!(s, "{},{},{},{e},{}", b.lower, b.upper, b.count, b.mean_abs_error.is_none());
        }
        s
    }

    pub fn height_profile_csv(&self) -> String {
        let mut s = String::from("k,height,truth_mean,truth_std,pred_mean,pred_std\n");
        let n = self.height_profile_truth.len().max(self.height_profile_pred.len());
        for k in 0..n {
            let t = self.height_profile_truth.get(k);
            let p = self.height_profile_pred.get(k);
            let h = t.or(p).unwrap().height;
            let f = |l: Option<&LayerStat>, g: fn(&LayerStat) -> f64| l.map_or(String::new(), |l| g(l).to_string());
            let _ = writeln!(
                s,
                "{k},{h},{},{},{},{}",
                f(t, |l| l.mean),
                f(t, |l| l.std),
                f(p, |l| l.mean),
                f(p, |l| l.std)
            );
        }
        s
    }

    pub fn rollout_csv(&self) -> String {
        let mut s = String::from("step,mean_abs_err,std_abs_err_per_cell\n");
        for r in &self.rollout {
            let _ = writeln!(s, "{},{},{}", r.step, r.mean_abs_error, r.std_abs_error);
        }
        s
    }

    pub fn bench_csv(&self) -> String {
        let mut s = String::from("kind,repeat,seconds\n");
        if let Some(b) = &self.timing {
            for (kind, xs) in [("solver_step", &b.solver_seconds), ("surrogate_forward", &b.surrogate_seconds)] {
                for (i, x) in xs.iter().enumerate() {
                    let _ = writeln!(s, "{kind},{i},{x}");
                }
            }
            let _ = writeln!(s, "solver_step,median,{}", b.solver_median);
            let _ = writeln!(s, "surrogate_forward,median,{}", b.surrogate_median);
            let _ = writeln!(s, "speedup,median,{}", b.speedup);
        }
        s
    }

    /// `metrics.json` plus one CSV per populated section.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, text: String| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        put(METRICS_JSON, serde_json::to_string_pretty(self)?)?;
        if self.pdf_truth.is_some() || self.pdf_pred.is_some() {
            put(PDF_CSV, self.pdf_csv())?;
        }
        if !self.conditional_error.is_empty() {
            put(COND_ERROR_CSV, self.cond_error_csv())?;
        }
        if !self.height_profile_truth.is_empty() || !self.height_profile_pred.is_empty() {
            put(HEIGHT_PROFILE_CSV, self.height_profile_csv())?;
        }
        if !self.rollout.is_empty() {
            put(ROLLOUT_ERROR_CSV, self.rollout_csv())?;
        }
        if self.timing.is_some() {
            put(BENCH_CSV, self.bench_csv())?;
        }
        Ok(())
    }
}
