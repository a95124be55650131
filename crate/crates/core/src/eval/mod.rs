//! One-step and rollout evaluation, field statistics, timing and export.

mod bench;
mod report;
mod rollout;
mod stats;
mod surrogate;
mod vtk;

pub use bench::{bench, median, BenchReport};
pub use report::{
    evaluate_scenario, EvalOptions, MetricsReport, BENCH_CSV, COND_ERROR_CSV, HEIGHT_PROFILE_CSV, METRICS_JSON,
    PDF_CSV, ROLLOUT_ERROR_CSV,
};
pub use rollout::{one_step_eval, one_step_predictions, rollout, teacher_forced, OneStepEval, SampleScore};
pub use stats::{
    abs_error_stats, accumulated_error, conditional_error, height_profile, pdf_on_bins, velocity_pdf, ConditionalBin,
    Histogram, LayerStat, StepError,
};
pub use surrogate::Surrogate;
pub use vtk::{encode_vtk, write_vtk};
