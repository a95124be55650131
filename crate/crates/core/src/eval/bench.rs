//! Solver step versus surrogate forward timing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::surrogate::Surrogate;
use crate::error::{ensure, Result};
use crate::field::{normalize, ScalarField};
use crate::fno::{forward, Tensor};
use crate::par;
use crate::sim::{SceneSpec, Simulation, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub grid: [usize; 3],
    pub repeats: usize,
    pub threads: usize,
    pub solver_seconds: Vec<f64>,
    pub surrogate_seconds: Vec<f64>,
    pub solver_median: f64,
    pub surrogate_median: f64,
    /// `solver_median / surrogate_median`.
    pub speedup: f64,
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall time of one solver step and one surrogate forward on the
/// scene's grid. One extra warmup run of each is discarded. The solver is
/// spun up for `spinup` steps first so the timed steps see a developed flow.
pub fn bench(
    model: &Surrogate,
    scene: &SceneSpec,
    cfg: &SolverConfig,
    repeats: usize,
    spinup: usize,
) -> Result<BenchReport> {
    ensure!(repeats >= 1, "need at least one timed repeat");
    let mut sim = Simulation::new(scene, cfg)?;
    let mut history: Vec<ScalarField> = Vec::new();
    for _ in 0..spinup.max(model.history_len()) {
        sim.step()?;
        history.push(sim.magnitude());
    }
    let mut solver = Vec::with_capacity(repeats);
    for r in 0..=repeats {
        let t = Instant::now();
        sim.step()?;
        let dt = t.elapsed().as_secs_f64();
        if r > 0 {
            solver.push(dt);
        }
    }
    let h = model.history_len();
    let norm = model.norm();
    let normed = history[history.len() - h..]
        .iter()
        .map(|f| normalize(f, &norm))
        .collect::<Result<Vec<_>>>()?;
    let input = Tensor::from_fields(&normed)?;
    let mut surrogate = Vec::with_capacity(repeats);
    for r in 0..=repeats {
        let t = Instant::now();
        let out = forward(&input, model.params())?;
        let dt = t.elapsed().as_secs_f64();
        std::hint::black_box(out);
        if r > 0 {
            surrogate.push(dt);
        }
    }
    let (sm, fm) = (median(&solver), median(&surrogate));
    Ok(BenchReport {
        grid: scene.grid.dims(),
        repeats,
        threads: par::threads(),
        solver_seconds: solver,
        surrogate_seconds: surrogate,
        solver_median: sm,
        surrogate_median: fm,
        speedup: sm / fm,
    })
}
