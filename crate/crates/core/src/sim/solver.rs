//! Fractional-step semi-Lagrangian solver.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{InitialCondition, SolverConfig};
use super::interp::sample_limited;
use super::les::{filter_width, smagorinsky};
use super::projection::{divergence, project, ProjectionReport, ProjectionSettings};
use super::scene::SceneSpec;
use super::topology::{domain_faces, CellKind, FaceBc, Topology, FACES};
use crate::error::{ensure, Error, Result};
use crate::field::{BuildingMask, FieldSequence, Grid3, ScalarField};
use crate::par;

/// Full prognostic state on the collocated grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    /// Pressure potential of the last projection (m^2/s).
    pub p: Vec<f64>,
    pub theta: Option<Vec<f64>>,
    pub nu_t: Vec<f64>,
    pub mask: BuildingMask,
    pub t: f64,
}

impl SolverState {
    pub fn at_rest(mask: BuildingMask, thermal: bool) -> SolverState {
        let n = mask.grid().len();
        SolverState {
            u: vec![0.0; n],
            v: vec![0.0; n],
            w: vec![0.0; n],
            p: vec![0.0; n],
            theta: thermal.then(|| vec![0.0; n]),
            nu_t: vec![0.0; n],
            mask,
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid3 {
        self.mask.grid()
    }

    /// Velocity magnitude, 0 in solids.
    pub fn magnitude(&self) -> ScalarField {
        let values = (0..self.u.len())
            .map(|n| {
                if self.mask.is_solid(n) {
                    0.0
                } else {
                    (self.u[n] * self.u[n] + self.v[n] * self.v[n] + self.w[n] * self.w[n]).sqrt()
                }
            })
            .collect();
        ScalarField::from_parts(*self.grid(), values)
    }

    /// Kinetic energy per unit density over fluid cells (m^5/s^2).
    pub fn kinetic_energy(&self) -> f64 {
        let g = self.grid();
        let vol = g.dx * g.dy * g.dz;
        let (u, v, w) = (&self.u, &self.v, &self.w);
        let mask = &self.mask;
        vol * par::sum_range(u.len(), |n| {
            if mask.is_solid(n) {
                0.0
            } else {
                0.5 * (u[n] * u[n] + v[n] * v[n] + w[n] * w[n])
            }
        })
    }
}

/// Departure point of a particle arriving at `x` with `velocity` after `dt`.
/// The point is clamped to the domain box; if it falls in a solid cell it is
/// pulled back along the path to the last fluid position.
pub fn backtrace(x: [f64; 3], velocity: [f64; 3], dt: f64, mask: &BuildingMask) -> [f64; 3] {
    let g = mask.grid();
    let ext = g.extent();
    let mut d = [0.0; 3];
    for a in 0..3 {
        d[a] = (x[a] - velocity[a] * dt).clamp(g.origin[a], g.origin[a] + ext[a]);
    }
    if !in_solid(mask, d) {
        return d;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if in_solid(mask, lerp(x, d, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lerp(x, d, lo)
}

fn lerp(a: [f64; 3], b: [f64; 3], s: f64) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i] + s * (b[i] - a[i]))
}

fn in_solid(mask: &BuildingMask, p: [f64; 3]) -> bool {
    let g = mask.grid();
    let cell = |a: usize, n: usize, h: f64| (((p[a] - g.origin[a]) / h).floor().max(0.0) as usize).min(n - 1);
    mask.is_solid(g.idx(cell(0, g.nx, g.dx), cell(1, g.ny, g.dy), cell(2, g.nz, g.dz)))
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub projection: ProjectionReport,
    /// Cells where the subgrid viscosity hit the explicit-diffusion limit.
    pub nu_t_capped: usize,
    pub kinetic_energy: f64,
    pub wall_seconds: f64,
}

pub struct Simulation {
    cfg: SolverConfig,
    topo: Topology,
    state: SolverState,
    dt: f64,
    steps: usize,
    /// Prescribed speed of the inflow layer per k.
    inflow: Vec<f64>,
    nu_max: f64,
}

impl Simulation {
    pub fn new(scene: &SceneSpec, cfg: &SolverConfig) -> Result<Simulation> {
        let mask = scene.rasterize()?;
        Simulation::with_mask(mask, cfg)
    }

    pub fn with_mask(mask: BuildingMask, cfg: &SolverConfig) -> Result<Simulation> {
        cfg.validate()?;
        let g = *mask.grid();
        let topo = Topology::new(&mask, domain_faces(cfg));
        let dt = cfg.time_step(g.min_spacing());
        let z_min = 0.5 * g.dz;
        let inflow = (0..g.nz)
            .map(|k| cfg.inflow_speed((k as f64 + 0.5) * g.dz, z_min))
            .collect();
        let lap: f64 = g.spacing().iter().map(|h| 1.0 / (h * h)).sum();
        let nu_max = 0.45 / (dt * lap);
        ensure!(
            cfg.viscosity() < nu_max,
            "molecular viscosity {} violates the explicit diffusion limit {nu_max}",
            cfg.viscosity()
        );
        let mut sim = Simulation {
            cfg: cfg.clone(),
            topo,
            state: SolverState::at_rest(mask, cfg.thermal),
            dt,
            steps: 0,
            inflow,
            nu_max,
        };
        if cfg.initial == InitialCondition::Profile {
            let dir = cfg.direction.unit_vector();
            for n in 0..g.len() {
                if sim.topo.kind(n) == CellKind::Fluid {
                    let s = sim.inflow[g.ijk(n).2];
                    sim.state.u[n] = s * dir[0];
                    sim.state.v[n] = s * dir[1];
                    sim.state.w[n] = s * dir[2];
                }
            }
        }
        sim.apply_boundaries();
        if cfg.initial == InitialCondition::Profile {
            let settings = sim.projection_settings();
            let st = &mut sim.state;
            project(&sim.topo, [&mut st.u, &mut st.v, &mut st.w], &mut st.p, &settings)?;
        }
        Ok(sim)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut SolverState {
        &mut self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn magnitude(&self) -> ScalarField {
        self.state.magnitude().round_to_f32()
    }

    fn projection_settings(&self) -> ProjectionSettings {
        ProjectionSettings {
            method: self.cfg.poisson,
            tolerance: self.cfg.projection_tolerance,
            max_iters: self.cfg.max_pressure_iters,
            damping: self.cfg.jacobi_damping,
            lattice_scale: self.topo.grid().min_spacing() / self.cfg.u_ref,
        }
    }

    /// Max-norm divergence of the current velocity in lattice units.
    pub fn divergence_max(&self) -> f64 {
        let s = &self.state;
        let d = divergence(&self.topo, [&s.u, &s.v, &s.w]);
        d.iter().fold(0.0f64, |m, x| m.max(x.abs())) * self.projection_settings().lattice_scale
    }

    /// Zero velocity in solids and impose the inflow layer.
    fn apply_boundaries(&mut self) {
        let g = *self.topo.grid();
        let dir = self.cfg.direction.unit_vector();
        let st = &mut self.state;
        for n in 0..g.len() {
            match self.topo.kind(n) {
                CellKind::Solid => {
                    st.u[n] = 0.0;
                    st.v[n] = 0.0;
                    st.w[n] = 0.0;
                    if let Some(th) = st.theta.as_mut() {
                        th[n] = 0.0;
                    }
                }
                CellKind::Inflow => {
                    let s = self.inflow[g.ijk(n).2];
                    st.u[n] = s * dir[0];
                    st.v[n] = s * dir[1];
                    st.w[n] = s * dir[2];
                    if let Some(th) = st.theta.as_mut() {
                        th[n] = 0.0;
                    }
                }
                CellKind::Fluid => {}
            }
        }
    }

    /// Advance one time step.
    pub fn step(&mut self) -> Result<StepReport> {
        let start = Instant::now();
        let g = *self.topo.grid();
        let dt = self.dt;
        let topo = &self.topo;
        let cfg = &self.cfg;

        // subgrid viscosity from the old velocity
        let st = &self.state;
        let mut nu_t = smagorinsky(&st.u, &st.v, &st.w, &g, cfg.smagorinsky, filter_width(&g));
        let cap = self.nu_max - cfg.viscosity();
        let mut capped = 0;
        for (n, x) in nu_t.iter_mut().enumerate() {
            if topo.kind(n) == CellKind::Solid {
                *x = 0.0;
            } else if *x > cap {
                *x = cap;
                capped += 1;
            }
        }
        check_finite("turbulent viscosity", &[&nu_t])?;

        // (i) advection
        let thermal = st.theta.as_ref();
        let advected: Vec<[f64; 4]> = par::map_range(g.len(), |n| {
            if topo.kind(n) != CellKind::Fluid {
                return [st.u[n], st.v[n], st.w[n], thermal.map_or(0.0, |t| t[n])];
            }
            let (i, j, k) = g.ijk(n);
            let x = g.center(i, j, k);
            let d = backtrace(x, [st.u[n], st.v[n], st.w[n]], dt, &st.mask);
            [
                sample_limited(&st.u, &g, d, cfg.interp),
                sample_limited(&st.v, &g, d, cfg.interp),
                sample_limited(&st.w, &g, d, cfg.interp),
                thermal.map_or(0.0, |t| sample_limited(t, &g, d, cfg.interp)),
            ]
        });
        let ua: Vec<f64> = advected.iter().map(|a| a[0]).collect();
        let va: Vec<f64> = advected.iter().map(|a| a[1]).collect();
        let wa: Vec<f64> = advected.iter().map(|a| a[2]).collect();
        let ta: Option<Vec<f64>> = thermal.map(|_| advected.iter().map(|a| a[3]).collect());
        drop(advected);
        check_finite("advection", &[&ua, &va, &wa])?;

        // (ii) explicit diffusion
        let nu0 = cfg.viscosity();
        let nu_eff: Vec<f64> = nu_t.iter().map(|x| nu0 + x).collect();
        let mut u = diffuse(topo, &ua, Ghost::Velocity(0), &nu_eff, dt);
        let mut v = diffuse(topo, &va, Ghost::Velocity(1), &nu_eff, dt);
        let mut w = diffuse(topo, &wa, Ghost::Velocity(2), &nu_eff, dt);
        let mut theta = ta.map(|t| {
            let alpha: Vec<f64> = nu_t.iter().map(|x| nu0 / cfg.prandtl + x / cfg.prandtl_t).collect();
            diffuse(topo, &t, Ghost::Scalar { ground: cfg.ground_theta }, &alpha, dt)
        });
        check_finite("diffusion", &[&u, &v, &w])?;

        // (iii) buoyancy
        if let Some(th) = theta.as_ref() {
            let scale = cfg.grashof / (cfg.reynolds * cfg.reynolds) * cfg.u_ref * cfg.u_ref / cfg.z_ref;
            if scale != 0.0 {
                for n in 0..g.len() {
                    if topo.kind(n) == CellKind::Fluid {
                        w[n] -= dt * scale * th[n];
                    }
                }
            }
            check_finite("buoyancy", &[&w, th])?;
        }

        // (iv) boundary conditions
        std::mem::swap(&mut self.state.u, &mut u);
        std::mem::swap(&mut self.state.v, &mut v);
        std::mem::swap(&mut self.state.w, &mut w);
        if let Some(th) = theta.as_mut() {
            std::mem::swap(self.state.theta.as_mut().unwrap(), th);
        }
        self.state.nu_t = nu_t;
        self.apply_boundaries();

        // (v) projection
        let settings = self.projection_settings();
        let st = &mut self.state;
        let projection = project(&self.topo, [&mut st.u, &mut st.v, &mut st.w], &mut st.p, &settings)?;
        check_finite("projection", &[&st.u, &st.v, &st.w])?;

        st.t += dt;
        self.steps += 1;
        Ok(StepReport {
            step: self.steps,
            time: st.t,
            projection,
            nu_t_capped: capped,
            kinetic_energy: st.kinetic_energy(),
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

fn check_finite(stage: &str, arrays: &[&[f64]]) -> Result<()> {
    for a in arrays {
        if let Some(n) = a.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value after {stage} at cell {n}")));
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Ghost {
    /// Velocity component along the given axis.
    Velocity(usize),
    /// Temperature: adiabatic walls, fixed value at the ground.
    Scalar { ground: f64 },
}

/// One explicit step of `d phi/dt = div(nu grad phi)` at fluid cells.
fn diffuse(topo: &Topology, phi: &[f64], ghost: Ghost, nu: &[f64], dt: f64) -> Vec<f64> {
    let g = topo.grid();
    let h = g.spacing();
    par::map_range(phi.len(), |n| {
        if topo.kind(n) != CellKind::Fluid {
            return phi[n];
        }
        let pc = phi[n];
        let mut acc = 0.0;
        for f in 0..FACES {
            let axis = f / 2;
            let (other, nu_f) = match topo.neighbor(n, f) {
                Some(m) => match topo.kind(m) {
                    CellKind::Solid => (
                        match ghost {
                            Ghost::Velocity(_) => -pc,
                            Ghost::Scalar { .. } => pc,
                        },
                        nu[n],
                    ),
                    _ => (phi[m], 0.5 * (nu[n] + nu[m])),
                },
                None => {
                    let bc = topo.domain_faces()[f];
                    let o = match ghost {
                        Ghost::Velocity(c) => match bc {
                            FaceBc::NoSlip => -pc,
                            FaceBc::FreeSlip if c == axis => -pc,
                            _ => pc,
                        },
                        Ghost::Scalar { ground } => {
                            if f == 4 && bc == FaceBc::NoSlip {
                                2.0 * ground - pc
                            } else {
                                pc
                            }
                        }
                    };
                    (o, nu[n])
                }
            };
            acc += nu_f * (other - pc) / (h[axis] * h[axis]);
        }
        pc + dt * acc
    })
}

/// Per-step entry of the run summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub residual: f64,
    pub iterations: usize,
    pub wall_seconds: f64,
}

/// Run summary written next to the generated fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dt: f64,
    pub n_steps: usize,
    pub output_stride: usize,
    pub threads: usize,
    pub grid: Grid3,
    pub config: SolverConfig,
    pub steps: Vec<StepSummary>,
    pub total_wall_seconds: f64,
}

impl RunSummary {
    pub fn mean_step_seconds(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.wall_seconds).sum::<f64>() / self.steps.len() as f64
    }
}

pub struct SimulationOutput {
    /// Velocity magnitude at every `output_stride`-th step (f32-rounded).
    pub sequence: FieldSequence,
    pub final_state: SolverState,
    pub summary: RunSummary,
}

/// Run `n_steps` steps and keep the velocity magnitude every `output_stride` steps.
pub fn run_simulation(
    scene: &SceneSpec,
    cfg: &SolverConfig,
    n_steps: usize,
    output_stride: usize,
) -> Result<SimulationOutput> {
    run_simulation_with(scene, cfg, n_steps, output_stride, |_, _| Ok(()))
}

/// Like [`run_simulation`], calling `observe(step, state)` after every step.
pub fn run_simulation_with(
    scene: &SceneSpec,
    cfg: &SolverConfig,
    n_steps: usize,
    output_stride: usize,
    mut observe: impl FnMut(usize, &SolverState) -> Result<()>,
) -> Result<SimulationOutput> {
    ensure!(n_steps >= 1, "n_steps must be at least 1");
    ensure!(output_stride >= 1, "output stride must be at least 1");
    let start = Instant::now();
    let mut sim = Simulation::new(scene, cfg)?;
    let mut fields = Vec::with_capacity(n_steps / output_stride);
    let mut steps = Vec::with_capacity(n_steps);
    for s in 1..=n_steps {
        let rep = sim.step().map_err(|e| match e {
            Error::Numeric(m) => Error::Numeric(format!("step {s}: {m}")),
            Error::NonConvergence { .. } => {
                log::error!("projection failed at step {s}");
                e
            }
            other => other,
        })?;
        log::debug!(
            "step {s}: residual {:.2e} after {} iterations",
            rep.projection.residual,
            rep.projection.iterations
        );
        steps.push(StepSummary {
            residual: rep.projection.residual,
            iterations: rep.projection.iterations,
            wall_seconds: rep.wall_seconds,
        });
        if s % output_stride == 0 {
            fields.push(sim.magnitude());
        }
        observe(s, sim.state())?;
    }
    let summary = RunSummary {
        dt: sim.dt(),
        n_steps,
        output_stride,
        threads: par::threads(),
        grid: scene.grid,
        config: cfg.clone(),
        steps,
        total_wall_seconds: start.elapsed().as_secs_f64(),
    };
    let sequence = FieldSequence::new(sim.dt() * output_stride as f64, fields)?;
    Ok(SimulationOutput {
        sequence,
        final_state: sim.state,
        summary,
    })
}
