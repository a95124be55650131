//! Transient incompressible flow over block buildings: semi-Lagrangian
//! advection, explicit diffusion with a Smagorinsky closure, and a pressure
//! projection on a collocated grid.

pub mod config;
pub mod interp;
pub mod les;
pub mod projection;
pub mod scene;
pub mod solver;
pub mod topology;

pub use config::{
    BoundaryMode, GroundCondition, InitialCondition, InterpOrder, PoissonMethod, SolverConfig, WindDirection,
};
pub use interp::interpolate;
pub use les::{filter_width, smagorinsky, strain_rate};
pub use projection::{divergence, project, ProjectionReport, ProjectionSettings};
pub use scene::{rasterize_scene, Building, SceneSpec};
pub use solver::{
    backtrace, run_simulation, run_simulation_with, RunSummary, Simulation, SimulationOutput, SolverState,
    StepReport, StepSummary,
};
pub use topology::{CellKind, FaceBc, Topology};

/// Power-law inflow speed at height `z` (meters above the domain floor).
pub fn inflow_profile(z: f64, cfg: &SolverConfig, grid: &crate::field::Grid3) -> f64 {
    cfg.inflow_speed(z, 0.5 * grid.dz)
}
