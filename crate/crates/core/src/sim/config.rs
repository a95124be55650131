use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Direction the wind blows *from*.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindDirection {
    West,
    North,
    East,
    South,
}

impl WindDirection {
    pub const ALL: [WindDirection; 4] = [
        WindDirection::West,
        WindDirection::North,
        WindDirection::East,
        WindDirection::South,
    ];

    pub fn degrees(self) -> u32 {
        match self {
            WindDirection::West => 0,
            WindDirection::North => 90,
            WindDirection::East => 180,
            WindDirection::South => 270,
        }
    }

    pub fn from_degrees(deg: u32) -> Option<WindDirection> {
        Self::ALL.into_iter().find(|d| d.degrees() == deg % 360)
    }

    /// Face index the wind enters through (0 = x-, 1 = x+, 2 = y-, 3 = y+).
    pub fn inflow_face(self) -> usize {
        match self {
            WindDirection::West => 0,
            WindDirection::East => 1,
            WindDirection::South => 2,
            WindDirection::North => 3,
        }
    }

    /// Unit velocity vector of the incoming wind.
    pub fn unit_vector(self) -> [f64; 3] {
        match self {
            WindDirection::West => [1.0, 0.0, 0.0],
            WindDirection::East => [-1.0, 0.0, 0.0],
            WindDirection::South => [0.0, 1.0, 0.0],
            WindDirection::North => [0.0, -1.0, 0.0],
        }
    }
}

impl std::str::FromStr for WindDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "west" | "w" => Ok(WindDirection::West),
            "north" | "n" => Ok(WindDirection::North),
            "east" | "e" => Ok(WindDirection::East),
            "south" | "s" => Ok(WindDirection::South),
            other => other
                .parse::<u32>()
                .ok()
                .and_then(WindDirection::from_degrees)
                .ok_or_else(|| format!("unknown wind direction '{s}' (west/north/east/south or 0/90/180/270)")),
        }
    }
}

impl std::fmt::Display for WindDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            WindDirection::West => "west",
            WindDirection::North => "north",
            WindDirection::East => "east",
            WindDirection::South => "south",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpOrder {
    Linear,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonMethod {
    /// Jacobi-preconditioned conjugate gradients.
    ConjugateGradient,
    /// Damped Jacobi sweeps.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundCondition {
    NoSlip,
    FreeSlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Inflow/outflow pair chosen by the wind direction, free-slip sides and top.
    Wind,
    /// Every face is a no-slip wall; no inflow forcing.
    ClosedBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    Rest,
    /// Fluid cells start at the inflow power-law profile.
    Profile,
}

/// Solver parameters. Lengths in meters, velocities in m/s. The Reynolds
/// number is based on `u_ref` and `z_ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub reynolds: f64,
    pub prandtl: f64,
    pub grashof: f64,
    pub smagorinsky: f64,
    pub courant: f64,
    pub u_ref: f64,
    pub z_ref: f64,
    pub alpha: f64,
    pub direction: WindDirection,
    pub thermal: bool,
    pub prandtl_t: f64,
    /// Dimensionless temperature imposed at the ground when thermal is on.
    pub ground_theta: f64,
    pub interp: InterpOrder,
    pub poisson: PoissonMethod,
    /// Max-norm divergence target in lattice units (`div * h_min / u_ref`).
    pub projection_tolerance: f64,
    pub max_pressure_iters: usize,
    pub jacobi_damping: f64,
    pub ground: GroundCondition,
    pub boundary: BoundaryMode,
    pub initial: InitialCondition,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            reynolds: 1.0e5,
            prandtl: 0.71,
            grashof: 0.0,
            smagorinsky: 0.17,
            courant: 0.4,
            u_ref: 5.0,
            z_ref: 40.0,
            alpha: 0.25,
            direction: WindDirection::West,
            thermal: false,
            prandtl_t: 0.9,
            ground_theta: 0.0,
            interp: InterpOrder::Cubic,
            poisson: PoissonMethod::ConjugateGradient,
            projection_tolerance: 1e-4,
            max_pressure_iters: 400,
            jacobi_damping: 0.8,
            ground: GroundCondition::NoSlip,
            boundary: BoundaryMode::Wind,
            initial: InitialCondition::Profile,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.reynolds > 0.0, "Reynolds number must be positive");
        ensure!(self.prandtl > 0.0, "Prandtl number must be positive");
        ensure!(self.prandtl_t > 0.0, "turbulent Prandtl number must be positive");
        ensure!(self.grashof >= 0.0, "Grashof number must be non-negative");
        ensure!(
            (0.1..=0.24).contains(&self.smagorinsky),
            "Smagorinsky constant {} outside [0.1, 0.24]",
            self.smagorinsky
        );
        ensure!(
            self.courant > 0.0 && self.courant < 1.0,
            "Courant number must lie in (0, 1)"
        );
        ensure!(self.u_ref > 0.0 && self.z_ref > 0.0, "u_ref and z_ref must be positive");
        ensure!(self.alpha >= 0.0, "power-law exponent must be non-negative");
        ensure!(self.projection_tolerance > 0.0, "projection tolerance must be positive");
        ensure!(self.max_pressure_iters >= 1, "need at least one pressure iteration");
        ensure!(
            self.jacobi_damping > 0.0 && self.jacobi_damping <= 1.0,
            "Jacobi damping must lie in (0, 1]"
        );
        Ok(())
    }

    /// Molecular kinematic viscosity in m^2/s.
    pub fn viscosity(&self) -> f64 {
        self.u_ref * self.z_ref / self.reynolds
    }

    /// Power-law inflow speed at height `z` above ground, held constant below `z_min`.
    pub fn inflow_speed(&self, z: f64, z_min: f64) -> f64 {
        let z = z.max(z_min).max(0.0);
        if self.alpha == 0.0 {
            return self.u_ref;
        }
        self.u_ref * (z / self.z_ref).powf(self.alpha)
    }

    /// Time step from the Courant target on the reference velocity.
    pub fn time_step(&self, min_spacing: f64) -> f64 {
        self.courant * min_spacing / self.u_ref
    }
}
