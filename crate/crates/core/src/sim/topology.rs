//! Cell classification and face boundary types.

use super::config::{BoundaryMode, GroundCondition, SolverConfig};
use crate::field::{BuildingMask, Grid3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Fluid,
    Solid,
    /// First cell layer behind the inflow face; velocity is prescribed.
    Inflow,
}

/// Boundary condition on one of the six domain faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceBc {
    Inflow,
    Outflow,
    FreeSlip,
    NoSlip,
}

/// What sits across one face of a fluid cell, as seen by the projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FaceKind {
    /// Another fluid cell.
    Interior,
    /// Solid cell or impermeable domain face: zero normal flux.
    Wall,
    /// Prescribed-velocity inflow cell: flux is that cell's normal velocity.
    Fixed,
    /// Open outflow face: zero-gradient velocity, zero pressure.
    Outflow,
}

/// Face order used throughout: x-, x+, y-, y+, z-, z+.
pub const FACES: usize = 6;

#[derive(Debug, Clone)]
pub struct Topology {
    pub(crate) grid: Grid3,
    pub(crate) kind: Vec<CellKind>,
    pub(crate) faces: Vec<[FaceKind; FACES]>,
    pub(crate) domain: [FaceBc; FACES],
}

/// Domain face conditions implied by the configuration.
pub fn domain_faces(cfg: &SolverConfig) -> [FaceBc; FACES] {
    match cfg.boundary {
        BoundaryMode::ClosedBox => [FaceBc::NoSlip; FACES],
        BoundaryMode::Wind => {
            let mut f = [FaceBc::FreeSlip; FACES];
            let inflow = cfg.direction.inflow_face();
            f[inflow] = FaceBc::Inflow;
            f[inflow ^ 1] = FaceBc::Outflow;
            f[4] = match cfg.ground {
                GroundCondition::NoSlip => FaceBc::NoSlip,
                GroundCondition::FreeSlip => FaceBc::FreeSlip,
            };
            f
        }
    }
}

impl Topology {
    pub fn new(mask: &BuildingMask, domain: [FaceBc; FACES]) -> Topology {
        let grid = *mask.grid();
        let mut kind: Vec<CellKind> = mask
            .solid()
            .iter()
            .map(|&s| if s { CellKind::Solid } else { CellKind::Fluid })
            .collect();
        if let Some(face) = domain.iter().position(|&f| f == FaceBc::Inflow) {
            let axis = face / 2;
            let layer = if face % 2 == 0 { 0 } else { grid.dims()[axis] - 1 };
            for (n, k) in kind.iter_mut().enumerate() {
                let (i, j, kk) = grid.ijk(n);
                if [i, j, kk][axis] == layer && *k == CellKind::Fluid {
                    *k = CellKind::Inflow;
                }
            }
        }
        let mut topo = Topology {
            grid,
            kind,
            faces: Vec::new(),
            domain,
        };
        topo.faces = (0..grid.len())
            .map(|n| {
                let mut fk = [FaceKind::Wall; FACES];
                for (f, slot) in fk.iter_mut().enumerate() {
                    *slot = match topo.neighbor(n, f) {
                        Some(m) => match topo.kind[m] {
                            CellKind::Fluid => FaceKind::Interior,
                            CellKind::Solid => FaceKind::Wall,
                            CellKind::Inflow => FaceKind::Fixed,
                        },
                        None => match domain[f] {
                            FaceBc::Outflow => FaceKind::Outflow,
                            _ => FaceKind::Wall,
                        },
                    };
                }
                fk
            })
            .collect();
        topo
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn kind(&self, n: usize) -> CellKind {
        self.kind[n]
    }

    pub fn domain_faces(&self) -> &[FaceBc; FACES] {
        &self.domain
    }

    /// Neighbor across face `f`, or `None` at the domain boundary.
    #[inline]
    pub fn neighbor(&self, n: usize, f: usize) -> Option<usize> {
        let g = &self.grid;
        let (i, j, k) = g.ijk(n);
        match f {
            0 => (i > 0).then(|| n - 1),
            1 => (i + 1 < g.nx).then(|| n + 1),
            2 => (j > 0).then(|| n - g.nx),
            3 => (j + 1 < g.ny).then(|| n + g.nx),
            4 => (k > 0).then(|| n - g.nx * g.ny),
            _ => (k + 1 < g.nz).then(|| n + g.nx * g.ny),
        }
    }

    #[inline]
    pub fn is_fluid(&self, n: usize) -> bool {
        self.kind[n] == CellKind::Fluid
    }
}
