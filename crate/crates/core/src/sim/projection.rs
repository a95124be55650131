//! Pressure projection on the collocated grid.
//!
//! Face velocities are averages of the adjacent cell values; the discrete
//! divergence `D` sums those face fluxes and the gradient `G` differences the
//! face-averaged pressure. With the boundary rules in [`FaceKind`] the
//! homogeneous divergence satisfies `D = -G^T`, so the pressure operator
//! `-D G = G^T G` is symmetric positive semidefinite and the projection is an
//! orthogonal one: it never adds kinetic energy.

use super::config::PoissonMethod;
use super::topology::{FaceKind, Topology, FACES};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy)]
pub struct ProjectionSettings {
    pub method: PoissonMethod,
    /// Max-norm divergence target in lattice units.
    pub tolerance: f64,
    pub max_iters: usize,
    pub damping: f64,
    /// Converts physical divergence (1/s) to lattice units.
    pub lattice_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProjectionReport {
    pub iterations: usize,
    /// Max-norm divergence after the correction, lattice units.
    pub residual: f64,
    pub converged: bool,
}

#[inline]
fn spacing(topo: &Topology, f: usize) -> f64 {
    topo.grid.spacing()[f / 2]
}

#[inline]
fn sign(f: usize) -> f64 {
    if f % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Discrete divergence (1/s) of the velocity at fluid cells; 0 elsewhere.
pub fn divergence(topo: &Topology, vel: [&[f64]; 3]) -> Vec<f64> {
    par::map_range(topo.grid.len(), |n| {
        if !topo.is_fluid(n) {
            return 0.0;
        }
        let mut d = 0.0;
        for f in 0..FACES {
            let c = vel[f / 2];
            let flux = match topo.faces[n][f] {
                FaceKind::Interior => 0.5 * (c[n] + c[topo.neighbor(n, f).unwrap()]),
                FaceKind::Wall => 0.0,
                FaceKind::Fixed => c[topo.neighbor(n, f).unwrap()],
                FaceKind::Outflow => c[n],
            };
            d += sign(f) * flux / spacing(topo, f);
        }
        d
    })
}

/// Homogeneous divergence of a correction field (fixed faces carry no flux).
fn divergence_hom(topo: &Topology, q: [&[f64]; 3], out: &mut [f64]) {
    par::for_each_mut(out, |n, o| {
        *o = 0.0;
        if !topo.is_fluid(n) {
            return;
        }
        let mut d = 0.0;
        for f in 0..FACES {
            let c = q[f / 2];
            let flux = match topo.faces[n][f] {
                FaceKind::Interior => 0.5 * (c[n] + c[topo.neighbor(n, f).unwrap()]),
                FaceKind::Wall | FaceKind::Fixed => 0.0,
                FaceKind::Outflow => c[n],
            };
            d += sign(f) * flux / spacing(topo, f);
        }
        *o = d;
    });
}

/// Cell-centered pressure gradient along `axis` at fluid cells.
fn gradient(topo: &Topology, p: &[f64], axis: usize, out: &mut [f64]) {
    par::for_each_mut(out, |n, o| {
        *o = 0.0;
        if !topo.is_fluid(n) {
            return;
        }
        let mut g = 0.0;
        for f in [2 * axis, 2 * axis + 1] {
            let pf = match topo.faces[n][f] {
                FaceKind::Interior => 0.5 * (p[n] + p[topo.neighbor(n, f).unwrap()]),
                FaceKind::Wall | FaceKind::Fixed => p[n],
                FaceKind::Outflow => 0.0,
            };
            g += sign(f) * pf;
        }
        *o = g / spacing(topo, 2 * axis);
    });
}

struct Operator<'a> {
    topo: &'a Topology,
    g: [Vec<f64>; 3],
}

impl<'a> Operator<'a> {
    fn new(topo: &'a Topology) -> Self {
        let n = topo.grid.len();
        Operator {
            topo,
            g: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    /// out = G^T G x
    fn apply(&mut self, x: &[f64], out: &mut [f64]) {
        for a in 0..3 {
            gradient(self.topo, x, a, &mut self.g[a]);
        }
        divergence_hom(self.topo, [&self.g[0], &self.g[1], &self.g[2]], out);
        par::for_each_mut(out, |_, o| *o = -*o);
    }

    fn diagonal(&self) -> Vec<f64> {
        let topo = self.topo;
        par::map_range(topo.grid.len(), |n| {
            if !topo.is_fluid(n) {
                return 0.0;
            }
            let mut d = 0.0;
            for axis in 0..3 {
                let h = spacing(topo, 2 * axis);
                let weight = |f: usize| match topo.faces[n][f] {
                    FaceKind::Interior => 0.5,
                    FaceKind::Wall | FaceKind::Fixed => 1.0,
                    FaceKind::Outflow => 0.0,
                };
                let own = (weight(2 * axis + 1) - weight(2 * axis)) / h;
                d += own * own;
                for f in [2 * axis, 2 * axis + 1] {
                    if topo.faces[n][f] == FaceKind::Interior {
                        d += 0.25 / (h * h);
                    }
                }
            }
            d
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::sum_range(a.len(), |i| a[i] * b[i])
}

fn max_abs(a: &[f64]) -> f64 {
    par::max_range(a.len(), |i| a[i].abs())
}

/// Make `vel` discretely divergence-free in place. `p` is the warm start and
/// receives the pressure potential.
pub fn project(
    topo: &Topology,
    vel: [&mut Vec<f64>; 3],
    p: &mut [f64],
    s: &ProjectionSettings,
) -> Result<ProjectionReport> {
    let n = topo.grid.len();
    let [u, v, w] = vel;
    let b = divergence(topo, [u, v, w]);
    let mut op = Operator::new(topo);
    let diag = op.diagonal();
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
    for (pi, &d) in p.iter_mut().zip(&diag) {
        if d == 0.0 {
            *pi = 0.0;
        }
    }

    // solve G^T G p = -b; the residual r equals minus the corrected divergence
    let mut mp = vec![0.0; n];
    op.apply(p, &mut mp);
    let mut r: Vec<f64> = (0..n).map(|i| -b[i] - mp[i]).collect();
    let mut res = max_abs(&r) * s.lattice_scale;
    let mut iters = 0;

    match s.method {
        PoissonMethod::ConjugateGradient => {
            let mut z: Vec<f64> = (0..n).map(|i| inv[i] * r[i]).collect();
            let mut d = z.clone();
            let mut rz = dot(&r, &z);
            let mut q = vec![0.0; n];
            while res > s.tolerance && iters < s.max_iters {
                op.apply(&d, &mut q);
                let dq = dot(&d, &q);
                if dq <= 0.0 || !dq.is_finite() {
                    break;
                }
                let alpha = rz / dq;
                par::for_each_mut(p, |i, x| *x += alpha * d[i]);
                par::for_each_mut(&mut r, |i, x| *x -= alpha * q[i]);
                iters += 1;
                res = max_abs(&r) * s.lattice_scale;
                par::for_each_mut(&mut z, |i, x| *x = inv[i] * r[i]);
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                par::for_each_mut(&mut d, |i, x| *x = z[i] + beta * *x);
            }
        }
        PoissonMethod::Jacobi => {
            while res > s.tolerance && iters < s.max_iters {
                let omega = s.damping;
                par::for_each_mut(p, |i, x| *x += omega * inv[i] * r[i]);
                op.apply(p, &mut mp);
                par::for_each_mut(&mut r, |i, x| *x = -b[i] - mp[i]);
                iters += 1;
                res = max_abs(&r) * s.lattice_scale;
            }
        }
    }

    for (a, c) in [&mut *u, &mut *v, &mut *w].into_iter().enumerate() {
        gradient(topo, p, a, &mut op.g[a]);
        let g = &op.g[a];
        par::for_each_mut(c, |i, x| {
            if topo.is_fluid(i) {
                *x -= g[i];
            }
        });
    }
    // measured on the corrected field rather than trusted from the recurrence
    let after = divergence(topo, [u, v, w]);
    let residual = max_abs(&after) * s.lattice_scale;
    if !residual.is_finite() {
        return Err(Error::Numeric("pressure projection produced non-finite velocity".into()));
    }
    let report = ProjectionReport {
        iterations: iters,
        residual,
        converged: residual <= s.tolerance,
    };
    if !report.converged {
        return Err(Error::NonConvergence {
            iterations: iters,
            residual,
            tolerance: s.tolerance,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{BuildingMask, Grid3};
    use crate::sim::config::SolverConfig;
    use crate::sim::topology::domain_faces;
    use rand::{Rng, SeedableRng};

    fn settings(method: PoissonMethod) -> ProjectionSettings {
        ProjectionSettings {
            method,
            tolerance: 1e-4,
            max_iters: 2000,
            damping: 0.8,
            lattice_scale: 1.0,
        }
    }

    fn scene_topology() -> Topology {
        let g = Grid3::new([10, 8, 6], [1.0, 1.0, 0.5], [0.0; 3]).unwrap();
        let mut solid = vec![false; g.len()];
        for k in 0..3 {
            for j in 3..5 {
                for i in 4..6 {
                    solid[g.idx(i, j, k)] = true;
                }
            }
        }
        Topology::new(&BuildingMask::new(g, solid).unwrap(), domain_faces(&SolverConfig::default()))
    }

    #[test]
    fn operator_is_symmetric_psd() {
        let topo = scene_topology();
        let n = topo.grid.len();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut op = Operator::new(&topo);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for i in 0..n {
            if !topo.is_fluid(i) {
                x[i] = 0.0;
                y[i] = 0.0;
            }
        }
        let (mut mx, mut my) = (vec![0.0; n], vec![0.0; n]);
        op.apply(&x, &mut mx);
        op.apply(&y, &mut my);
        let (a, b) = (dot(&mx, &y), dot(&x, &my));
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        assert!(dot(&x, &mx) >= 0.0);

        // diagonal agrees with unit-vector probes
        let diag = op.diagonal();
        for probe in [0usize, 17, 123, n - 1] {
            if !topo.is_fluid(probe) {
                continue;
            }
            let mut e = vec![0.0; n];
            e[probe] = 1.0;
            let mut me = vec![0.0; n];
            op.apply(&e, &mut me);
            assert!((me[probe] - diag[probe]).abs() < 1e-12);
        }
    }

    #[test]
    fn random_velocity_becomes_divergence_free() {
        let topo = scene_topology();
        let n = topo.grid.len();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut comps: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|i| if topo.is_fluid(i) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect())
            .collect();
        let mut p = vec![0.0; n];
        let [u, v, w] = &mut comps[..] else { unreachable!() };
        let rep = project(&topo, [u, v, w], &mut p, &settings(PoissonMethod::ConjugateGradient)).unwrap();
        assert!(rep.converged);
        let div = divergence(&topo, [u, v, w]);
        assert!(max_abs(&div) <= 1e-4);
    }

    #[test]
    fn uniform_channel_flow_is_untouched() {
        let g = Grid3::unit(8, 6, 5).unwrap();
        let cfg = SolverConfig::default();
        let topo = Topology::new(&BuildingMask::all_fluid(g), domain_faces(&cfg));
        let mut u = vec![2.5; g.len()];
        let mut v = vec![0.0; g.len()];
        let mut w = vec![0.0; g.len()];
        let mut p = vec![0.0; g.len()];
        project(&topo, [&mut u, &mut v, &mut w], &mut p, &settings(PoissonMethod::ConjugateGradient)).unwrap();
        assert!(u.iter().all(|&x| (x - 2.5).abs() < 1e-10));
        assert!(v.iter().chain(&w).all(|&x| x.abs() < 1e-10));
    }

    #[test]
    fn enclosed_cell_stays_at_rest() {
        let g = Grid3::unit(5, 5, 5).unwrap();
        let mut solid = vec![true; g.len()];
        let c = g.idx(2, 2, 2);
        solid[c] = false;
        // a second fluid pocket so the test exercises a non-trivial system
        solid[g.idx(0, 0, 0)] = false;
        solid[g.idx(1, 0, 0)] = false;
        let topo = Topology::new(&BuildingMask::new(g, solid).unwrap(), [super::super::topology::FaceBc::NoSlip; 6]);
        let mut u = vec![0.0; g.len()];
        u[g.idx(0, 0, 0)] = 1.0;
        let mut v = vec![0.0; g.len()];
        let mut w = vec![0.0; g.len()];
        let mut p = vec![0.0; g.len()];
        project(&topo, [&mut u, &mut v, &mut w], &mut p, &settings(PoissonMethod::ConjugateGradient)).unwrap();
        assert_eq!((u[c], v[c], w[c]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn projection_never_adds_energy_in_a_closed_box() {
        let g = Grid3::unit(8, 8, 8).unwrap();
        let topo = Topology::new(&BuildingMask::all_fluid(g), [super::super::topology::FaceBc::NoSlip; 6]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut c: Vec<Vec<f64>> = (0..3).map(|_| (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let ke = |c: &[Vec<f64>]| c.iter().flatten().map(|x| x * x).sum::<f64>();
        let before = ke(&c);
        let mut p = vec![0.0; g.len()];
        let [u, v, w] = &mut c[..] else { unreachable!() };
        project(&topo, [u, v, w], &mut p, &settings(PoissonMethod::ConjugateGradient)).unwrap();
        assert!(ke(&c) <= before);
    }

    #[test]
    fn jacobi_reports_non_convergence() {
        let topo = scene_topology();
        let n = topo.grid.len();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut c: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|i| if topo.is_fluid(i) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect())
            .collect();
        let mut p = vec![0.0; n];
        let s = ProjectionSettings { max_iters: 5, ..settings(PoissonMethod::Jacobi) };
        let [u, v, w] = &mut c[..] else { unreachable!() };
        match project(&topo, [u, v, w], &mut p, &s) {
            Err(Error::NonConvergence { iterations, residual, .. }) => {
                assert_eq!(iterations, 5);
                assert!(residual > 1e-4);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
