//! Smagorinsky subgrid viscosity.

use crate::field::Grid3;
use crate::par;

/// Central difference along `axis`, one-sided at the domain edges.
#[inline]
fn ddx(f: &[f64], g: &Grid3, i: usize, j: usize, k: usize, axis: usize) -> f64 {
    let (n, h) = match axis {
        0 => (g.nx, g.dx),
        1 => (g.ny, g.dy),
        _ => (g.nz, g.dz),
    };
    let c = [i, j, k][axis];
    let at = |m: usize| {
        let mut p = [i, j, k];
        p[axis] = m;
        f[g.idx(p[0], p[1], p[2])]
    };
    let lo = c.saturating_sub(1);
    let hi = (c + 1).min(n - 1);
    (at(hi) - at(lo)) / ((hi - lo) as f64 * h)
}

/// Strain-rate magnitude `sqrt(2 S_ij S_ij)` at every cell.
pub fn strain_rate(u: &[f64], v: &[f64], w: &[f64], grid: &Grid3) -> Vec<f64> {
    let comps = [u, v, w];
    par::map_range(grid.len(), |n| {
        let (i, j, k) = grid.ijk(n);
        let mut grad = [[0.0; 3]; 3];
        for (a, f) in comps.iter().enumerate() {
            for (b, g) in grad[a].iter_mut().enumerate() {
                *g = ddx(f, grid, i, j, k, b);
            }
        }
        let mut ss = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let s = 0.5 * (grad[a][b] + grad[b][a]);
                ss += s * s;
            }
        }
        (2.0 * ss).sqrt()
    })
}

/// Turbulent viscosity `(c_s * delta)^2 |S|`.
pub fn smagorinsky(u: &[f64], v: &[f64], w: &[f64], grid: &Grid3, cs: f64, delta: f64) -> Vec<f64> {
    let scale = (cs * delta) * (cs * delta);
    strain_rate(u, v, w, grid)
        .into_iter()
        .map(|s| scale * s)
        .collect()
}

/// Filter width: cube root of the cell volume.
pub fn filter_width(grid: &Grid3) -> f64 {
    (grid.dx * grid.dy * grid.dz).cbrt()
}
