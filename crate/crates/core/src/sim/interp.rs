//! Trilinear and tricubic (4-point Lagrange) sampling of cell-centered data.

use super::config::InterpOrder;
use crate::field::{Grid3, ScalarField};

/// Continuous cell index of `x` along one axis, clamped to the node range.
#[inline]
fn node_coord(x: f64, origin: f64, h: f64, n: usize) -> f64 {
    ((x - origin) / h - 0.5).clamp(0.0, (n - 1) as f64)
}

#[inline]
fn linear_stencil(s: f64, n: usize) -> (usize, [f64; 2]) {
    let b = (s.floor() as usize).min(n - 2);
    let t = s - b as f64;
    (b, [1.0 - t, t])
}

/// Four-node Lagrange stencil. Near the edges the stencil shifts inward so it
/// stays one-sided but keeps cubic exactness.
#[inline]
fn cubic_stencil(s: f64, n: usize) -> (usize, [f64; 4]) {
    let b = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let x = s - b as f64;
    let (x1, x2, x3) = (x - 1.0, x - 2.0, x - 3.0);
    (
        b,
        [
            -x1 * x2 * x3 / 6.0,
            x * x2 * x3 / 2.0,
            -x * x1 * x3 / 2.0,
            x * x1 * x2 / 6.0,
        ],
    )
}

/// Base node, weights and stencil width along one axis.
#[inline]
fn stencil(s: f64, n: usize, order: InterpOrder) -> (usize, [f64; 4], usize) {
    if order == InterpOrder::Cubic && n >= 4 {
        let (b, w) = cubic_stencil(s, n);
        (b, w, 4)
    } else {
        let (b, w) = linear_stencil(s, n);
        (b, [w[0], w[1], 0.0, 0.0], 2)
    }
}

/// Sample `data` (laid out on `grid`) at physical position `p`.
pub fn sample(data: &[f64], grid: &Grid3, p: [f64; 3], order: InterpOrder) -> f64 {
    let sx = node_coord(p[0], grid.origin[0], grid.dx, grid.nx);
    let sy = node_coord(p[1], grid.origin[1], grid.dy, grid.ny);
    let sz = node_coord(p[2], grid.origin[2], grid.dz, grid.nz);
    let (bx, wx, lx) = stencil(sx, grid.nx, order);
    let (by, wy, ly) = stencil(sy, grid.ny, order);
    let (bz, wz, lz) = stencil(sz, grid.nz, order);
    let mut acc = 0.0;
    for (c, &w3) in wz[..lz].iter().enumerate() {
        for (b, &w2) in wy[..ly].iter().enumerate() {
            let row = grid.idx(bx, by + b, bz + c);
            let mut line = 0.0;
            for (a, &w1) in wx[..lx].iter().enumerate() {
                line += w1 * data[row + a];
            }
            acc += w3 * w2 * line;
        }
    }
    acc
}

/// Like [`sample`] but clamped to the range of the 8 surrounding nodes, which
/// keeps semi-Lagrangian advection free of new extrema.
pub fn sample_limited(data: &[f64], grid: &Grid3, p: [f64; 3], order: InterpOrder) -> f64 {
    let v = sample(data, grid, p, order);
    if order == InterpOrder::Linear {
        return v;
    }
    let sx = node_coord(p[0], grid.origin[0], grid.dx, grid.nx);
    let sy = node_coord(p[1], grid.origin[1], grid.dy, grid.ny);
    let sz = node_coord(p[2], grid.origin[2], grid.dz, grid.nz);
    let (bx, _) = linear_stencil(sx, grid.nx);
    let (by, _) = linear_stencil(sy, grid.ny);
    let (bz, _) = linear_stencil(sz, grid.nz);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in 0..2 {
        for b in 0..2 {
            for a in 0..2 {
                let x = data[grid.idx(bx + a, by + b, bz + c)];
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
    }
    v.clamp(lo, hi)
}

/// Interpolate a scalar field at a physical position.
pub fn interpolate(field: &ScalarField, p: [f64; 3], order: InterpOrder) -> f64 {
    sample(field.values(), field.grid(), p, order)
}
