//! Separable cubic-spline downsampling of 3D fields.

mod spline;

pub use spline::{fit_spline, SplineCoeffs};

use crate::error::{ensure, Error, Result};
use crate::field::{apply_mask, BuildingMask, Grid3, ScalarField};
use crate::par;

/// Downsample `field` onto `target` by natural-spline interpolation along x,
/// then y, then z. Output nodes are the target cell centers. Axes whose cell
/// count is unchanged are passed through. With a mask (on `target`), solid
/// cells are re-zeroed afterwards.
pub fn downsample(
    field: &ScalarField,
    target: &Grid3,
    mask: Option<&BuildingMask>,
) -> Result<ScalarField> {
    let src = *field.grid();
    target.validate()?;
    let sd = src.dims();
    let td = target.dims();
    for a in 0..3 {
        ensure!(
            td[a] <= sd[a],
            "target has {} cells on axis {a} but source only {} (upsampling is not supported)",
            td[a],
            sd[a]
        );
        let (se, te) = (src.extent()[a], target.extent()[a]);
        ensure!(
            (se - te).abs() <= 1e-9 * se.max(te) && (src.origin[a] - target.origin[a]).abs() <= 1e-9 * se,
            "target extent on axis {a} ({te} m from {}) differs from source ({se} m from {})",
            target.origin[a],
            src.origin[a]
        );
    }
    if let Some(m) = mask {
        target.check_same(m.grid(), "downsample mask")?;
    }

    let mut dims = sd;
    let mut data = field.values().to_vec();
    for axis in 0..3 {
        if td[axis] == sd[axis] {
            continue;
        }
        let h_src = src.spacing()[axis];
        let h_dst = target.spacing()[axis];
        let o = src.origin[axis];
        let xs: Vec<f64> = (0..sd[axis]).map(|i| o + (i as f64 + 0.5) * h_src).collect();
        let at: Vec<f64> = (0..td[axis]).map(|i| o + (i as f64 + 0.5) * h_dst).collect();
        let mut new_dims = dims;
        new_dims[axis] = td[axis];
        data = resample_axis(&data, dims, new_dims, axis, &xs, &at)?;
        dims = new_dims;
    }

    let out = ScalarField::new(*target, data).map_err(|e| match e {
        Error::Numeric(m) => Error::Numeric(format!("downsampling produced {m}")),
        other => other,
    })?;
    match mask {
        Some(m) => apply_mask(&out, m),
        None => Ok(out),
    }
}

fn resample_axis(
    data: &[f64],
    dims: [usize; 3],
    new_dims: [usize; 3],
    axis: usize,
    xs: &[f64],
    at: &[f64],
) -> Result<Vec<f64>> {
    let stride = |d: [usize; 3]| match axis {
        0 => 1,
        1 => d[0],
        _ => d[0] * d[1],
    };
    let (s_old, s_new) = (stride(dims), stride(new_dims));
    // lines are enumerated by the two other axes
    let other: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    let n_lines = dims[other[0]] * dims[other[1]];
    let base = |d: [usize; 3], line: usize| {
        let mut c = [0usize; 3];
        c[other[0]] = line % dims[other[0]];
        c[other[1]] = line / dims[other[0]];
        c[0] + d[0] * (c[1] + d[1] * c[2])
    };
    let lines = par::map_range(n_lines, |line| {
        let b = base(dims, line);
        let ys: Vec<f64> = (0..dims[axis]).map(|i| data[b + i * s_old]).collect();
        spline::interpolate_line(xs, &ys, at)
    });
    let mut out = vec![0.0; new_dims.iter().product()];
    for (line, vals) in lines.into_iter().enumerate() {
        let vals = vals?;
        let b = base(new_dims, line);
        for (i, v) in vals.into_iter().enumerate() {
            out[b + i * s_new] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn same_dims_is_identity() {
        let g = Grid3::new([5, 4, 3], [2.0, 1.0, 0.5], [1.0, 0.0, 0.0]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let f = ScalarField::new(g, (0..g.len()).map(|_| rng.gen()).collect()).unwrap();
        let out = downsample(&f, &g, None).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn linear_field_is_reproduced() {
        let src = Grid3::new([16, 12, 10], [1.0, 2.0, 3.0], [0.0, -4.0, 0.0]).unwrap();
        let lin = |p: [f64; 3]| 0.5 + 1.5 * p[0] - 0.25 * p[1] + 2.0 * p[2];
        let f = ScalarField::from_fn(src, |i, j, k| lin(src.center(i, j, k))).unwrap();
        for td in [[8, 6, 5], [4, 12, 2], [16, 3, 10]] {
            let e = src.extent();
            let t = Grid3::new(td, [e[0] / td[0] as f64, e[1] / td[1] as f64, e[2] / td[2] as f64], src.origin).unwrap();
            let out = downsample(&f, &t, None).unwrap();
            for k in 0..t.nz {
                for j in 0..t.ny {
                    for i in 0..t.nx {
                        let want = lin(t.center(i, j, k));
                        assert!((out.get(i, j, k) - want).abs() <= 1e-10, "{td:?} {i} {j} {k}");
                    }
                }
            }
        }
    }

    fn sin_error(n_src: usize, n_dst: usize) -> f64 {
        let l = 1.0;
        let src = Grid3::new([n_src, 2, 2], [l / n_src as f64, 1.0, 1.0], [0.0; 3]).unwrap();
        let dst = Grid3::new([n_dst, 2, 2], [l / n_dst as f64, 1.0, 1.0], [0.0; 3]).unwrap();
        let f = ScalarField::from_fn(src, |i, j, k| {
            (2.0 * std::f64::consts::PI * src.center(i, j, k)[0] / l).sin()
        })
        .unwrap();
        let out = downsample(&f, &dst, None).unwrap();
        (0..n_dst)
            .map(|i| (out.get(i, 1, 1) - (2.0 * std::f64::consts::PI * dst.center(i, 1, 1)[0]).sin()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn fourth_order_convergence() {
        let coarse = sin_error(64, 16);
        let fine = sin_error(128, 16);
        assert!(coarse / fine >= 8.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn rejects_upsampling_and_extent_mismatch() {
        let g = Grid3::unit(4, 4, 4).unwrap();
        let f = ScalarField::zeros(g);
        assert!(downsample(&f, &Grid3::unit(8, 4, 4).unwrap(), None).is_err());
        let shrunk = Grid3::new([2, 4, 4], [1.0, 1.0, 1.0], [0.0; 3]).unwrap();
        assert!(downsample(&f, &shrunk, None).is_err());
    }

    #[test]
    fn mask_rezeroes_solids_and_range_guard() {
        let src = Grid3::unit(16, 16, 8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let f = ScalarField::new(src, (0..src.len()).map(|_| rng.gen_range(0.0..4.0)).collect()).unwrap();
        let dst = Grid3::new([8, 8, 4], [2.0; 3], [0.0; 3]).unwrap();
        let mut solid = vec![false; dst.len()];
        for n in (0..dst.len()).step_by(7) {
            solid[n] = true;
        }
        let m = BuildingMask::new(dst, solid.clone()).unwrap();
        let out = downsample(&f, &dst, Some(&m)).unwrap();
        let (lo, hi) = f.min_max();
        let r = hi - lo;
        for (n, &v) in out.values().iter().enumerate() {
            if solid[n] {
                assert_eq!(v, 0.0);
            }
            assert!(v >= lo - 0.5 * r && v <= hi + 0.5 * r);
        }
    }
}
