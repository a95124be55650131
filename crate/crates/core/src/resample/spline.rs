//! Natural cubic splines.
//!
//! On interval `i` the spline is `a + b t + c t^2 + d t^3` with
//! `t = x - xs[i]`. Second derivatives vanish at both end knots.

use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SplineCoeffs {
    xs: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    y_last: f64,
    /// Set when only two knots were given and the spline is a straight line.
    pub degraded_to_linear: bool,
}

impl SplineCoeffs {
    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn intervals(&self) -> usize {
        self.a.len()
    }

    /// Index of the interval owning `x` (clamped to the valid range).
    fn interval(&self, x: f64) -> usize {
        let n = self.a.len();
        // partition_point gives the first knot > x
        let p = self.xs.partition_point(|&k| k <= x);
        p.saturating_sub(1).min(n - 1)
    }

    /// Value at `x`; `x` must lie within the knot range.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.xs[0], *self.xs.last().unwrap());
        if !(lo..=hi).contains(&x) {
            return Err(Error::InvalidArgument(format!(
                "x = {x} outside spline range [{lo}, {hi}]"
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        if x == *self.xs.last().unwrap() {
            return self.y_last;
        }
        let i = self.interval(x);
        let t = x - self.xs[i];
        self.a[i] + t * (self.b[i] + t * (self.c[i] + t * self.d[i]))
    }

    /// First and second derivative at `x` using interval `i`.
    pub fn derivatives_on(&self, i: usize, x: f64) -> (f64, f64) {
        let t = x - self.xs[i];
        (
            self.b[i] + t * (2.0 * self.c[i] + 3.0 * t * self.d[i]),
            2.0 * self.c[i] + 6.0 * t * self.d[i],
        )
    }
}

/// Fit the natural cubic spline through `(xs, ys)` with the Thomas algorithm.
pub fn fit_spline(xs: &[f64], ys: &[f64]) -> Result<SplineCoeffs> {
    ensure!(
        xs.len() == ys.len(),
        "{} abscissae but {} ordinates",
        xs.len(),
        ys.len()
    );
    ensure!(xs.len() >= 2, "a spline needs at least 2 knots, got {}", xs.len());
    ensure!(
        xs.windows(2).all(|w| w[1] > w[0]),
        "spline knots must be strictly increasing"
    );
    ensure!(
        xs.iter().chain(ys).all(|v| v.is_finite()),
        "spline data must be finite"
    );
    let n = xs.len() - 1;
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();

    if n == 1 {
        log::warn!("spline through 2 points degrades to linear interpolation");
        return Ok(SplineCoeffs {
            xs: xs.to_vec(),
            a: vec![ys[0]],
            b: vec![(ys[1] - ys[0]) / h[0]],
            c: vec![0.0],
            d: vec![0.0],
            y_last: ys[1],
            degraded_to_linear: true,
        });
    }

    // second derivatives m[0..=n], m[0] = m[n] = 0
    let mut m = vec![0.0; n + 1];
    let interior = n - 1;
    let mut diag = vec![0.0; interior];
    let mut rhs = vec![0.0; interior];
    for r in 0..interior {
        let i = r + 1;
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        rhs[r] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
    }
    // forward sweep; sub- and super-diagonal of row r are h[r] and h[r+1]
    for r in 1..interior {
        let w = h[r] / diag[r - 1];
        diag[r] -= w * h[r];
        rhs[r] -= w * rhs[r - 1];
    }
    for r in (0..interior).rev() {
        let upper = if r + 1 < interior { h[r + 1] * m[r + 2] } else { 0.0 };
        m[r + 1] = (rhs[r] - upper) / diag[r];
    }

    let mut s = SplineCoeffs {
        xs: xs.to_vec(),
        a: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        d: Vec::with_capacity(n),
        y_last: ys[n],
        degraded_to_linear: false,
    };
    for i in 0..n {
        s.a.push(ys[i]);
        s.b.push((ys[i + 1] - ys[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0);
        s.c.push(m[i] / 2.0);
        s.d.push((m[i + 1] - m[i]) / (6.0 * h[i]));
    }
    Ok(s)
}

/// Fit once, then evaluate at every point of `at`.
pub(crate) fn interpolate_line(xs: &[f64], ys: &[f64], at: &[f64]) -> Result<Vec<f64>> {
    let s = fit_spline(xs, ys)?;
    Ok(at.iter().map(|&x| s.eval_unchecked(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense Gaussian elimination with partial pivoting; test oracle only.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let p = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, p);
            b.swap(col, p);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    /// Global-form coefficients of each cubic from the full 4n x 4n system of
    /// interpolation, C1, C2 and natural end conditions.
    fn dense_spline(xs: &[f64], ys: &[f64]) -> Vec<[f64; 4]> {
        let n = xs.len() - 1;
        let size = 4 * n;
        let mut a = vec![vec![0.0; size]; size];
        let mut b = vec![0.0; size];
        let val = |x: f64| [1.0, x, x * x, x * x * x];
        let d1 = |x: f64| [0.0, 1.0, 2.0 * x, 3.0 * x * x];
        let d2 = |x: f64| [0.0, 0.0, 2.0, 6.0 * x];
        let mut row = 0;
        for i in 0..n {
            for (x, y) in [(xs[i], ys[i]), (xs[i + 1], ys[i + 1])] {
                a[row][4 * i..4 * i + 4].copy_from_slice(&val(x));
                b[row] = y;
                row += 1;
            }
        }
        for i in 0..n - 1 {
            let x = xs[i + 1];
            for f in [d1, d2] {
                let r = f(x);
                for k in 0..4 {
                    a[row][4 * i + k] = r[k];
                    a[row][4 * (i + 1) + k] = -r[k];
                }
                row += 1;
            }
        }
        a[row][0..4].copy_from_slice(&d2(xs[0]));
        row += 1;
        a[row][4 * (n - 1)..4 * n].copy_from_slice(&d2(xs[n]));
        let sol = dense_solve(a, b);
        (0..n).map(|i| [sol[4 * i], sol[4 * i + 1], sol[4 * i + 2], sol[4 * i + 3]]).collect()
    }

    #[test]
    fn constant_data() {
        let s = fit_spline(&[0.0, 1.0, 2.5, 4.0], &[3.0; 4]).unwrap();
        assert!(s.a.iter().all(|&a| a == 3.0));
        assert!(s.b.iter().chain(&s.c).chain(&s.d).all(|&v| v == 0.0));
        assert_eq!(s.eval(1.75).unwrap(), 3.0);
    }

    #[test]
    fn linear_data() {
        let xs = [0.0, 0.5, 1.7, 2.0, 3.1];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let s = fit_spline(&xs, &ys).unwrap();
        for i in 0..s.intervals() {
            assert!(s.c[i].abs() < 1e-12 && s.d[i].abs() < 1e-12);
            assert!((s.b[i] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn four_point_case_matches_dense_solve() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 1.0, 0.0, 1.0];
        let s = fit_spline(&xs, &ys).unwrap();
        let oracle = dense_spline(&xs, &ys);
        for i in 0..3 {
            // convert local form to global form around xs[i]
            let x0 = xs[i];
            let (a, b, c, d) = (s.a[i], s.b[i], s.c[i], s.d[i]);
            let global = [
                a - b * x0 + c * x0 * x0 - d * x0 * x0 * x0,
                b - 2.0 * c * x0 + 3.0 * d * x0 * x0,
                c - 3.0 * d * x0,
                d,
            ];
            for k in 0..4 {
                assert!((global[k] - oracle[i][k]).abs() < 1e-10, "interval {i} coeff {k}");
            }
        }
        // midpoints against the oracle polynomial
        for i in 0..3 {
            let x = xs[i] + 0.5;
            let o = oracle[i];
            let want = o[0] + o[1] * x + o[2] * x * x + o[3] * x * x * x;
            assert!((s.eval(x).unwrap() - want).abs() < 1e-10);
        }
        // 4 M1 + M2 = -12 and M1 + 4 M2 = 12 give M1 = -4, M2 = 4
        assert!((s.c[1] * 2.0 + 4.0).abs() < 1e-12);
    }

    #[test]
    fn knots_are_interpolated() {
        let xs = [0.0, 0.3, 1.1, 1.2, 2.0];
        let ys = [1.0, -2.0, 0.5, 0.25, 3.0];
        let s = fit_spline(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            assert_eq!(s.eval(*x).unwrap(), y);
        }
    }

    #[test]
    fn errors_and_degenerate_input() {
        assert!(fit_spline(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_spline(&[0.0, 2.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_spline(&[0.0], &[1.0]).is_err());
        let s = fit_spline(&[0.0, 2.0], &[1.0, 3.0]).unwrap();
        assert!(s.degraded_to_linear);
        assert_eq!(s.eval(1.0).unwrap(), 2.0);
        assert!(s.eval(2.5).is_err());
        assert!(s.eval(-0.1).is_err());
    }

    proptest! {
        #[test]
        fn natural_c2_and_interpolation(
            ys in prop::collection::vec(-10.0f64..10.0, 3..20),
            gaps in prop::collection::vec(0.1f64..3.0, 20),
        ) {
            let mut xs = vec![0.0];
            for g in gaps.iter().take(ys.len() - 1) {
                xs.push(xs.last().unwrap() + g);
            }
            let s = fit_spline(&xs, &ys).unwrap();
            let n = s.intervals();
            for (x, y) in xs.iter().zip(&ys) {
                prop_assert_eq!(s.eval(*x).unwrap(), *y);
            }
            // natural ends
            prop_assert!(s.derivatives_on(0, xs[0]).1.abs() < 1e-9);
            prop_assert!(s.derivatives_on(n - 1, xs[n]).1.abs() < 1e-9);
            // continuity at interior knots
            for i in 1..n {
                let x = xs[i];
                let t = x - xs[i - 1];
                let left = s.a[i - 1] + t * (s.b[i - 1] + t * (s.c[i - 1] + t * s.d[i - 1]));
                prop_assert!((left - s.a[i]).abs() < 1e-9);
                let (l1, l2) = s.derivatives_on(i - 1, x);
                let (r1, r2) = s.derivatives_on(i, x);
                prop_assert!((l1 - r1).abs() < 1e-9 * (1.0 + l1.abs()));
                prop_assert!((l2 - r2).abs() < 1e-9 * (1.0 + l2.abs()));
            }
        }
    }
}
