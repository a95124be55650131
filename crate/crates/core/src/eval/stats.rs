//! Distribution statistics over fields.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::field::ScalarField;

/// Uniform-bin density estimate. `density[b]` integrates to 1 over the bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub bin_width: f64,
    pub density: Vec<f64>,
    pub samples: usize,
}

impl Histogram {
    pub fn bin_edges(&self, b: usize) -> (f64, f64) {
        let lo = self.lower + b as f64 * self.bin_width;
        (lo, lo + self.bin_width)
    }

    /// Probability mass per bin.
    pub fn mass(&self) -> Vec<f64> {
        self.density.iter().map(|d| d * self.bin_width).collect()
    }
}

fn bin_of(v: f64, lower: f64, width: f64, count: usize) -> usize {
    (((v - lower) / width).floor().max(0.0) as usize).min(count - 1)
}

fn check_width(bin_width: f64) -> Result<()> {
    ensure!(
        bin_width > 0.0 && bin_width.is_finite(),
        "bin width must be positive, got {bin_width}"
    );
    Ok(())
}

/// Bins aligned to multiples of `bin_width` that cover `[min, max]`.
fn bin_range(min: f64, max: f64, bin_width: f64) -> (f64, usize) {
    let lower = (min / bin_width).floor() * bin_width;
    let count = ((max - lower) / bin_width).floor() as usize + 1;
    (lower, count)
}

fn finite_range<'a>(fields: impl IntoIterator<Item = &'a ScalarField>) -> Result<(f64, f64, usize)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut n = 0;
    for f in fields {
        for &v in f.values() {
            if !v.is_finite() {
                return Err(Error::Numeric("non-finite value in field".into()));
            }
            lo = lo.min(v);
            hi = hi.max(v);
            n += 1;
        }
    }
    ensure!(n > 0, "no values to summarize");
    Ok((lo, hi, n))
}

/// Velocity-magnitude PDF over every cell of every field (solid zeros
/// included).
pub fn velocity_pdf(fields: &[&ScalarField], bin_width: f64) -> Result<Histogram> {
    check_width(bin_width)?;
    let (lo, hi, _) = finite_range(fields.iter().copied())?;
    let (lower, count) = bin_range(lo, hi, bin_width);
    pdf_on_bins(fields, lower, bin_width, count)
}

/// PDF on a caller-chosen set of bins; values outside land in the end bins.
pub fn pdf_on_bins(fields: &[&ScalarField], lower: f64, bin_width: f64, count: usize) -> Result<Histogram> {
    check_width(bin_width)?;
    ensure!(count >= 1, "need at least one bin");
    let (_, _, n) = finite_range(fields.iter().copied())?;
    let mut counts = vec![0usize; count];
    for f in fields {
        for &v in f.values() {
            counts[bin_of(v, lower, bin_width, count)] += 1;
        }
    }
    let scale = 1.0 / (n as f64 * bin_width);
    Ok(Histogram {
        lower,
        bin_width,
        density: counts.iter().map(|&c| c as f64 * scale).collect(),
        samples: n,
    })
}

/// Mean absolute error of the cells whose truth falls in one bin. `None`
/// marks an empty bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_abs_error: Option<f64>,
}

/// Mean `|pred - truth|` per truth-velocity bin of width `bin_width`,
/// covering `[min(0, min truth), max truth]`.
pub fn conditional_error(
    pred: &[&ScalarField],
    truth: &[&ScalarField],
    bin_width: f64,
) -> Result<Vec<ConditionalBin>> {
    check_width(bin_width)?;
    ensure!(
        pred.len() == truth.len(),
        "{} predictions for {} truth fields",
        pred.len(),
        truth.len()
    );
    for (p, t) in pred.iter().zip(truth) {
        p.grid().check_same(t.grid(), "conditional_error")?;
    }
    let (lo, hi, _) = finite_range(truth.iter().copied())?;
    finite_range(pred.iter().copied())?;
    let (lower, count) = bin_range(lo.min(0.0), hi, bin_width);
    let mut sum = vec![0.0; count];
    let mut n = vec![0usize; count];
    for (p, t) in pred.iter().zip(truth) {
        for (&pv, &tv) in p.values().iter().zip(t.values()) {
            let b = bin_of(tv, lower, bin_width, count);
            sum[b] += (pv - tv).abs();
            n[b] += 1;
        }
    }
    Ok((0..count)
        .map(|b| {
            let lo = lower + b as f64 * bin_width;
            ConditionalBin {
                lower: lo,
                upper: lo + bin_width,
                count: n[b],
                mean_abs_error: (n[b] > 0).then(|| sum[b] / n[b] as f64),
            }
        })
        .collect())
}

/// Mean and population standard deviation of one z-layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerStat {
    pub k: usize,
    pub height: f64,
    pub mean: f64,
    pub std: f64,
}

/// Per-layer statistics over all `(x, y)` cells of all fields, solids
/// included.
pub fn height_profile(fields: &[&ScalarField]) -> Result<Vec<LayerStat>> {
    ensure!(!fields.is_empty(), "no fields to profile");
    let grid = *fields[0].grid();
    for f in fields {
        f.grid().check_same(&grid, "height_profile")?;
    }
    let [nx, ny, nz] = grid.dims();
    let plane = nx * ny;
    let n = (plane * fields.len()) as f64;
    Ok((0..nz)
        .map(|k| {
            let layer = || fields.iter().flat_map(move |f| f.values()[k * plane..(k + 1) * plane].iter());
            let mean = layer().sum::<f64>() / n;
            let var = layer().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            LayerStat {
                k,
                height: grid.center(0, 0, k)[2],
                mean,
                std: var.sqrt(),
            }
        })
        .collect())
}

/// Absolute-error statistics at one rollout step (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepError {
    pub step: usize,
    pub mean_abs_error: f64,
    /// Population standard deviation of `|pred - truth|` across cells.
    pub std_abs_error: f64,
}

/// Per-step mean and spread of `|pred - truth|` over every cell.
pub fn accumulated_error(pred: &[ScalarField], truth: &[ScalarField]) -> Result<Vec<StepError>> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predicted steps vs {} reference steps",
            pred.len(),
            truth.len()
        )));
    }
    pred.iter()
        .zip(truth)
        .enumerate()
        .map(|(t, (p, r))| {
            p.grid().check_same(r.grid(), &format!("rollout step {}", t + 1))?;
            let (mean, std) = abs_error_stats(p, r);
            Ok(StepError {
                step: t + 1,
                mean_abs_error: mean,
                std_abs_error: std,
            })
        })
        .collect()
}

/// Mean and population standard deviation of `|a - b|` over all cells.
pub fn abs_error_stats(a: &ScalarField, b: &ScalarField) -> (f64, f64) {
    let n = a.values().len() as f64;
    let err = || a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs());
    let mean = err().sum::<f64>() / n;
    let var = err().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid3;
    use proptest::prelude::*;

    fn field(dims: [usize; 3], values: Vec<f64>) -> ScalarField {
        ScalarField::new(Grid3::new(dims, [1.0; 3], [0.0; 3]).unwrap(), values).unwrap()
    }

    #[test]
    fn pdf_examples() {
        let c = field([2, 2, 2], vec![3.3; 8]);
        let h = velocity_pdf(&[&c], 0.5).unwrap();
        assert_eq!(h.density.iter().filter(|&&d| d > 0.0).count(), 1);
        assert!(h.density.contains(&2.0));

        let mut v = vec![0.0; 4];
        v.extend([1.0; 4]);
        let h = velocity_pdf(&[&field([2, 2, 2], v)], 0.5).unwrap();
        let occupied: Vec<f64> = h.mass().into_iter().filter(|&m| m > 0.0).collect();
        assert_eq!(occupied, vec![0.5, 0.5]);
        assert_eq!(h.bin_edges(0), (0.0, 0.5));
        assert!(velocity_pdf(&[&c], 0.0).is_err());
    }

    #[test]
    fn conditional_two_levels() {
        // truth 1.0 on 6 cells with errors 0.5 and 0.25 alternating;
        // truth 2.0 on 2 cells with error 1.0
        let t = field([2, 2, 2], vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0]);
        let p = field([2, 2, 2], vec![1.5, 0.75, 1.5, 0.75, 1.5, 0.75, 3.0, 1.0]);
        let bins = conditional_error(&[&p], &[&t], 0.25).unwrap();
        assert_eq!(bins.len(), 9);
        assert_eq!(bins[4].mean_abs_error, Some(0.375));
        assert_eq!(bins[4].count, 6);
        assert_eq!(bins[8].mean_abs_error, Some(1.0));
        assert!(bins[0].mean_abs_error.is_none() && bins[0].count == 0);
        let exact = conditional_error(&[&t], &[&t], 0.25).unwrap();
        assert!(exact.iter().all(|b| b.mean_abs_error.is_none_or(|e| e == 0.0)));
    }

    #[test]
    fn height_profile_examples() {
        let g = Grid3::new([3, 2, 4], [1.0, 1.0, 2.0], [0.0; 3]).unwrap();
        let f = ScalarField::from_fn(g, |_, _, k| k as f64).unwrap();
        for l in height_profile(&[&f]).unwrap() {
            assert_eq!(l.mean, l.k as f64);
            assert_eq!(l.std, 0.0);
            assert_eq!(l.height, 2.0 * l.k as f64 + 1.0);
        }
        let c = ScalarField::from_fn(g, |_, _, _| 1.5).unwrap();
        assert!(height_profile(&[&c]).unwrap().iter().all(|l| l.mean == 1.5 && l.std == 0.0));
    }

    #[test]
    fn accumulated_error_examples() {
        let g = Grid3::new([4, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
        let truth = ScalarField::from_fn(g, |i, j, k| (i + 2 * j + k) as f64).unwrap();
        let zero = accumulated_error(&[truth.clone()], &[truth.clone()]).unwrap();
        assert_eq!((zero[0].mean_abs_error, zero[0].std_abs_error), (0.0, 0.0));
        // 4 solid cells out of 16 stay exact; fluid cells are off by 0.5
        let solid = |i: usize, j: usize| i == 0 && j == 0;
        let t = ScalarField::from_fn(g, |i, j, k| if solid(i, j) { 0.0 } else { truth.get(i, j, k) }).unwrap();
        let p = ScalarField::from_fn(g, |i, j, k| if solid(i, j) { 0.0 } else { t.get(i, j, k) + 0.5 }).unwrap();
        let e = accumulated_error(&[p.clone(), p], &[t.clone(), t]).unwrap();
        assert_eq!(e[1].step, 2);
        assert!((e[0].mean_abs_error - 0.5 * 14.0 / 16.0).abs() < 1e-15);
        assert!(matches!(accumulated_error(&[truth.clone()], &[]), Err(Error::Shape(_))));
    }

    fn welford(xs: impl Iterator<Item = f64>) -> (f64, f64) {
        let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
        for x in xs {
            n += 1.0;
            let d = x - mean;
            mean += d / n;
            m2 += d * (x - mean);
        }
        (mean, (m2 / n).sqrt())
    }

    proptest! {
        #[test]
        fn pdf_mass_sums_to_one(values in proptest::collection::vec(0.0f64..12.0, 27), w in 0.01f64..3.0) {
            let h = velocity_pdf(&[&field([3, 3, 3], values)], w).unwrap();
            let total: f64 = h.density.iter().map(|d| d * w).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(h.density.iter().all(|d| *d >= 0.0));
        }

        #[test]
        fn shifted_prediction_gives_the_shift(ks in proptest::collection::vec(0u32..400, 18), c in 0u32..16) {
            let t: Vec<f64> = ks.iter().map(|&k| k as f64 / 64.0).collect();
            let shift = c as f64 / 8.0;
            let p: Vec<f64> = t.iter().map(|v| v + shift).collect();
            let (t, p) = (field([3, 2, 3], t), field([3, 2, 3], p));
            for b in conditional_error(&[&p], &[&t], 0.25).unwrap() {
                if let Some(e) = b.mean_abs_error {
                    prop_assert_eq!(e, shift);
                }
            }
        }

        #[test]
        fn profile_matches_running_oracle(values in proptest::collection::vec(-5.0f64..5.0, 60)) {
            let f = field([3, 4, 5], values.clone());
            for l in height_profile(&[&f]).unwrap() {
                let (m, s) = welford(values[l.k * 12..(l.k + 1) * 12].iter().copied());
                prop_assert!((l.mean - m).abs() < 1e-10 && (l.std - s).abs() < 1e-10);
            }
        }
    }
}
