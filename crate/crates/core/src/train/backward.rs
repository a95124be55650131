//! Reverse-mode gradients of the FNO forward pass.

use super::loss::loss_and_grad;
use crate::error::{Error, Result};
use crate::fno::linalg::{gemm, View};
use crate::fno::model::mix_adjoint;
use crate::fno::params::slot;
use crate::fno::{forward_traced, FnoParameters, SpectralPlan, Tensor, Trace};
use crate::par;

fn row_sums_into(x: &[f64], rows: usize, out: &mut [f64]) {
    let n = x.len() / rows;
    for (r, o) in out.iter_mut().enumerate() {
        *o = par::sum_range(n, |i| x[r * n + i]);
    }
}

/// `c (rows x cols) = a (rows x n) * b^T` where `b` is `cols x n`.
fn outer_into(a: &[f64], rows: usize, b: &[f64], cols: usize, c: &mut [f64]) {
    let n = a.len() / rows;
    gemm(1.0, View::new(a, rows, n), View::new(b, cols, n).t(), 0.0, c);
}

fn group<'a>(grads: &'a mut [f64], params: &FnoParameters, idx: usize) -> &'a mut [f64] {
    let g = &params.layout().groups()[idx];
    &mut grads[g.offset..g.offset + g.len]
}

/// Gradient of the loss with respect to every parameter, given the traced
/// forward pass and `du`, the loss gradient with respect to the output.
pub fn backward(trace: &Trace, du: &[f64], params: &FnoParameters) -> Result<Vec<f64>> {
    let mut grads = vec![0.0; params.len()];
    backward_into(trace, du, params, &mut grads)?;
    Ok(grads)
}

/// [`backward`] into a caller-owned buffer of `params.len()` values.
/// Every entry is overwritten.
pub fn backward_into(trace: &Trace, du: &[f64], params: &FnoParameters, grads: &mut [f64]) -> Result<()> {
    let cfg = params.config();
    let (w, m, layers) = (cfg.width, cfg.modes, cfg.layers);
    let n: usize = trace.dims.iter().product();
    if du.len() != cfg.out_channels * n {
        return Err(Error::Shape(format!(
            "output gradient has {} values, expected {}",
            du.len(),
            cfg.out_channels * n
        )));
    }
    if grads.len() != params.len() {
        return Err(Error::Shape(format!(
            "gradient buffer has {} values, expected {}",
            grads.len(),
            params.len()
        )));
    }
    let plan = SpectralPlan::corners(trace.dims, m)?;
    let plane_modes = 4 * m * m;

    let o = cfg.out_channels;
    let v_last = &trace.v[layers];
    outer_into(du, o, v_last, w, group(grads, params, slot::proj_w(layers)));
    row_sums_into(du, o, group(grads, params, slot::proj_b(layers)));
    let mut dv = vec![0.0; w * n];
    gemm(
        1.0,
        View::new(params.slot(slot::proj_w(layers)), o, w).t(),
        View::new(du, o, n),
        0.0,
        &mut dv,
    );

    for l in (0..layers).rev() {
        let dact = &trace.dact[l];
        let mut dz = vec![0.0; w * n];
        par::for_each_chunk_mut(&mut dz, 4096, |b, out| {
            let base = b * 4096;
            for (q, d) in out.iter_mut().enumerate() {
                *d = dv[base + q] * dact[base + q];
            }
        });
        let lp = params.layer(l);
        let v_in = &trace.v[l];
        outer_into(&dz, w, v_in, w, group(grads, params, slot::weight(l)));
        row_sums_into(&dz, w, group(grads, params, slot::bias(l)));

        let mut next = vec![0.0; w * n];
        gemm(1.0, View::new(lp.weight, w, w).t(), View::new(&dz, w, n), 0.0, &mut next);

        // spectral path: y = I(mix(R, F v))
        let mut dy = plan.forward_channels(&dz, w);
        let band = plan.band_len();
        for (q, c) in dy.iter_mut().enumerate() {
            *c *= plan.weight((q % band) / plane_modes) / n as f64;
        }
        let dr = group(grads, params, slot::spectral(l));
        let mut dvhat = mix_adjoint(lp.spectral, &trace.vhat[l], &dy, w, m, dr);
        for (q, c) in dvhat.iter_mut().enumerate() {
            *c *= n as f64 / plan.weight((q % band) / plane_modes);
        }
        let back = plan.inverse_channels(&dvhat, w);
        for (a, b) in next.iter_mut().zip(&back) {
            *a += b;
        }
        dv = next;
    }

    let a = &trace.input;
    outer_into(&dv, w, a, cfg.in_channels, group(grads, params, slot::LIFT_W));
    row_sums_into(&dv, w, group(grads, params, slot::LIFT_B));

    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        let name = params.layout().group_of(i).map_or("?", |g| g.name.as_str());
        return Err(Error::Numeric(format!("non-finite gradient in {name}")));
    }
    Ok(())
}

/// Loss and parameter gradient for one sample.
pub fn sample_gradient(input: &Tensor, target: &Tensor, params: &FnoParameters) -> Result<(f64, Vec<f64>)> {
    let mut grads = vec![0.0; params.len()];
    let loss = sample_gradient_into(input, target, params, &mut grads)?;
    Ok((loss, grads))
}

/// [`sample_gradient`] into a caller-owned buffer; returns the loss.
pub fn sample_gradient_into(input: &Tensor, target: &Tensor, params: &FnoParameters, grads: &mut [f64]) -> Result<f64> {
    let (pred, trace) = forward_traced(input, params)?;
    let (loss, du) = loss_and_grad(&pred, target)?;
    backward_into(&trace, &du, params, grads)?;
    Ok(loss)
}

/// Central-difference check of `count` parameters (all when `None`).
/// Returns the worst relative error and the group it occurred in.
pub fn gradient_check(
    input: &Tensor,
    target: &Tensor,
    params: &FnoParameters,
    indices: Option<&[usize]>,
) -> Result<(f64, String)> {
    let (_, grads) = sample_gradient(input, target, params)?;
    let all: Vec<usize>;
    let idx = match indices {
        Some(i) => i,
        None => {
            all = (0..params.len()).collect();
            &all
        }
    };
    let mut worst = (0.0f64, String::new());
    let mut p = params.clone();
    let loss_at = |p: &FnoParameters| -> Result<f64> {
        super::loss::layerwise_relative_loss(&crate::fno::forward(input, p)?, target)
    };
    for &i in idx {
        let x = params.values()[i];
        let h = 1e-4 * x.abs().max(1.0);
        p.values_mut()[i] = x + h;
        let lp = loss_at(&p)?;
        p.values_mut()[i] = x - h;
        let lm = loss_at(&p)?;
        p.values_mut()[i] = x;
        let fd = (lp - lm) / (2.0 * h);
        let rel = (fd - grads[i]).abs() / fd.abs().max(grads[i].abs()).max(GRAD_FLOOR);
        if rel > worst.0 {
            let name = params.layout().group_of(i).map_or("?", |g| g.name.as_str());
            worst = (rel, name.to_string());
        }
    }
    Ok(worst)
}

/// Gradients below this magnitude are compared in absolute terms.
pub const GRAD_FLOOR: f64 = 1e-6;
