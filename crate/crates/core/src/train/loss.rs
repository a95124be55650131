//! Layer-wise relative L2 loss.

use crate::error::{Error, Result};
use crate::fno::Tensor;

fn check(pred: &Tensor, truth: &Tensor) -> Result<[usize; 4]> {
    if pred.shape() != truth.shape() {
        return Err(Error::Shape(format!(
            "prediction shape {:?} differs from target {:?}",
            pred.shape(),
            truth.shape()
        )));
    }
    truth.dims4()
}

/// Per-layer squared norms of the error and of the target; one entry per
/// `(channel, z)` slice.
fn layer_norms(pred: &[f64], truth: &[f64], [c, x, y, z]: [usize; 4]) -> Vec<(f64, f64)> {
    let plane = x * y;
    (0..c * z)
        .map(|s| {
            let r = s * plane..(s + 1) * plane;
            let mut e = 0.0;
            let mut t = 0.0;
            for (p, v) in pred[r.clone()].iter().zip(&truth[r]) {
                e += (p - v) * (p - v);
                t += v * v;
            }
            (e, t)
        })
        .collect()
}

/// Mean over z-slices of `||u_z - v_z|| / ||v_z||`. Slices where the target
/// is identically zero are left out of the mean.
pub fn layerwise_relative_loss(pred: &Tensor, truth: &Tensor) -> Result<f64> {
    let dims = check(pred, truth)?;
    let norms = layer_norms(pred.data(), truth.data(), dims);
    let used: Vec<f64> = norms
        .iter()
        .filter(|(_, t)| *t > 0.0)
        .map(|(e, t)| (e / t).sqrt())
        .collect();
    if used.is_empty() {
        return Err(Error::InvalidArgument("every target layer has zero norm".into()));
    }
    Ok(used.iter().sum::<f64>() / used.len() as f64)
}

/// Loss and its gradient with respect to `pred`.
pub fn loss_and_grad(pred: &Tensor, truth: &Tensor) -> Result<(f64, Vec<f64>)> {
    let dims = check(pred, truth)?;
    let plane = dims[1] * dims[2];
    let norms = layer_norms(pred.data(), truth.data(), dims);
    let n_used = norms.iter().filter(|(_, t)| *t > 0.0).count();
    if n_used == 0 {
        return Err(Error::InvalidArgument("every target layer has zero norm".into()));
    }
    let inv = 1.0 / n_used as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.data().len()];
    for (s, &(e, t)) in norms.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let (en, tn) = (e.sqrt(), t.sqrt());
        loss += en / tn;
        if en == 0.0 {
            continue;
        }
        let scale = inv / (en * tn);
        let r = s * plane..(s + 1) * plane;
        for ((g, p), v) in grad[r.clone()].iter_mut().zip(&pred.data()[r.clone()]).zip(&truth.data()[r]) {
            *g = scale * (p - v);
        }
    }
    Ok((loss * inv, grad))
}
