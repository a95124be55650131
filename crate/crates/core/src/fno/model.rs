//! Lifting, Fourier layers and projection.

use num_complex::Complex64;

use super::config::{Activation, FnoConfig};
use super::fft::SpectralPlan;
use super::linalg::{gemm, View};
use super::params::{slot, FnoParameters};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::par;

/// Parameters of one Fourier layer.
#[derive(Debug, Clone, Copy)]
pub struct LayerParams<'a> {
    /// `[4, in, out, m, m, m, 2]`.
    pub spectral: &'a [f64],
    /// `[out, in]`.
    pub weight: &'a [f64],
    pub bias: &'a [f64],
}

impl FnoParameters {
    pub fn layer(&self, l: usize) -> LayerParams<'_> {
        LayerParams {
            spectral: self.slot(slot::spectral(l)),
            weight: self.slot(slot::weight(l)),
            bias: self.slot(slot::bias(l)),
        }
    }
}

/// Offset (in complex entries) of corner `c`, channel pair `(j, l)` in the
/// spectral weights.
#[inline]
fn weight_block(c: usize, j: usize, l: usize, w: usize, m: usize) -> usize {
    ((c * w + j) * w + l) * m * m * m
}

/// Start of the contiguous `kx'` run of corner `c` at `(kz, ky')` in the
/// compact band.
#[inline]
fn band_run(c: usize, kz: usize, ky: usize, m: usize) -> usize {
    let (cy, cx) = (c / 2, c % 2);
    kz * 4 * m * m + (cy * m + ky) * 2 * m + cx * m
}

#[inline]
fn weight_at(r: &[f64], q: usize) -> Complex64 {
    Complex64::new(r[2 * q], r[2 * q + 1])
}

fn planar(x: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (x.iter().map(|c| c.re).collect(), x.iter().map(|c| c.im).collect())
}

/// `out[l] = sum_j R[j, l] in[j]` per retained mode.
pub(crate) fn mix(r: &[f64], vhat: &[Complex64], w: usize, m: usize) -> Vec<Complex64> {
    let band = 4 * m * m * m;
    debug_assert_eq!(vhat.len(), w * band);
    let (vr, vi) = planar(vhat);
    let mut out = vec![Complex64::new(0.0, 0.0); w * band];
    par::for_each_chunk_mut(&mut out, band, |l, o| {
        let mut or = vec![0.0; band];
        let mut oi = vec![0.0; band];
        for j in 0..w {
            let (jr, ji) = (&vr[j * band..(j + 1) * band], &vi[j * band..(j + 1) * band]);
            for c in 0..4 {
                let base = weight_block(c, j, l, w, m);
                for kz in 0..m {
                    for ky in 0..m {
                        let run = band_run(c, kz, ky, m);
                        let wq = 2 * (base + (kz * m + ky) * m);
                        let rw = &r[wq..wq + 2 * m];
                        let (xr, xi) = (&jr[run..run + m], &ji[run..run + m]);
                        let (yr, yi) = (&mut or[run..run + m], &mut oi[run..run + m]);
                        for t in 0..m {
                            let (a, b) = (rw[2 * t], rw[2 * t + 1]);
                            yr[t] += a * xr[t] - b * xi[t];
                            yi[t] += a * xi[t] + b * xr[t];
                        }
                    }
                }
            }
        }
        for (q, o) in o.iter_mut().enumerate() {
            *o = Complex64::new(or[q], oi[q]);
        }
    });
    out
}

/// Adjoint of [`mix`] for the output cotangent `dy`: writes dR into `dr`
/// and returns dV.
pub(crate) fn mix_adjoint(
    r: &[f64],
    vhat: &[Complex64],
    dy: &[Complex64],
    w: usize,
    m: usize,
    dr: &mut [f64],
) -> Vec<Complex64> {
    let band = 4 * m * m * m;
    let m3 = m * m * m;
    assert_eq!(dr.len(), 4 * w * w * m3 * 2);
    // one chunk per (corner, j): all l for that pair
    par::for_each_chunk_mut(dr, w * m3 * 2, |cj, d| {
        let (c, j) = (cj / w, cj % w);
        let vj = &vhat[j * band..(j + 1) * band];
        for l in 0..w {
            let dl = &dy[l * band..(l + 1) * band];
            for kz in 0..m {
                for ky in 0..m {
                    let run = band_run(c, kz, ky, m);
                    let q = l * m3 + (kz * m + ky) * m;
                    for kx in 0..m {
                        let g = dl[run + kx] * vj[run + kx].conj();
                        d[2 * (q + kx)] = g.re;
                        d[2 * (q + kx) + 1] = g.im;
                    }
                }
            }
        }
    });
    let mut dv = vec![Complex64::new(0.0, 0.0); w * band];
    par::for_each_chunk_mut(&mut dv, band, |j, o| {
        for l in 0..w {
            let dl = &dy[l * band..(l + 1) * band];
            for c in 0..4 {
                let base = weight_block(c, j, l, w, m);
                for kz in 0..m {
                    for ky in 0..m {
                        let run = band_run(c, kz, ky, m);
                        let wq = base + (kz * m + ky) * m;
                        for kx in 0..m {
                            o[run + kx] += weight_at(r, wq + kx).conj() * dl[run + kx];
                        }
                    }
                }
            }
        }
    });
    dv
}

fn spatial_dims(v: &Tensor) -> Result<(usize, [usize; 3])> {
    let [c, x, y, z] = v.dims4()?;
    Ok((c, [x, y, z]))
}

/// Spectral convolution of a `[w, X, Y, Z]` tensor with weights
/// `[4, w, w, m, m, m, 2]`.
pub fn spectral_conv(v: &Tensor, spectral: &[f64], modes: usize) -> Result<Tensor> {
    let (w, dims) = spatial_dims(v)?;
    if spectral.len() != 4 * w * w * modes.pow(3) * 2 {
        return Err(Error::Shape(format!(
            "spectral weights have {} entries; {w} channels and {modes} modes need {}",
            spectral.len(),
            4 * w * w * modes.pow(3) * 2
        )));
    }
    let plan = SpectralPlan::corners(dims, modes)?;
    let vhat = plan.forward_channels(v.data(), w);
    let yhat = mix(spectral, &vhat, w, modes);
    Ok(Tensor::from_parts(v.shape().to_vec(), plan.inverse_channels(&yhat, w)))
}

/// `out = bias + weight * v` applied at every cell, accumulated into `out`.
fn pointwise_into(weight: &[f64], bias: &[f64], v: &[f64], cin: usize, out: &mut [f64], beta: f64) {
    let cout = bias.len();
    let n = v.len() / cin;
    if beta == 0.0 {
        for (o, b) in out.chunks_mut(n).zip(bias) {
            o.fill(*b);
        }
    } else {
        for (o, b) in out.chunks_mut(n).zip(bias) {
            o.iter_mut().for_each(|x| *x += b);
        }
    }
    gemm(1.0, View::new(weight, cout, cin), View::new(v, cin, n), 1.0, out);
}

/// Pointwise linear map with bias, `[cin, ...] -> [cout, ...]`.
pub fn pointwise(v: &Tensor, weight: &[f64], bias: &[f64]) -> Result<Tensor> {
    let cin = v.channels();
    let cout = bias.len();
    if weight.len() != cout * cin {
        return Err(Error::Shape(format!(
            "pointwise weight has {} entries, expected {cout}x{cin}",
            weight.len()
        )));
    }
    let mut shape = v.shape().to_vec();
    shape[0] = cout;
    let mut out = vec![0.0; cout * v.channel_len()];
    pointwise_into(weight, bias, v.data(), cin, &mut out, 0.0);
    Ok(Tensor::from_parts(shape, out))
}

fn activate(z: &[f64], act: Activation) -> Vec<f64> {
    let mut out = vec![0.0; z.len()];
    par::for_each_chunk_mut(&mut out, 4096, |b, o| {
        for (x, &zi) in o.iter_mut().zip(&z[b * 4096..]) {
            *x = act.apply(zi);
        }
    });
    out
}

/// Returns `sigma(z)` and overwrites `z` with `sigma'(z)`.
fn activate_with_derivative(z: &mut [f64], act: Activation) -> Vec<f64> {
    let mut out = vec![0.0; z.len()];
    par::for_each_chunk_pair_mut(&mut out, z, 4096, |_, o, d| {
        for (x, zi) in o.iter_mut().zip(d.iter_mut()) {
            (*x, *zi) = act.apply_with_derivative(*zi);
        }
    });
    out
}

/// `sigma(W v + b + K v)` for one layer.
pub fn fourier_layer(v: &Tensor, layer: LayerParams, modes: usize, act: Activation) -> Result<Tensor> {
    let w = v.channels();
    if layer.weight.len() != w * w || layer.bias.len() != w {
        return Err(Error::Shape(format!("layer parameters do not match {w} channels")));
    }
    let mut z = spectral_conv(v, layer.spectral, modes)?.into_data();
    pointwise_into(layer.weight, layer.bias, v.data(), w, &mut z, 1.0);
    Ok(Tensor::from_parts(v.shape().to_vec(), activate(&z, act)))
}

/// Intermediate values of a forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    pub(crate) dims: [usize; 3],
    pub(crate) input: Vec<f64>,
    /// `v_0 .. v_L`, each `[width, N]`.
    pub(crate) v: Vec<Vec<f64>>,
    /// Activation derivative at each layer's pre-activation.
    pub(crate) dact: Vec<Vec<f64>>,
    /// Retained spectra of each layer's input.
    pub(crate) vhat: Vec<Vec<Complex64>>,
}

fn check_input(a: &Tensor, params: &FnoParameters) -> Result<[usize; 3]> {
    let cfg = params.config();
    let (c, dims) = spatial_dims(a)?;
    if c != cfg.in_channels {
        return Err(Error::Shape(format!("model expects {} input channels, got {c}", cfg.in_channels)));
    }
    SpectralPlan::corners(dims, cfg.modes)?;
    Ok(dims)
}

fn run(a: &Tensor, params: &FnoParameters, keep: bool) -> Result<(Tensor, Option<Trace>)> {
    let dims = check_input(a, params)?;
    let cfg: &FnoConfig = params.config();
    let (w, m) = (cfg.width, cfg.modes);
    let n: usize = dims.iter().product();
    let plan = SpectralPlan::corners(dims, m)?;

    let mut v = vec![0.0; w * n];
    pointwise_into(params.slot(slot::LIFT_W), params.slot(slot::LIFT_B), a.data(), cfg.in_channels, &mut v, 0.0);
    let mut trace = keep.then(|| Trace {
        dims,
        input: a.data().to_vec(),
        v: Vec::with_capacity(cfg.layers + 1),
        dact: Vec::with_capacity(cfg.layers),
        vhat: Vec::with_capacity(cfg.layers),
    });
    for l in 0..cfg.layers {
        let lp = params.layer(l);
        let vhat = plan.forward_channels(&v, w);
        let yhat = mix(lp.spectral, &vhat, w, m);
        let mut z = plan.inverse_channels(&yhat, w);
        pointwise_into(lp.weight, lp.bias, &v, w, &mut z, 1.0);
        match trace.as_mut() {
            Some(t) => {
                let next = activate_with_derivative(&mut z, cfg.activation);
                t.v.push(std::mem::replace(&mut v, next));
                t.dact.push(z);
                t.vhat.push(vhat);
            }
            None => v = activate(&z, cfg.activation),
        }
    }
    let o = cfg.out_channels;
    let mut u = vec![0.0; o * n];
    pointwise_into(params.slot(slot::proj_w(cfg.layers)), params.slot(slot::proj_b(cfg.layers)), &v, w, &mut u, 0.0);
    if let Some(t) = trace.as_mut() {
        t.v.push(v);
    }
    if let Some(p) = u.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!("forward produced a non-finite output at {p}")));
    }
    Ok((Tensor::from_parts(vec![o, dims[0], dims[1], dims[2]], u), trace))
}

/// `Q(layer_L(...layer_1(P a)))`.
pub fn forward(a: &Tensor, params: &FnoParameters) -> Result<Tensor> {
    run(a, params, false).map(|(t, _)| t)
}

/// Forward pass that also returns the values needed for gradients.
pub fn forward_traced(a: &Tensor, params: &FnoParameters) -> Result<(Tensor, Trace)> {
    let (t, trace) = run(a, params, true)?;
    Ok((t, trace.expect("trace requested")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    type Rng8 = rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut Rng8) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Spectral weight for output `l`, input `j` at mode `(kx, ky, kz)`,
    /// looked up independently from the layout description.
    fn weight_for(r: &[f64], w: usize, m: usize, j: usize, l: usize, k: [usize; 3], n: [usize; 3]) -> Option<Complex64> {
        let (kx, ky, kz) = (k[0], k[1], k[2]);
        let cx = usize::from(kx >= m);
        let cy = usize::from(ky >= m);
        if kz >= m || (kx >= m && kx < n[0] - m) || (ky >= m && ky < n[1] - m) {
            return None;
        }
        let px = if cx == 1 { kx - (n[0] - m) } else { kx };
        let py = if cy == 1 { ky - (n[1] - m) } else { ky };
        let c = 2 * cy + cx;
        let q = (((c * w + j) * w + l) * m * m * m) + (kz * m + py) * m + px;
        Some(Complex64::new(r[2 * q], r[2 * q + 1]))
    }

    /// Brute-force spectral convolution straight from the definition.
    fn naive_spectral(v: &[f64], r: &[f64], w: usize, m: usize, n: [usize; 3]) -> Vec<f64> {
        let [nx, ny, nz] = n;
        let total = nx * ny * nz;
        let mut out = vec![0.0; w * total];
        for kz in 0..nz / 2 + 1 {
            let wk = if kz == 0 || 2 * kz == nz { 1.0 } else { 2.0 };
            for ky in 0..ny {
                for kx in 0..nx {
                    let phase = |i: usize, j: usize, k: usize| {
                        2.0 * PI * ((kx * i) as f64 / nx as f64 + (ky * j) as f64 / ny as f64 + (kz * k) as f64 / nz as f64)
                    };
                    let vh: Vec<Complex64> = (0..w)
                        .map(|c| {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for p in 0..total {
                                let (i, j, k) = (p % nx, (p / nx) % ny, p / (nx * ny));
                                acc += v[c * total + p] * Complex64::from_polar(1.0, -phase(i, j, k));
                            }
                            acc
                        })
                        .collect();
                    for l in 0..w {
                        let mut y = Complex64::new(0.0, 0.0);
                        for (j, vj) in vh.iter().enumerate() {
                            if let Some(rw) = weight_for(r, w, m, j, l, [kx, ky, kz], n) {
                                y += rw * vj;
                            }
                        }
                        for p in 0..total {
                            let (i, j, k) = (p % nx, (p / nx) % ny, p / (nx * ny));
                            out[l * total + p] += wk * (y * Complex64::from_polar(1.0, phase(i, j, k))).re / total as f64;
                        }
                    }
                }
            }
        }
        out
    }

    fn identity_weights(w: usize, m: usize) -> Vec<f64> {
        let mut r = vec![0.0; 4 * w * w * m * m * m * 2];
        for c in 0..4 {
            for j in 0..w {
                let base = weight_block(c, j, j, w, m);
                for q in 0..m * m * m {
                    r[2 * (base + q)] = 1.0;
                }
            }
        }
        r
    }

    #[test]
    fn zero_weights_give_zero() {
        let mut rng = Rng8::seed_from_u64(1);
        let v = Tensor::new(vec![3, 6, 4, 4], random_vec(288, &mut rng)).unwrap();
        let out = spectral_conv(&v, &vec![0.0; 4 * 9 * 8 * 2], 2).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn identity_weights_reproduce_band_limited_input() {
        // 4x4x4 with m = 2 keeps every mode except the z-Nyquist plane
        let n = [4, 4, 4];
        let mut rng = Rng8::seed_from_u64(2);
        let mut v = random_vec(2 * 64, &mut rng);
        // drop the kz = 2 plane, the only one outside the band
        let plan = SpectralPlan::full(n).unwrap();
        for c in 0..2 {
            let mut h = vec![Complex64::new(0.0, 0.0); plan.band_len()];
            plan.forward(&v[c * 64..(c + 1) * 64], &mut h);
            for q in 2 * 16..3 * 16 {
                h[q] = Complex64::new(0.0, 0.0);
            }
            plan.inverse(&h, &mut v[c * 64..(c + 1) * 64]);
        }
        let t = Tensor::new(vec![2, 4, 4, 4], v).unwrap();
        let out = spectral_conv(&t, &identity_weights(2, 2), 2).unwrap();
        assert!(out.max_abs_diff(&t) < 1e-10);
    }

    #[test]
    fn identity_weights_are_an_ideal_low_pass() {
        let n = [8, 6, 6];
        let (w, m) = (2, 2);
        let mut rng = Rng8::seed_from_u64(3);
        let v = random_vec(w * 288, &mut rng);
        let r = identity_weights(w, m);
        let t = Tensor::new(vec![w, 8, 6, 6], v.clone()).unwrap();
        let got = spectral_conv(&t, &r, m).unwrap();
        let want = naive_spectral(&v, &r, w, m, n);
        let err = got.data().iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn random_weights_match_brute_force() {
        let n = [4, 6, 4];
        let (w, m) = (3, 2);
        let mut rng = Rng8::seed_from_u64(4);
        let v = random_vec(w * 96, &mut rng);
        let r = random_vec(4 * w * w * 8 * 2, &mut rng);
        let got = spectral_conv(&Tensor::new(vec![w, 4, 6, 4], v.clone()).unwrap(), &r, m).unwrap();
        let want = naive_spectral(&v, &r, w, m, n);
        let err = got.data().iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn fourier_layer_matches_scalar_oracle() {
        let n = [4, 4, 4];
        let (w, m) = (2, 2);
        let mut rng = Rng8::seed_from_u64(5);
        let v = random_vec(w * 64, &mut rng);
        let r = random_vec(4 * w * w * 8 * 2, &mut rng);
        let wt = random_vec(w * w, &mut rng);
        let b = random_vec(w, &mut rng);
        let lp = LayerParams { spectral: &r, weight: &wt, bias: &b };
        let t = Tensor::new(vec![w, 4, 4, 4], v.clone()).unwrap();
        let got = fourier_layer(&t, lp, m, Activation::Gelu).unwrap();
        let k = naive_spectral(&v, &r, w, m, n);
        for l in 0..w {
            for p in 0..64 {
                let mut z = b[l] + k[l * 64 + p];
                for j in 0..w {
                    z += wt[l * w + j] * v[j * 64 + p];
                }
                let want = 0.5 * z * (1.0 + libm::erf(z / 2f64.sqrt()));
                assert!((got.data()[l * 64 + p] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn layer_identity_cases() {
        let mut rng = Rng8::seed_from_u64(6);
        let v: Vec<f64> = random_vec(2 * 64, &mut rng).iter().map(|x| x.abs()).collect();
        let t = Tensor::new(vec![2, 4, 4, 4], v).unwrap();
        let zeros = vec![0.0; 4 * 4 * 8 * 2];
        let lp = LayerParams { spectral: &zeros, weight: &[0.0; 4], bias: &[0.0; 2] };
        let out = fourier_layer(&t, lp, 2, Activation::Gelu).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
        let lp = LayerParams { spectral: &zeros, weight: &[1.0, 0.0, 0.0, 1.0], bias: &[0.0; 2] };
        let out = fourier_layer(&t, lp, 2, Activation::Relu).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn spectral_conv_is_linear() {
        let mut rng = Rng8::seed_from_u64(7);
        let r = random_vec(4 * 4 * 8 * 2, &mut rng);
        let a = random_vec(2 * 128, &mut rng);
        let b = random_vec(2 * 128, &mut rng);
        let t = |x: Vec<f64>| Tensor::new(vec![2, 8, 4, 4], x).unwrap();
        let (al, be) = (1.7, -0.4);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| al * x + be * y).collect();
        let ka = spectral_conv(&t(a), &r, 2).unwrap();
        let kb = spectral_conv(&t(b), &r, 2).unwrap();
        let ks = spectral_conv(&t(sum), &r, 2).unwrap();
        for q in 0..256 {
            assert!((ks.data()[q] - al * ka.data()[q] - be * kb.data()[q]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_parameters_output_projection_bias() {
        let cfg = FnoConfig { width: 3, modes: 2, layers: 2, ..Default::default() };
        let mut p = FnoParameters::zeros(&cfg);
        p.group_mut("proj.bias").unwrap()[0] = 0.75;
        let mut rng = Rng8::seed_from_u64(8);
        let a = Tensor::new(vec![5, 4, 4, 4], random_vec(320, &mut rng)).unwrap();
        let u = forward(&a, &p).unwrap();
        assert_eq!(u.shape(), &[1, 4, 4, 4]);
        assert!(u.data().iter().all(|&x| x == 0.75));
    }

    #[test]
    fn input_validation() {
        let cfg = FnoConfig { width: 2, modes: 3, layers: 1, ..Default::default() };
        let p = FnoParameters::init(&cfg, 1).unwrap();
        let small = Tensor::zeros(vec![5, 8, 8, 4]);
        assert!(matches!(forward(&small, &p), Err(Error::InvalidArgument(_))));
        let wrong = Tensor::zeros(vec![4, 8, 8, 8]);
        assert!(matches!(forward(&wrong, &p), Err(Error::Shape(_))));
        assert!(forward(&Tensor::zeros(vec![5, 6, 6, 6]), &p).is_ok());
    }

    #[test]
    fn translation_equivariance() {
        let cfg = FnoConfig { width: 4, modes: 3, layers: 2, ..Default::default() };
        let p = FnoParameters::init(&cfg, 9).unwrap();
        let n = [8, 6, 6];
        let mut rng = Rng8::seed_from_u64(9);
        let a = random_vec(5 * 288, &mut rng);
        let shift = [3, 1, 2];
        let idx = |i: usize, j: usize, k: usize| i + 8 * (j + 6 * k);
        let mut b = vec![0.0; a.len()];
        for c in 0..5 {
            for k in 0..6 {
                for j in 0..6 {
                    for i in 0..8 {
                        let src = idx(i, j, k);
                        let dst = idx((i + shift[0]) % 8, (j + shift[1]) % 6, (k + shift[2]) % 6);
                        b[c * 288 + dst] = a[c * 288 + src];
                    }
                }
            }
        }
        let ua = forward(&Tensor::new(vec![5, 8, 6, 6], a).unwrap(), &p).unwrap();
        let ub = forward(&Tensor::new(vec![5, 8, 6, 6], b).unwrap(), &p).unwrap();
        for k in 0..6 {
            for j in 0..6 {
                for i in 0..8 {
                    let dst = idx((i + shift[0]) % 8, (j + shift[1]) % 6, (k + shift[2]) % 6);
                    assert!((ua.data()[idx(i, j, k)] - ub.data()[dst]).abs() < 1e-8);
                }
            }
        }
        let _ = n;
    }

    #[test]
    fn traced_forward_matches_plain() {
        let cfg = FnoConfig { width: 3, modes: 2, layers: 2, ..Default::default() };
        let p = FnoParameters::init(&cfg, 10).unwrap();
        let mut rng = Rng8::seed_from_u64(10);
        let a = Tensor::new(vec![5, 4, 6, 4], random_vec(480, &mut rng)).unwrap();
        let (u, trace) = forward_traced(&a, &p).unwrap();
        assert_eq!(u, forward(&a, &p).unwrap());
        assert_eq!(trace.v.len(), 3);
        assert_eq!(trace.dact.len(), 2);
    }

    fn cosines(n: [usize; 3], c: usize, band: i64, rng: &mut Rng8) -> Tensor {
        let len = n[0] * n[1] * n[2];
        let mut data = vec![0.0; c * len];
        for _ in 0..6 * c {
            let ch = rng.gen_range(0..c);
            let k = [rng.gen_range(-band..=band), rng.gen_range(-band..=band), rng.gen_range(0..=band)];
            let (a, ph) = (rng.gen_range(0.2..0.6), rng.gen_range(0.0..2.0 * PI));
            for z in 0..n[2] {
                for y in 0..n[1] {
                    for x in 0..n[0] {
                        let th = 2.0
                            * PI
                            * (k[0] as f64 * x as f64 / n[0] as f64
                                + k[1] as f64 * y as f64 / n[1] as f64
                                + k[2] as f64 * z as f64 / n[2] as f64);
                        data[ch * len + x + n[0] * (y + n[1] * z)] += a * (th + ph).cos();
                    }
                }
            }
        }
        Tensor::new(vec![c, n[0], n[1], n[2]], data).unwrap()
    }

    #[test]
    fn linear_model_is_resolution_consistent() {
        let cfg = FnoConfig { width: 4, modes: 4, layers: 2, activation: Activation::Identity, ..Default::default() };
        let p = FnoParameters::init(&cfg, 12).unwrap();
        for seed in 0..3 {
            let (coarse, fine) = ([8, 8, 8], [16, 16, 16]);
            let a = cosines(coarse, 5, 3, &mut Rng8::seed_from_u64(seed));
            let b = cosines(fine, 5, 3, &mut Rng8::seed_from_u64(seed));
            let (ua, ub) = (forward(&a, &p).unwrap(), forward(&b, &p).unwrap());
            let mut worst = 0.0f64;
            for z in 0..8 {
                for y in 0..8 {
                    for x in 0..8 {
                        let d = ua.data()[x + 8 * (y + 8 * z)] - ub.data()[2 * x + 16 * (2 * y + 16 * 2 * z)];
                        worst = worst.max(d.abs());
                    }
                }
            }
            assert!(worst < 1e-10, "seed {seed}: {worst:e}");
        }
    }
}
