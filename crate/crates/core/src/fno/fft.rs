//! Real 3D FFTs with optional mode pruning.
//!
//! The forward transform is unnormalized, `H_k = sum_x f_x exp(-i k.x)`, and
//! keeps the half spectrum `kz <= nz/2`. The inverse is normalized by `1/N`
//! and reads the half spectrum as a Hermitian one:
//! `f_x = (1/N) Re sum_k w_kz H_k exp(+i k.x)` with `w = 1` on the `kz = 0`
//! and Nyquist planes and `2` elsewhere.
//!
//! A [`SpectralPlan`] restricts both directions to a band of retained modes;
//! only the lines that feed retained modes are transformed.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::tensor::{ComplexTensor, Tensor};
use crate::error::{Error, Result};
use crate::par;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum BandKind {
    Full,
    Corners(usize),
}

struct AxisPlan {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: usize,
}

impl AxisPlan {
    fn new(planner: &mut FftPlanner<f64>, n: usize) -> AxisPlan {
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        AxisPlan { fwd, inv, scratch }
    }
}

/// Transform plan for one grid and one retained band.
pub struct SpectralPlan {
    dims: [usize; 3],
    kx: Vec<usize>,
    ky: Vec<usize>,
    kz: usize,
    ax: [AxisPlan; 3],
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("dims", &self.dims)
            .field("kx", &self.kx.len())
            .field("ky", &self.ky.len())
            .field("kz", &self.kz)
            .finish()
    }
}

fn cache() -> &'static Mutex<HashMap<([usize; 3], BandKind), Arc<SpectralPlan>>> {
    static CACHE: OnceLock<Mutex<HashMap<([usize; 3], BandKind), Arc<SpectralPlan>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Largest `m` such that the corner band fits every axis of `dims`.
pub fn max_modes(dims: [usize; 3]) -> usize {
    dims.iter().map(|n| n / 2).min().unwrap_or(0)
}

impl SpectralPlan {
    fn build(dims: [usize; 3], kind: BandKind) -> SpectralPlan {
        let [nx, ny, nz] = dims;
        let (kx, ky, kz) = match kind {
            BandKind::Full => ((0..nx).collect(), (0..ny).collect(), nz / 2 + 1),
            BandKind::Corners(m) => {
                let corner = |n: usize| (0..m).chain(n - m..n).collect::<Vec<_>>();
                (corner(nx), corner(ny), m)
            }
        };
        let mut planner = FftPlanner::new();
        let ax = [
            AxisPlan::new(&mut planner, nx),
            AxisPlan::new(&mut planner, ny),
            AxisPlan::new(&mut planner, nz),
        ];
        SpectralPlan { dims, kx, ky, kz, ax }
    }

    fn cached(dims: [usize; 3], kind: BandKind) -> Arc<SpectralPlan> {
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        map.entry((dims, kind))
            .or_insert_with(|| Arc::new(SpectralPlan::build(dims, kind)))
            .clone()
    }

    /// Every mode of the half spectrum, stored `[kz][ky][kx]`, x fastest.
    pub fn full(dims: [usize; 3]) -> Result<Arc<SpectralPlan>> {
        check_dims(dims)?;
        Ok(Self::cached(dims, BandKind::Full))
    }

    /// The four low-frequency corners `|kx| < m`, `|ky| < m` (both signs) and
    /// `0 <= kz < m`, stored compactly `[kz][ky'][kx']` with `2m` entries
    /// along x and y: the first `m` are the non-negative frequencies, the
    /// last `m` the negative ones.
    pub fn corners(dims: [usize; 3], m: usize) -> Result<Arc<SpectralPlan>> {
        check_dims(dims)?;
        if m == 0 || m > max_modes(dims) {
            return Err(Error::InvalidArgument(format!(
                "{m} modes exceed the Nyquist limit {} of a {}x{}x{} grid",
                max_modes(dims),
                dims[0],
                dims[1],
                dims[2]
            )));
        }
        Ok(Self::cached(dims, BandKind::Corners(m)))
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of retained complex modes.
    pub fn band_len(&self) -> usize {
        self.kx.len() * self.ky.len() * self.kz
    }

    /// Band shape `[kx, ky, kz]` counts.
    pub fn band_dims(&self) -> [usize; 3] {
        [self.kx.len(), self.ky.len(), self.kz]
    }

    /// Hermitian weight of retained z-plane `kz`.
    #[inline]
    pub fn weight(&self, kz: usize) -> f64 {
        if kz == 0 || 2 * kz == self.dims[2] {
            1.0
        } else {
            2.0
        }
    }

    /// Forward transform of one real channel into the retained band.
    pub fn forward(&self, x: &[f64], out: &mut [Complex64]) {
        let [nx, ny, nz] = self.dims;
        let (nkx, nky, nkz) = (self.kx.len(), self.ky.len(), self.kz);
        let plane = nx * ny;
        assert_eq!(x.len(), plane * nz);
        assert_eq!(out.len(), self.band_len());
        let mut scratch = vec![ZERO; self.ax.iter().map(|a| a.scratch).max().unwrap_or(0)];

        // z: two real lines per complex transform
        let pairs = plane.div_ceil(2);
        let mut buf = Vec::with_capacity(pairs * nz);
        for p in 0..pairs {
            let q = 2 * p;
            for k in 0..nz {
                let im = if q + 1 < plane { x[q + 1 + plane * k] } else { 0.0 };
                buf.push(Complex64::new(x[q + plane * k], im));
            }
        }
        self.ax[2].fwd.process_with_scratch(&mut buf, &mut scratch);
        let mut a = vec![ZERO; nkz * plane];
        for p in 0..pairs {
            let q = 2 * p;
            let z = &buf[p * nz..(p + 1) * nz];
            for kz in 0..nkz {
                let zk = z[kz];
                let zc = z[(nz - kz) % nz].conj();
                a[kz * plane + q] = 0.5 * (zk + zc);
                if q + 1 < plane {
                    a[kz * plane + q + 1] = Complex64::new(0.0, -0.5) * (zk - zc);
                }
            }
        }

        // y
        let mut buf = vec![ZERO; nkz * nx * ny];
        for kz in 0..nkz {
            for j in 0..ny {
                let src = &a[kz * plane + j * nx..kz * plane + (j + 1) * nx];
                for (i, &v) in src.iter().enumerate() {
                    buf[(kz * nx + i) * ny + j] = v;
                }
            }
        }
        self.ax[1].fwd.process_with_scratch(&mut buf, &mut scratch);
        let mut b = vec![ZERO; nkz * nky * nx];
        for kz in 0..nkz {
            for (kyi, &ky) in self.ky.iter().enumerate() {
                let dst = &mut b[(kz * nky + kyi) * nx..(kz * nky + kyi + 1) * nx];
                for (i, d) in dst.iter_mut().enumerate() {
                    *d = buf[(kz * nx + i) * ny + ky];
                }
            }
        }

        // x: lines already contiguous
        self.ax[0].fwd.process_with_scratch(&mut b, &mut scratch);
        for line in 0..nkz * nky {
            let src = &b[line * nx..(line + 1) * nx];
            let dst = &mut out[line * nkx..(line + 1) * nkx];
            for (d, &kx) in dst.iter_mut().zip(&self.kx) {
                *d = src[kx];
            }
        }
    }

    /// Inverse transform of a band (zero outside it) to one real channel.
    pub fn inverse(&self, h: &[Complex64], out: &mut [f64]) {
        let [nx, ny, nz] = self.dims;
        let (nkx, nky, nkz) = (self.kx.len(), self.ky.len(), self.kz);
        let plane = nx * ny;
        assert_eq!(h.len(), self.band_len());
        assert_eq!(out.len(), plane * nz);
        let mut scratch = vec![ZERO; self.ax.iter().map(|a| a.scratch).max().unwrap_or(0)];

        // x
        let mut b = vec![ZERO; nkz * nky * nx];
        for line in 0..nkz * nky {
            let src = &h[line * nkx..(line + 1) * nkx];
            let dst = &mut b[line * nx..(line + 1) * nx];
            for (&v, &kx) in src.iter().zip(&self.kx) {
                dst[kx] = v;
            }
        }
        self.ax[0].inv.process_with_scratch(&mut b, &mut scratch);

        // y
        let mut buf = vec![ZERO; nkz * nx * ny];
        for kz in 0..nkz {
            for (kyi, &ky) in self.ky.iter().enumerate() {
                let src = &b[(kz * nky + kyi) * nx..(kz * nky + kyi + 1) * nx];
                for (i, &v) in src.iter().enumerate() {
                    buf[(kz * nx + i) * ny + ky] = v;
                }
            }
        }
        self.ax[1].inv.process_with_scratch(&mut buf, &mut scratch);
        let mut c = vec![ZERO; nkz * plane];
        for kz in 0..nkz {
            for i in 0..nx {
                let src = &buf[(kz * nx + i) * ny..(kz * nx + i + 1) * ny];
                for (j, &v) in src.iter().enumerate() {
                    c[kz * plane + j * nx + i] = v;
                }
            }
        }

        // z: rebuild Hermitian lines, two real outputs per complex transform
        let pairs = plane.div_ceil(2);
        let mut z = Vec::with_capacity(pairs * nz);
        let i_unit = Complex64::new(0.0, 1.0);
        let pair = |kz: usize, q: usize| {
            let e1 = c[kz * plane + q];
            let e2 = if q + 1 < plane { c[kz * plane + q + 1] } else { ZERO };
            (e1, e2)
        };
        for p in 0..pairs {
            let q = 2 * p;
            for kz in 0..nz {
                let mut v = ZERO;
                if kz < nkz {
                    let (e1, e2) = pair(kz, q);
                    v += if kz == 0 || 2 * kz == nz {
                        Complex64::new(e1.re, e2.re)
                    } else {
                        e1 + i_unit * e2
                    };
                }
                // mirrored half of mode nz - kz
                let k = nz - kz;
                if kz > 0 && k < nkz && 2 * k != nz {
                    let (e1, e2) = pair(k, q);
                    v += e1.conj() + i_unit * e2.conj();
                }
                z.push(v);
            }
        }
        self.ax[2].inv.process_with_scratch(&mut z, &mut scratch);
        let scale = 1.0 / (plane * nz) as f64;
        for p in 0..pairs {
            let q = 2 * p;
            for k in 0..nz {
                let v = z[p * nz + k];
                out[q + plane * k] = v.re * scale;
                if q + 1 < plane {
                    out[q + 1 + plane * k] = v.im * scale;
                }
            }
        }
    }

    /// Forward transform of every channel of `[C, X, Y, Z]` data.
    pub fn forward_channels(&self, data: &[f64], channels: usize) -> Vec<Complex64> {
        let n = self.len();
        let m = self.band_len();
        assert_eq!(data.len(), n * channels);
        let mut out = vec![ZERO; m * channels];
        par::for_each_chunk_mut(&mut out, m, |c, o| self.forward(&data[c * n..(c + 1) * n], o));
        out
    }

    /// Inverse transform of every channel of band data.
    pub fn inverse_channels(&self, band: &[Complex64], channels: usize) -> Vec<f64> {
        let n = self.len();
        let m = self.band_len();
        assert_eq!(band.len(), m * channels);
        let mut out = vec![0.0; n * channels];
        par::for_each_chunk_mut(&mut out, n, |c, o| self.inverse(&band[c * m..(c + 1) * m], o));
        out
    }
}

fn check_dims(dims: [usize; 3]) -> Result<()> {
    if dims.iter().any(|&n| n < 2) {
        return Err(Error::Shape(format!("FFT axes need at least 2 points, got {dims:?}")));
    }
    Ok(())
}

/// Channelwise forward FFT: `[C, X, Y, Z]` to `[C, X, Y, Z/2+1]`.
pub fn rfft3(t: &Tensor) -> Result<ComplexTensor> {
    let [c, x, y, z] = t.dims4()?;
    let plan = SpectralPlan::full([x, y, z])?;
    let data = plan.forward_channels(t.data(), c);
    ComplexTensor::new(vec![c, x, y, z / 2 + 1], data)
}

/// Inverse of [`rfft3`]; `nz` resolves the ambiguity of the halved axis.
pub fn irfft3(s: &ComplexTensor, nz: usize) -> Result<Tensor> {
    let (c, x, y, kz) = match s.shape()[..] {
        [c, x, y, kz] => (c, x, y, kz),
        _ => return Err(Error::Shape(format!("expected a [C, X, Y, Z/2+1] spectrum, got {:?}", s.shape()))),
    };
    if kz != nz / 2 + 1 {
        return Err(Error::Shape(format!("spectrum has {kz} z-modes but nz = {nz} needs {}", nz / 2 + 1)));
    }
    let plan = SpectralPlan::full([x, y, nz])?;
    Ok(Tensor::from_parts(vec![c, x, y, nz], plan.inverse_channels(s.data(), c)))
}
