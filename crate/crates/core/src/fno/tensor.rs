//! Dense channel-major tensors. A tensor of shape `[C, X, Y, Z]` stores each
//! channel as a contiguous x-fastest block, the same order as the field files.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Grid3, ScalarField};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_shape(shape: &[usize], len: usize) -> Result<()> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::Shape(format!("invalid tensor shape {shape:?}")));
    }
    let n: usize = shape.iter().product();
    if n != len {
        return Err(Error::Shape(format!("shape {shape:?} needs {n} values, got {len}")));
    }
    Ok(())
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor> {
        check_shape(&shape, data.len())?;
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite tensor value at {p}")));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Tensor {
        let n = shape.iter().product();
        Tensor { shape, data: vec![0.0; n] }
    }

    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }

    /// Stack fields on one grid as channels.
    pub fn from_fields<'a>(fields: impl IntoIterator<Item = &'a ScalarField>) -> Result<Tensor> {
        let mut grid: Option<Grid3> = None;
        let mut data = Vec::new();
        let mut c = 0;
        for f in fields {
            match &grid {
                None => grid = Some(*f.grid()),
                Some(g) => g.check_same(f.grid(), "stacked field")?,
            }
            data.extend_from_slice(f.values());
            c += 1;
        }
        let g = grid.ok_or_else(|| Error::Shape("no fields to stack".into()))?;
        Ok(Tensor {
            shape: vec![c, g.nx, g.ny, g.nz],
            data,
        })
    }

    /// Channel `c` as a field on `grid`.
    pub fn to_field(&self, c: usize, grid: &Grid3) -> Result<ScalarField> {
        let [_, x, y, z] = self.dims4()?;
        if grid.dims() != [x, y, z] {
            return Err(Error::Shape(format!(
                "tensor spatial dims {:?} do not match grid {:?}",
                [x, y, z],
                grid.dims()
            )));
        }
        ScalarField::new(*grid, self.channel(c).to_vec())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Shape as `[C, X, Y, Z]`.
    pub fn dims4(&self) -> Result<[usize; 4]> {
        match self.shape[..] {
            [c, x, y, z] => Ok([c, x, y, z]),
            _ => Err(Error::Shape(format!("expected a [C, X, Y, Z] tensor, got {:?}", self.shape))),
        }
    }

    pub fn channels(&self) -> usize {
        self.shape[0]
    }

    /// Number of values per channel.
    pub fn channel_len(&self) -> usize {
        self.data.len() / self.shape[0]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.channel_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.channel_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Complex tensor; values are `(re, im)` pairs laid out like [`Tensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl ComplexTensor {
    pub fn new(shape: Vec<usize>, data: Vec<Complex64>) -> Result<ComplexTensor> {
        check_shape(&shape, data.len())?;
        if let Some(p) = data.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numeric(format!("non-finite tensor value at {p}")));
        }
        Ok(ComplexTensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> ComplexTensor {
        let n = shape.iter().product();
        ComplexTensor {
            shape,
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn channel(&self, c: usize) -> &[Complex64] {
        let n = self.data.len() / self.shape[0];
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.data.len() / self.shape[0];
        &mut self.data[c * n..(c + 1) * n]
    }
}
