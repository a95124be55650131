//! Grids, scalar fields and building masks.
//!
//! All 3D arrays in the crate use x-fastest storage: the flat index of cell
//! `(i, j, k)` is `i + nx * (j + ny * k)`.

mod dataset;
mod io;

pub use dataset::{
    denormalize, make_windows, normalize, split_dataset, DatasetManifest, NormStats, SampleWindow,
};
pub use io::{read_field, read_mask, write_field, write_mask, FIELD_MAGIC, FORMAT_VERSION, MASK_MAGIC};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Uniform cell-centered grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub origin: [f64; 3],
}

impl Grid3 {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        let g = Grid3 {
            nx: dims[0],
            ny: dims[1],
            nz: dims[2],
            dx: spacing[0],
            dy: spacing[1],
            dz: spacing[2],
            origin,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid with unit spacing at the origin.
    pub fn unit(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        Self::new([nx, ny, nz], [1.0; 3], [0.0; 3])
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.nx >= 2 && self.ny >= 2 && self.nz >= 2,
            "grid counts must be >= 2, got {}x{}x{}",
            self.nx,
            self.ny,
            self.nz
        );
        ensure!(
            self.dx > 0.0 && self.dy > 0.0 && self.dz > 0.0,
            "grid spacings must be positive, got ({}, {}, {})",
            self.dx,
            self.dy,
            self.dz
        );
        ensure!(
            self.dx.is_finite()
                && self.dy.is_finite()
                && self.dz.is_finite()
                && self.origin.iter().all(|o| o.is_finite()),
            "grid geometry must be finite"
        );
        Ok(())
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    /// Inverse of [`Grid3::idx`].
    #[inline]
    pub fn ijk(&self, n: usize) -> (usize, usize, usize) {
        let i = n % self.nx;
        let j = (n / self.nx) % self.ny;
        (i, j, n / (self.nx * self.ny))
    }

    /// Physical extent along each axis.
    pub fn extent(&self) -> [f64; 3] {
        [
            self.nx as f64 * self.dx,
            self.ny as f64 * self.dy,
            self.nz as f64 * self.dz,
        ]
    }

    /// Center of cell `(i, j, k)` in meters.
    #[inline]
    pub fn center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.dx,
            self.origin[1] + (j as f64 + 0.5) * self.dy,
            self.origin[2] + (k as f64 + 0.5) * self.dz,
        ]
    }

    pub fn min_spacing(&self) -> f64 {
        self.dx.min(self.dy).min(self.dz)
    }

    /// Same dims and bitwise-equal geometry.
    pub fn same_as(&self, other: &Grid3) -> bool {
        self == other
    }

    pub fn check_same(&self, other: &Grid3, what: &str) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what}: grid {}x{}x{} does not match {}x{}x{}",
                self.nx, self.ny, self.nz, other.nx, other.ny, other.nz
            )))
        }
    }
}

/// Scalar values on a [`Grid3`], typically velocity magnitude in m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid3,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values but grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value at cell {p}")));
        }
        Ok(ScalarField { grid, values })
    }

    /// Caller guarantees matching length and finite values.
    pub(crate) fn from_parts(grid: Grid3, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn zeros(grid: Grid3) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    values.push(f(i, j, k));
                }
            }
        }
        Self::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, j, k)]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Round every value to the nearest `f32`, the precision of the file format.
    pub fn round_to_f32(mut self) -> Self {
        for v in &mut self.values {
            *v = *v as f32 as f64;
        }
        self
    }
}

/// Solid (building) cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingMask {
    grid: Grid3,
    solid: Vec<bool>,
}

impl BuildingMask {
    pub fn new(grid: Grid3, solid: Vec<bool>) -> Result<Self> {
        grid.validate()?;
        if solid.len() != grid.len() {
            return Err(Error::Shape(format!(
                "mask has {} cells but grid has {}",
                solid.len(),
                grid.len()
            )));
        }
        ensure!(
            solid.iter().any(|s| !s),
            "building mask must contain at least one fluid cell"
        );
        Ok(BuildingMask { grid, solid })
    }

    pub fn all_fluid(grid: Grid3) -> Self {
        BuildingMask {
            grid,
            solid: vec![false; grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    #[inline]
    pub fn solid(&self) -> &[bool] {
        &self.solid
    }

    #[inline]
    pub fn is_solid(&self, n: usize) -> bool {
        self.solid[n]
    }

    pub fn fluid_count(&self) -> usize {
        self.solid.iter().filter(|s| !**s).count()
    }

    pub fn fluid_fraction(&self) -> f64 {
        self.fluid_count() as f64 / self.solid.len() as f64
    }

    /// Nearest-cell resampling onto `target`: a target cell is solid when the
    /// source cell containing its center is solid.
    pub fn resample_nearest(&self, target: &Grid3) -> Result<BuildingMask> {
        target.validate()?;
        let src = &self.grid;
        let locate = |x: f64, o: f64, d: f64, n: usize| -> usize {
            let c = ((x - o) / d).floor();
            (c.max(0.0) as usize).min(n - 1)
        };
        let mut solid = Vec::with_capacity(target.len());
        for k in 0..target.nz {
            for j in 0..target.ny {
                for i in 0..target.nx {
                    let c = target.center(i, j, k);
                    let si = locate(c[0], src.origin[0], src.dx, src.nx);
                    let sj = locate(c[1], src.origin[1], src.dy, src.ny);
                    let sk = locate(c[2], src.origin[2], src.dz, src.nz);
                    solid.push(self.solid[src.idx(si, sj, sk)]);
                }
            }
        }
        BuildingMask::new(*target, solid)
    }
}

/// Zero the field at solid cells; fluid cells are untouched.
pub fn apply_mask(field: &ScalarField, mask: &BuildingMask) -> Result<ScalarField> {
    field.grid.check_same(&mask.grid, "apply_mask")?;
    let values = field
        .values
        .iter()
        .zip(&mask.solid)
        .map(|(&v, &s)| if s { 0.0 } else { v })
        .collect();
    Ok(ScalarField {
        grid: field.grid,
        values,
    })
}

/// Time series of fields on one grid.
#[derive(Debug, Clone)]
pub struct FieldSequence {
    dt: f64,
    fields: Vec<ScalarField>,
}

impl FieldSequence {
    pub fn new(dt: f64, fields: Vec<ScalarField>) -> Result<Self> {
        ensure!(dt > 0.0 && dt.is_finite(), "time step must be positive, got {dt}");
        if let Some(first) = fields.first() {
            for (t, f) in fields.iter().enumerate().skip(1) {
                first
                    .grid
                    .check_same(&f.grid, &format!("field {t} of sequence"))?;
            }
        }
        Ok(FieldSequence { dt, fields })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn grid(&self) -> Option<&Grid3> {
        self.fields.first().map(|f| &f.grid)
    }

    pub fn push(&mut self, field: ScalarField) -> Result<()> {
        if let Some(g) = self.grid() {
            g.check_same(&field.grid, "appended field")?;
        }
        self.fields.push(field);
        Ok(())
    }

    pub fn into_fields(self) -> Vec<ScalarField> {
        self.fields
    }
}
