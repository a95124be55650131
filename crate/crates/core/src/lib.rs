//! Urban wind-field surrogate pipeline.
//!
//! The crate is split along the data flow:
//!
//! * [`field`]: grids, scalar fields, building masks, the binary field format
//!   and sliding-window dataset bookkeeping.
//! * [`sim`]: a semi-Lagrangian fractional-step LES solver that produces
//!   ground-truth velocity-magnitude sequences over block buildings.
//! * [`resample`]: natural cubic splines and separable downsampling.
//! * [`fno`]: the Fourier neural operator forward pass and its FFT kernels.
//! * [`train`]: layer-wise relative loss, reverse-mode gradients, Adam and
//!   checkpoints.
//! * [`eval`]: one-step error, rollout, distribution statistics, timing and
//!   VTK export.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iteration otherwise. Results are
//! bitwise identical either way.

pub mod error;
pub mod eval;
pub mod field;
pub mod fno;
pub mod par;
pub mod resample;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
