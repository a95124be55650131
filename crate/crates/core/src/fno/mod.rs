//! Fourier neural operator: tensors, FFTs, parameters and the forward pass.

pub mod config;
pub mod fft;
pub(crate) mod linalg;
pub mod model;
pub mod params;
pub mod tensor;

pub use config::{param_count, Activation, FnoConfig};
pub use fft::{irfft3, max_modes, rfft3, SpectralPlan};
pub use model::{forward, forward_traced, fourier_layer, pointwise, spectral_conv, LayerParams, Trace};
pub use params::{FnoParameters, ParamGroup, ParamLayout};
pub use tensor::{ComplexTensor, Tensor};
