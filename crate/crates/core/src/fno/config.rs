use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Gelu,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => 0.5 * x * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2)),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Value and derivative at `x` in one evaluation.
    #[inline]
    pub fn apply_with_derivative(self, x: f64) -> (f64, f64) {
        match self {
            Activation::Gelu => {
                let cdf = 0.5 * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2));
                let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
                (x * cdf, cdf + x * pdf)
            }
            _ => (self.apply(x), self.derivative(x)),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => {
                let cdf = 0.5 * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2));
                let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
                cdf + x * pdf
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gelu" => Ok(Activation::Gelu),
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            _ => Err(format!("unknown activation '{s}' (gelu, relu, identity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FnoConfig {
    /// Retained modes per axis and sign.
    pub modes: usize,
    pub width: usize,
    pub layers: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub activation: Activation,
}

impl Default for FnoConfig {
    fn default() -> Self {
        FnoConfig {
            modes: 8,
            width: 20,
            layers: 4,
            in_channels: 5,
            out_channels: 1,
            activation: Activation::Gelu,
        }
    }
}

impl FnoConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.modes >= 1, "modes must be at least 1");
        ensure!(self.width >= 1, "width must be at least 1");
        ensure!(self.in_channels >= 1 && self.out_channels >= 1, "channel counts must be positive");
        Ok(())
    }

    /// Real scalars in one layer's spectral weights.
    pub fn spectral_len(&self) -> usize {
        4 * self.width * self.width * self.modes.pow(3) * 2
    }

    pub fn param_count(&self) -> usize {
        let (w, i, o) = (self.width, self.in_channels, self.out_channels);
        let lift = i * w + w;
        let layer = self.spectral_len() + w * w + w;
        let proj = w * o + o;
        lift + self.layers * layer + proj
    }
}

pub fn param_count(cfg: &FnoConfig) -> usize {
    cfg.param_count()
}
