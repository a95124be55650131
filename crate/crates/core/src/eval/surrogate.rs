//! A trained model bundled with its input normalization.

use crate::error::{Error, Result};
use crate::field::{apply_mask, normalize, BuildingMask, NormStats, ScalarField};
use crate::fno::{forward, FnoParameters, Tensor};
use crate::train::Checkpoint;

#[derive(Debug, Clone)]
pub struct Surrogate {
    params: FnoParameters,
    norm: NormStats,
}

impl Surrogate {
    pub fn new(params: FnoParameters, norm: NormStats) -> Surrogate {
        Surrogate { params, norm }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Surrogate {
        Surrogate::new(ck.params.clone(), ck.norm)
    }

    pub fn params(&self) -> &FnoParameters {
        &self.params
    }

    pub fn norm(&self) -> NormStats {
        self.norm
    }

    /// Number of past fields one prediction consumes.
    pub fn history_len(&self) -> usize {
        self.params.config().in_channels
    }

    /// Next field from the last `history_len()` fields, oldest first.
    /// Solid cells are zeroed when a mask is given.
    pub fn predict(&self, history: &[&ScalarField], mask: Option<&BuildingMask>) -> Result<ScalarField> {
        if history.len() != self.history_len() {
            return Err(Error::Shape(format!(
                "model takes {} past fields, got {}",
                self.history_len(),
                history.len()
            )));
        }
        let grid = *history[0].grid();
        let normed = history.iter().map(|f| normalize(f, &self.norm)).collect::<Result<Vec<_>>>()?;
        let out = forward(&Tensor::from_fields(&normed)?, &self.params)?;
        let field = out.to_field(0, &grid)?;
        match mask {
            Some(m) => apply_mask(&field, m),
            None => Ok(field),
        }
    }
}
