//! Flat parameter storage with named groups.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::FnoConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamGroup {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

/// Offsets of every group in the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    groups: Vec<ParamGroup>,
    total: usize,
}

impl ParamLayout {
    pub fn new(cfg: &FnoConfig) -> ParamLayout {
        let (w, m) = (cfg.width, cfg.modes);
        let mut shapes: Vec<(String, Vec<usize>)> = vec![
            ("lift.weight".into(), vec![w, cfg.in_channels]),
            ("lift.bias".into(), vec![w]),
        ];
        for l in 0..cfg.layers {
            shapes.push((format!("layers.{l}.spectral"), vec![4, w, w, m, m, m, 2]));
            shapes.push((format!("layers.{l}.weight"), vec![w, w]));
            shapes.push((format!("layers.{l}.bias"), vec![w]));
        }
        shapes.push(("proj.weight".into(), vec![cfg.out_channels, w]));
        shapes.push(("proj.bias".into(), vec![cfg.out_channels]));
        let mut offset = 0;
        let groups = shapes
            .into_iter()
            .map(|(name, shape)| {
                let len = shape.iter().product();
                let g = ParamGroup { name, shape, offset, len };
                offset += len;
                g
            })
            .collect();
        ParamLayout { groups, total: offset }
    }

    pub fn groups(&self) -> &[ParamGroup] {
        &self.groups
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn find(&self, name: &str) -> Option<&ParamGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// Group containing flat index `i`.
    pub fn group_of(&self, i: usize) -> Option<&ParamGroup> {
        self.groups.iter().find(|g| (g.offset..g.offset + g.len).contains(&i))
    }

    fn range(&self, idx: usize) -> std::ops::Range<usize> {
        let g = &self.groups[idx];
        g.offset..g.offset + g.len
    }
}

/// Indices of the groups inside [`ParamLayout::groups`].
pub(crate) mod slot {
    pub const LIFT_W: usize = 0;
    pub const LIFT_B: usize = 1;
    pub fn spectral(l: usize) -> usize {
        2 + 3 * l
    }
    pub fn weight(l: usize) -> usize {
        3 + 3 * l
    }
    pub fn bias(l: usize) -> usize {
        4 + 3 * l
    }
    pub fn proj_w(layers: usize) -> usize {
        2 + 3 * layers
    }
    pub fn proj_b(layers: usize) -> usize {
        3 + 3 * layers
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnoParameters {
    config: FnoConfig,
    layout: ParamLayout,
    values: Vec<f64>,
}

impl FnoParameters {
    pub fn zeros(cfg: &FnoConfig) -> FnoParameters {
        let layout = ParamLayout::new(cfg);
        FnoParameters {
            config: cfg.clone(),
            values: vec![0.0; layout.total()],
            layout,
        }
    }

    /// Seeded initialization. Dense weights and biases are uniform in
    /// `+-1/sqrt(fan_in)`; spectral weights are uniform in `[0, 1/width^2)`
    /// for both parts. Values are rounded to `f32` so checkpoints are exact.
    pub fn init(cfg: &FnoConfig, seed: u64) -> Result<FnoParameters> {
        cfg.validate()?;
        let mut p = FnoParameters::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = cfg.width as f64;
        let fan_in = |g: &ParamGroup| -> f64 {
            if g.name.starts_with("lift") {
                cfg.in_channels as f64
            } else {
                w
            }
        };
        for g in p.layout.groups.clone() {
            let slice = &mut p.values[g.offset..g.offset + g.len];
            if g.name.ends_with("spectral") {
                let scale = 1.0 / (w * w);
                for v in slice.iter_mut() {
                    *v = scale * rng.gen::<f64>();
                }
            } else {
                let bound = 1.0 / fan_in(&g).sqrt();
                for v in slice.iter_mut() {
                    *v = rng.gen_range(-bound..bound);
                }
            }
        }
        p.round_to_f32();
        Ok(p)
    }

    pub fn from_values(cfg: &FnoConfig, values: Vec<f64>) -> Result<FnoParameters> {
        let layout = ParamLayout::new(cfg);
        if values.len() != layout.total() {
            return Err(Error::Shape(format!(
                "expected {} parameters for this configuration, got {}",
                layout.total(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let g = layout.group_of(i).map_or("?", |g| g.name.as_str());
            return Err(Error::Numeric(format!("non-finite parameter in {g}")));
        }
        Ok(FnoParameters {
            config: cfg.clone(),
            layout,
            values,
        })
    }

    pub fn config(&self) -> &FnoConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn group(&self, name: &str) -> Option<&[f64]> {
        self.layout.find(name).map(|g| &self.values[g.offset..g.offset + g.len])
    }

    pub fn group_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let g = self.layout.find(name)?.clone();
        Some(&mut self.values[g.offset..g.offset + g.len])
    }

    pub(crate) fn slot(&self, idx: usize) -> &[f64] {
        &self.values[self.layout.range(idx)]
    }

    pub fn round_to_f32(&mut self) {
        for v in &mut self.values {
            *v = *v as f32 as f64;
        }
    }
}
