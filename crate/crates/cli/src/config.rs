//! Optional TOML config file with one table per stage.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use urbanfno::eval::EvalOptions;
use urbanfno::fno::FnoConfig;
use urbanfno::sim::SolverConfig;
use urbanfno::train::TrainConfig;
use urbanfno::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub solver: SolverConfig,
    pub train: TrainConfig,
    pub model: FnoConfig,
    pub eval: EvalOptions,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        if !path.is_file() {
            return Err(Error::InvalidArgument(format!("config file {} does not exist", path.display())));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))
    }
}
