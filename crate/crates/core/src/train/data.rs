//! In-memory training data built from a prepared manifest.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{normalize, read_field, DatasetManifest, Grid3, NormStats, SampleWindow, ScalarField};
use crate::fno::Tensor;

/// A manifest with its fields loaded.
#[derive(Debug, Clone)]
pub struct TrainingData {
    manifest: DatasetManifest,
    fields: Vec<ScalarField>,
    inputs: Vec<ScalarField>,
    hash: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl TrainingData {
    /// Read the manifest and every field it lists.
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<TrainingData> {
        let path = manifest_path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let manifest = DatasetManifest::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fields = manifest
            .field_paths(base)
            .iter()
            .map(read_field)
            .collect::<Result<Vec<_>>>()?;
        let mut data = TrainingData::from_memory(manifest, fields)?;
        data.hash = hex(&Sha256::digest(&bytes));
        Ok(data)
    }

    /// Use already loaded fields, one per manifest entry.
    pub fn from_memory(manifest: DatasetManifest, fields: Vec<ScalarField>) -> Result<TrainingData> {
        manifest.validate()?;
        if fields.len() != manifest.fields.len() {
            return Err(Error::Shape(format!(
                "manifest lists {} fields, {} given",
                manifest.fields.len(),
                fields.len()
            )));
        }
        if let Some(first) = fields.first() {
            for (t, f) in fields.iter().enumerate() {
                if !f.grid().same_as(first.grid()) {
                    return Err(Error::Shape(format!("field {t} is on a different grid than field 0")));
                }
            }
        }
        let stats = manifest.input_stats();
        let inputs = fields.iter().map(|f| normalize(f, &stats)).collect::<Result<Vec<_>>>()?;
        let hash = hex(&Sha256::digest(serde_json::to_vec(&manifest)?));
        Ok(TrainingData {
            manifest,
            fields,
            inputs,
            hash,
        })
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }

    pub fn grid(&self) -> Option<&Grid3> {
        self.fields.first().map(|f| f.grid())
    }

    pub fn input_stats(&self) -> NormStats {
        self.manifest.input_stats()
    }

    /// SHA-256 of the manifest bytes.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// `[inputs, X, Y, Z]`, normalized when the manifest says so.
    pub fn input(&self, w: &SampleWindow) -> Result<Tensor> {
        Tensor::from_fields(w.input_indices().map(|t| &self.inputs[t]))
    }

    /// `[1, X, Y, Z]` in physical units.
    pub fn target(&self, w: &SampleWindow) -> Result<Tensor> {
        Tensor::from_fields([&self.fields[w.target_index()]])
    }

    pub fn train_windows(&self) -> Vec<SampleWindow> {
        self.manifest.train_windows().collect()
    }

    pub fn test_windows(&self) -> Vec<SampleWindow> {
        self.manifest.test_windows().collect()
    }
}
