//! Versioned JSON model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Standardizer;
use crate::error::{Error, Result};
use crate::rvine::{VineModel, VineTree};
use crate::stats::GaussianKernel1D;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitMetadata {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub truncation: usize,
    /// Omitted unless requested so that repeated fits produce identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub variable_names: Vec<String>,
    pub target_index: Option<usize>,
    pub marginals: Vec<GaussianKernel1D>,
    pub trees: Vec<VineTree>,
    pub fit_metadata: FitMetadata,
    /// Feature scaling applied before fitting, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Standardizer>,
}

impl ModelFile {
    pub fn from_model(model: &VineModel, metadata: FitMetadata) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            variable_names: model.names().to_vec(),
            target_index: model.target(),
            marginals: model.marginals().to_vec(),
            trees: model.trees().to_vec(),
            fit_metadata: metadata,
            normalization: None,
        }
    }

    /// Validates the stored model and returns it.
    pub fn to_model(&self) -> Result<VineModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.fit_metadata.truncation != self.trees.len() {
            return Err(Error::Structural(format!(
                "metadata truncation {} does not match {} stored trees",
                self.fit_metadata.truncation,
                self.trees.len()
            )));
        }
        VineModel::from_parts(
            self.variable_names.clone(),
            self.marginals.clone(),
            self.trees.clone(),
            self.target_index,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.to_model()?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::rvine::{fit_vine, VineConfig};

    fn small_model() -> VineModel {
        let a: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x + 0.1 * (i as f64).cos()).collect();
        fit_vine(&Dataset::with_default_names(vec![a, b]).unwrap(), &VineConfig::default()).unwrap()
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let m = small_model();
        let meta = FitMetadata {
            n: 40,
            seed: Some(3),
            truncation: 1,
            timestamp: None,
        };
        let f = ModelFile::from_model(&m, meta);
        let text = f.to_json().unwrap();
        assert!(!text.contains("timestamp"));
        let back = ModelFile::from_json(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_json().unwrap(), text);
        assert_eq!(back.to_model().unwrap(), m);
    }

    #[test]
    fn invalid_files_are_rejected() {
        let m = small_model();
        let meta = FitMetadata {
            n: 40,
            seed: None,
            truncation: 1,
            timestamp: None,
        };
        let mut f = ModelFile::from_model(&m, meta);
        f.format_version = 99;
        assert!(matches!(ModelFile::from_json(&f.to_json().unwrap()), Err(Error::Schema(_))));
        f.format_version = FORMAT_VERSION;
        f.marginals.pop();
        assert!(matches!(ModelFile::from_json(&f.to_json().unwrap()), Err(Error::Structural(_))));
        assert!(matches!(ModelFile::from_json("{"), Err(Error::ModelFile(_))));
    }
}
