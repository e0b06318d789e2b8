//! Versioned JSON persistence for identification models.
//!
//! Only the raw references and the configuration are stored; the whitening
//! transform and both dictionaries are re-derived on load, which is exact
//! because every step is deterministic.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identify::{build_model, IdentificationModel};
use crate::scalar::Scalar;
use crate::signals::{Ensemble, Signal};
use crate::snmf::SolverConfig;
use crate::whitening::WhiteningMethod;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StoredSignal<T> {
    pub id: String,
    pub label: String,
    pub dt: T,
    pub samples: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelFile<T> {
    pub format_version: u32,
    pub whitening_method: WhiteningMethod,
    pub eig_floor: T,
    pub solver: SolverConfig<T>,
    pub references: Vec<StoredSignal<T>>,
}

impl<T: Scalar> ModelFile<T> {
    pub fn from_model(model: &IdentificationModel<T>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            whitening_method: model.method(),
            eig_floor: model.eig_floor(),
            solver: model.solver().clone(),
            references: model
                .references()
                .signals()
                .iter()
                .map(|s| StoredSignal {
                    id: s.id.clone(),
                    label: s.label.clone(),
                    dt: s.dt(),
                    samples: s.samples().to_vec(),
                })
                .collect(),
        }
    }

    pub fn into_model(self) -> Result<IdentificationModel<T>> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let signals = self
            .references
            .into_iter()
            .map(|s| Signal::new(s.id, s.label, s.samples, s.dt))
            .collect::<Result<Vec<_>>>()?;
        build_model(
            Ensemble::new(signals)?,
            self.whitening_method,
            self.solver,
            self.eig_floor,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))
    }
}

pub fn save_model<T: Scalar>(model: &IdentificationModel<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, ModelFile::from_model(model).to_json()?)?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<IdentificationModel<T>> {
    ModelFile::from_json(&fs::read_to_string(path)?)?.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::whitening::DEFAULT_EIG_FLOOR;

    fn model() -> IdentificationModel<f64> {
        let sig = |id: &str, label: &str, v: &[f64]| {
            Signal::new(id, label, v.to_vec(), 0.125e-9).unwrap()
        };
        let refs = Ensemble::new(vec![
            sig("a0", "a", &[0.0, 3.0, 0.1, 0.0, 0.2, 1.0 / 3.0]),
            sig("b0", "b", &[0.1, 0.0, 0.0, 0.2, 0.0, 3.0]),
            sig("c0", "c", &[1.0, 0.7, -0.3, 0.2, 0.1, 0.0]),
        ])
        .unwrap();
        build_model(
            refs,
            WhiteningMethod::PcaCor,
            SolverConfig::default(),
            DEFAULT_EIG_FLOOR,
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_rebuilds_model() {
        let m = model();
        let text = ModelFile::from_model(&m).to_json().unwrap();
        assert!(text.contains("\"format_version\": 1"));
        assert!(text.contains("\"pca-cor\""));
        let back = ModelFile::<f64>::from_json(&text)
            .unwrap()
            .into_model()
            .unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn wrong_version_rejected() {
        let mut f = ModelFile::from_model(&model());
        f.format_version = 2;
        assert!(matches!(f.into_model(), Err(Error::ModelFormat(_))));
        assert!(ModelFile::<f64>::from_json("{}").is_err());
    }
}
