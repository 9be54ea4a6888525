use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MlpModel, NnError, TrainConfig};
use crate::mesh::{ScaleConvention, TetMesh};
use crate::Error;

pub const MODEL_FORMAT: &str = "deformest-model/1";

/// A trained network plus everything needed to use it safely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub mesh_hash: String,
    pub dataset_hash: String,
    pub observation_ids: Vec<usize>,
    pub n_free: usize,
    pub scale: ScaleConvention,
    pub train_config: TrainConfig,
    pub final_train_rmse_mm: f64,
    pub final_cost: f64,
    pub updates: u64,
    pub model: MlpModel,
}

impl ModelArtifact {
    pub fn check_mesh(&self, mesh: &TetMesh) -> Result<(), Error> {
        let found = mesh.content_hash();
        if found != self.mesh_hash {
            return Err(Error::Config(format!(
                "mesh hash mismatch: model was trained on {}, got {found}",
                self.mesh_hash
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let a: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("bad model file: {e}")))?;
        if a.format != MODEL_FORMAT {
            return Err(Error::Config(format!("unsupported model format {:?}", a.format)));
        }
        let [m1, _, _, m4] = a.model.layer_sizes();
        if m1 != 3 * a.observation_ids.len() || m4 != 3 * a.n_free {
            return Err(NnError::shape(
                "model layers",
                format!("({}, _, _, {})", 3 * a.observation_ids.len(), 3 * a.n_free),
                format!("({m1}, _, _, {m4})"),
            )
            .into());
        }
        Ok(a)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), Error> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn artifact() -> ModelArtifact {
        ModelArtifact {
            format: MODEL_FORMAT.into(),
            mesh_hash: "m".into(),
            dataset_hash: "d".into(),
            observation_ids: vec![4, 7],
            n_free: 3,
            scale: ScaleConvention::default(),
            train_config: TrainConfig::default(),
            final_train_rmse_mm: 0.5,
            final_cost: 1e-3,
            updates: 10,
            model: MlpModel::zeros([6, 2, 2, 9]).unwrap(),
        }
    }

    #[test]
    fn json_round_trip() {
        let a = artifact();
        assert_eq!(ModelArtifact::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn layer_mismatch_is_rejected() {
        let mut a = artifact();
        a.n_free = 4;
        assert!(ModelArtifact::from_json(&a.to_json()).is_err());
        let mut a = artifact();
        a.format = "other".into();
        assert!(ModelArtifact::from_json(&a.to_json()).is_err());
    }
}
