use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::MlpParams;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "eta-mlp/v1";

/// On-disk JSON layout: `{format, layer_dims, weights, biases}` with each
/// weight matrix flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl From<&MlpParams> for Checkpoint {
    fn from(p: &MlpParams) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            layer_dims: p.layer_dims().to_vec(),
            weights: p.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: p.biases.iter().map(|b| b.to_vec()).collect(),
        }
    }
}

impl Checkpoint {
    pub fn into_params(self) -> Result<MlpParams> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Parse(format!("unsupported checkpoint format `{}`", self.format)));
        }
        if self.weights.len() + 1 != self.layer_dims.len() {
            return Err(Error::DimensionMismatch { expected: self.layer_dims.len().saturating_sub(1), got: self.weights.len() });
        }
        let mut weights = Vec::with_capacity(self.weights.len());
        for (l, w) in self.weights.into_iter().enumerate() {
            let shape = (self.layer_dims[l + 1], self.layer_dims[l]);
            let len = w.len();
            weights.push(
                Array2::from_shape_vec(shape, w)
                    .map_err(|_| Error::DimensionMismatch { expected: shape.0 * shape.1, got: len })?,
            );
        }
        let biases = self.biases.into_iter().map(Array1::from).collect();
        MlpParams::from_parts(self.layer_dims, weights, biases)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(params: &MlpParams, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, Checkpoint::from(params).to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<MlpParams> {
        let text = std::fs::read_to_string(path)?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        ck.into_params()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = stream_rng(12, Stream::Property);
        let p = MlpParams::glorot(&[2, 7, 3], &mut rng).unwrap();
        let json = Checkpoint::from(&p).to_json().unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_params().unwrap(), p);
    }

    #[test]
    fn rejects_bad_checkpoints() {
        let p = MlpParams::zeros(&[2, 3, 1]).unwrap();
        let mut ck = Checkpoint::from(&p);
        ck.format = "other/v0".into();
        assert!(ck.into_params().is_err());
        let mut ck = Checkpoint::from(&p);
        ck.weights[0].pop();
        assert!(ck.into_params().is_err());
        let mut ck = Checkpoint::from(&p);
        ck.biases[1].push(0.0);
        assert!(ck.into_params().is_err());
    }
}
