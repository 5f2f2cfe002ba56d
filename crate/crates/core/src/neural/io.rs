//! Versioned JSON weights files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdamState, Dense, DuelingNet};
use crate::{Error, Result};

pub const WEIGHTS_VERSION: u32 = 1;

/// Observation and action layout the network was trained for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub obs_dim: usize,
    pub obs_labels: Vec<String>,
    pub obs_scale: f64,
    pub action_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerRecord {
    name: String,
    shape: [usize; 2],
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WeightsFile {
    version: u32,
    layers: Vec<LayerRecord>,
    adam: AdamState,
    space: SpaceDescriptor,
    /// Free-form training metadata carried alongside the weights.
    #[serde(default)]
    extra: serde_json::Value,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightsBundle {
    pub net: DuelingNet,
    pub adam: AdamState,
    pub space: SpaceDescriptor,
    pub extra: serde_json::Value,
}

impl WeightsBundle {
    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        self.adam.check_against(&self.net)?;
        if self.space.obs_dim != self.net.obs_dim() {
            return Err(Error::Shape(format!(
                "descriptor obs_dim {} but network input {}",
                self.space.obs_dim,
                self.net.obs_dim()
            )));
        }
        if self.space.action_values.len() != self.net.n_actions() {
            return Err(Error::Shape(format!(
                "descriptor lists {} actions but network has {}",
                self.space.action_values.len(),
                self.net.n_actions()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let net = &self.net;
        let mut layers: Vec<LayerRecord> = net
            .trunk
            .iter()
            .enumerate()
            .map(|(i, l)| record(format!("trunk{i}"), l))
            .collect();
        layers.push(record("value".into(), &net.value_head));
        layers.push(record("advantage".into(), &net.advantage_head));
        let file = WeightsFile {
            version: WEIGHTS_VERSION,
            layers,
            adam: self.adam.clone(),
            space: self.space.clone(),
            extra: self.extra.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: VersionProbe =
            serde_json::from_str(text).map_err(|e| Error::CorruptWeights(e.to_string()))?;
        if probe.version != WEIGHTS_VERSION {
            return Err(Error::WeightsVersion {
                found: probe.version,
                expected: WEIGHTS_VERSION,
            });
        }
        let file: WeightsFile =
            serde_json::from_str(text).map_err(|e| Error::CorruptWeights(e.to_string()))?;
        if file.layers.len() < 3 {
            return Err(Error::Shape(format!("{} layers; need a trunk and two heads", file.layers.len())));
        }
        let mut dense: Vec<Dense> = file
            .layers
            .into_iter()
            .map(|r| Dense {
                inputs: r.shape[1],
                outputs: r.shape[0],
                weights: r.weights,
                bias: r.bias,
            })
            .collect();
        let advantage_head = dense.pop().expect("checked length");
        let value_head = dense.pop().expect("checked length");
        let bundle = WeightsBundle {
            net: DuelingNet {
                trunk: dense,
                value_head,
                advantage_head,
            },
            adam: file.adam,
            space: file.space,
            extra: file.extra,
        };
        bundle.validate()?;
        Ok(bundle)
    }
}

fn record(name: String, l: &Dense) -> LayerRecord {
    LayerRecord {
        name,
        shape: [l.outputs, l.inputs],
        weights: l.weights.clone(),
        bias: l.bias.clone(),
    }
}

pub fn save_weights(bundle: &WeightsBundle, path: &Path) -> Result<()> {
    std::fs::write(path, bundle.to_json()?)?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<WeightsBundle> {
    WeightsBundle::from_json(&std::fs::read_to_string(path)?)
}
