use serde::{Deserialize, Serialize};

use super::{Activation, Adam, DenseNet, Layer, NumericsError};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamCheckpoint {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Self-describing container for one network (plus optional optimizer state).
/// Shape metadata is validated before any parameters are accepted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub format_version: u32,
    pub layers: Vec<LayerSpec>,
    /// Flat parameter array: per layer, row-major weights then biases.
    pub params: Vec<f64>,
    pub optimizer: Option<AdamCheckpoint>,
}

impl NetCheckpoint {
    pub fn capture(net: &DenseNet, optimizer: Option<&Adam>) -> Self {
        NetCheckpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            layers: net
                .layers
                .iter()
                .map(|l| LayerSpec { in_dim: l.in_dim, out_dim: l.out_dim, activation: l.act })
                .collect(),
            params: net.flat_params(),
            optimizer: optimizer.map(|o| AdamCheckpoint {
                lr: o.lr,
                beta1: o.beta1,
                beta2: o.beta2,
                eps: o.eps,
                step: o.step,
                m: o.m.clone(),
                v: o.v.clone(),
            }),
        }
    }

    /// Rebuild the network (and optimizer, when present) after validating the
    /// recorded shapes against the parameter payload.
    pub fn restore(&self) -> Result<(DenseNet, Option<Adam>), NumericsError> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(NumericsError::UnsupportedFormatVersion(self.format_version));
        }
        if self.layers.is_empty() {
            return Err(NumericsError::Shape("checkpoint has no layers".into()));
        }
        for pair in self.layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(NumericsError::Shape(format!(
                    "layer widths do not chain: {} -> {}",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
        }
        let expected: usize =
            self.layers.iter().map(|l| l.in_dim * l.out_dim + l.out_dim).sum();
        if self.params.len() != expected {
            return Err(NumericsError::Shape(format!(
                "parameter payload has {} values, shapes require {}",
                self.params.len(),
                expected
            )));
        }
        if let Some(p) = self.params.iter().find(|p| !p.is_finite()) {
            return Err(NumericsError::Shape(format!("non-finite parameter {p} in checkpoint")));
        }

        let mut layers = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for spec in &self.layers {
            let nw = spec.in_dim * spec.out_dim;
            let w = self.params[off..off + nw].to_vec();
            off += nw;
            let b = self.params[off..off + spec.out_dim].to_vec();
            off += spec.out_dim;
            layers.push(Layer {
                in_dim: spec.in_dim,
                out_dim: spec.out_dim,
                w,
                b,
                act: spec.activation,
            });
        }
        let net = DenseNet { layers };

        let optimizer = match &self.optimizer {
            None => None,
            Some(o) => {
                if o.m.len() != expected || o.v.len() != expected {
                    return Err(NumericsError::Shape(format!(
                        "optimizer moments have {}/{} values, shapes require {}",
                        o.m.len(),
                        o.v.len(),
                        expected
                    )));
                }
                Some(Adam {
                    lr: o.lr,
                    beta1: o.beta1,
                    beta2: o.beta2,
                    eps: o.eps,
                    step: o.step,
                    m: o.m.clone(),
                    v: o.v.clone(),
                })
            }
        };
        Ok((net, optimizer))
    }
}
