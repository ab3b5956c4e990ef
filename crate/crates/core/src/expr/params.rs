use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::Skeleton;
use crate::error::{FexError, Result};

/// Location of one unary node's `(α, β)` inside the packed parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub node: usize,
    pub offset: usize,
    pub scale_len: usize,
    pub leaf: bool,
}

impl ParamSlot {
    pub fn beta_index(&self) -> usize {
        self.offset + self.scale_len
    }
}

/// Packing map for θ: per unary node (inorder), `scale_len` scaling entries
/// followed by one bias.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub slots: Vec<ParamSlot>,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeParams {
    pub alpha: Vec<f64>,
    pub beta: f64,
}

impl ParamLayout {
    pub fn for_skeleton(skel: &Skeleton) -> Self {
        let mut slots = Vec::new();
        let mut offset = 0;
        for (node, n) in skel.nodes.iter().enumerate() {
            if n.is_unary() {
                let scale_len = if n.is_leaf() { skel.input_dim } else { 1 };
                slots.push(ParamSlot {
                    node,
                    offset,
                    scale_len,
                    leaf: n.is_leaf(),
                });
                offset += scale_len + 1;
            }
        }
        Self { slots, len: offset }
    }

    pub fn slot_for_node(&self, node: usize) -> Option<&ParamSlot> {
        self.slots.iter().find(|s| s.node == node)
    }

    pub fn unpack(&self, theta: &[f64]) -> Result<Vec<NodeParams>> {
        self.check(theta)?;
        Ok(self
            .slots
            .iter()
            .map(|s| NodeParams {
                alpha: theta[s.offset..s.offset + s.scale_len].to_vec(),
                beta: theta[s.beta_index()],
            })
            .collect())
    }

    pub fn pack(&self, params: &[NodeParams]) -> Result<Vec<f64>> {
        if params.len() != self.slots.len() {
            return Err(FexError::Dimension {
                what: "node parameter list",
                got: params.len(),
                expected: self.slots.len(),
            });
        }
        let mut theta = vec![0.0; self.len];
        for (s, p) in self.slots.iter().zip(params) {
            if p.alpha.len() != s.scale_len {
                return Err(FexError::Dimension {
                    what: "scaling vector",
                    got: p.alpha.len(),
                    expected: s.scale_len,
                });
            }
            theta[s.offset..s.offset + s.scale_len].copy_from_slice(&p.alpha);
            theta[s.beta_index()] = p.beta;
        }
        Ok(theta)
    }

    pub fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.len {
            return Err(FexError::Dimension {
                what: "parameter vector",
                got: theta.len(),
                expected: self.len,
            });
        }
        Ok(())
    }

    /// Random initial θ: leaf scalings i.i.d. uniform on `[-1, 1] / sqrt(d)`,
    /// interior scalings 1, biases 0.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut theta = vec![0.0; self.len];
        for s in &self.slots {
            if !s.leaf {
                theta[s.offset] = 1.0;
            } else {
                let scale = 1.0 / (s.scale_len as f64).sqrt();
                for a in &mut theta[s.offset..s.offset + s.scale_len] {
                    *a = rng.random_range(-1.0..=1.0) * scale;
                }
            }
        }
        theta
    }

}
