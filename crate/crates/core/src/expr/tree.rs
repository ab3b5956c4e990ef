use serde::{Deserialize, Serialize};

use crate::error::{FexError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    /// `child == None` marks a leaf applied componentwise to the raw input.
    Unary { child: Option<usize> },
    Binary { left: usize, right: usize },
}

impl Node {
    pub fn is_unary(&self) -> bool {
        matches!(self, Node::Unary { .. })
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Unary { child: None })
    }

    pub fn kind_str(&self) -> &'static str {
        if self.is_unary() {
            "unary"
        } else {
            "binary"
        }
    }
}

/// Fixed binary-tree topology. Nodes are stored in inorder, where a unary
/// interior node comes after its only child.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skeleton {
    pub depth: usize,
    pub input_dim: usize,
    pub nodes: Vec<Node>,
    pub root: usize,
}

impl Skeleton {
    pub fn build(depth: usize, input_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(FexError::Config("input dimension must be positive".into()));
        }
        let leaf = Node::Unary { child: None };
        let (nodes, root) = match depth {
            1 => (vec![leaf], 0),
            2 => (vec![leaf, Node::Binary { left: 0, right: 2 }, leaf], 1),
            3 => (
                vec![
                    leaf,
                    Node::Binary { left: 0, right: 2 },
                    leaf,
                    Node::Unary { child: Some(1) },
                ],
                3,
            ),
            other => return Err(FexError::UnsupportedDepth(other)),
        };
        Ok(Self {
            depth,
            input_dim,
            nodes,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Operator bound k_T for this topology (one operator per node).
    pub fn max_operators(&self) -> usize {
        self.nodes.len()
    }
}
