//! Finite expressions as binary trees with per-node operators.

mod jet;
mod ops;
mod params;
mod render;
mod tree;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use jet::{DomainError, Jet, JetSensitivity, LeafTable, NodeOp, OperatorSequence, Tree, DIVISION_FLOOR};
pub use ops::{BinaryOp, OperatorPool, UnaryOp};
pub use params::{NodeParams, ParamLayout, ParamSlot};
pub use tree::{Node, Skeleton};

use crate::error::{FexError, Result};
use crate::transnet::{TnOperator, TnOperatorRecord};

/// A tree together with concrete parameters.
#[derive(Debug, Clone)]
pub struct Expression {
    pub tree: Tree,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaRecord {
    pub values: Vec<f64>,
    pub layout: ParamLayout,
}

/// JSON export of an expression. TN operators it uses are embedded so the
/// record can be evaluated on its own.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpressionRecord {
    pub skeleton: Skeleton,
    pub e: Vec<String>,
    pub theta: ThetaRecord,
    pub render: String,
    #[serde(default)]
    pub tn_operators: Vec<TnOperatorRecord>,
}

impl Expression {
    pub fn new(tree: Tree, theta: Vec<f64>) -> Result<Self> {
        tree.layout.check(&theta)?;
        Ok(Self { tree, theta })
    }

    pub fn dim(&self) -> usize {
        self.tree.dim()
    }

    pub fn value(&self, x: &[f64]) -> std::result::Result<f64, DomainError> {
        self.tree.evaluate(&self.theta, x)
    }

    pub fn jet(&self, x: &[f64]) -> std::result::Result<Jet, DomainError> {
        self.tree.evaluate_jet(&self.theta, x)
    }

    pub fn render(&self, precision: usize) -> String {
        render::render(&self.tree, &self.theta, precision)
    }

    pub fn to_record(&self) -> ExpressionRecord {
        ExpressionRecord {
            skeleton: self.tree.skeleton.clone(),
            e: self.tree.op_names(),
            theta: ThetaRecord {
                values: self.theta.clone(),
                layout: self.tree.layout.clone(),
            },
            render: self.render(6),
            tn_operators: self.tree.tn_operators().iter().map(|t| t.to_record()).collect(),
        }
    }

    pub fn from_record(rec: &ExpressionRecord) -> Result<Self> {
        let mut tns: BTreeMap<String, Arc<TnOperator>> = BTreeMap::new();
        for r in &rec.tn_operators {
            let op = TnOperator::from_record(r.clone())?;
            tns.insert(op.name(), Arc::new(op));
        }
        let mut unary = Vec::new();
        let mut binary = Vec::new();
        let mut seq = Vec::new();
        for (node, (name, n)) in rec.e.iter().zip(&rec.skeleton.nodes).enumerate() {
            if n.is_unary() {
                let op = match UnaryOp::builtin(name) {
                    Some(op) => op,
                    None => UnaryOp::Tn(
                        tns.get(name)
                            .cloned()
                            .ok_or_else(|| FexError::UnknownOperator(name.clone()))?,
                    ),
                };
                seq.push(unary.len());
                unary.push(op);
            } else {
                let op = BinaryOp::parse(name).ok_or_else(|| FexError::OperatorKind {
                    name: name.clone(),
                    node,
                    kind: "binary",
                })?;
                seq.push(binary.len());
                binary.push(op);
            }
        }
        if binary.is_empty() {
            binary.push(BinaryOp::Add);
        }
        let pool = OperatorPool::new(unary, binary)?;
        let tree = Tree::new(&rec.skeleton, &pool, &OperatorSequence(seq))?;
        if tree.layout != rec.theta.layout {
            return Err(FexError::Config("parameter layout does not match skeleton".into()));
        }
        Self::new(tree, rec.theta.values.clone())
    }
}
