//! Forward-mode propagation of value, gradient and Laplacian through a tree,
//! optionally together with their sensitivities to every entry of θ.
//!
//! Each node produces `(v, ∇v, Δv)`. For a unary node `g = α f(h) + β`:
//!
//! ```text
//! ∇g = α f'(h) ∇h
//! Δg = α (f''(h) |∇h|² + f'(h) Δh)
//! ```
//!
//! A leaf applied to `x ∈ R^d` computes `Σ_i α_i f(x_i) + β`. The θ-sensitivity
//! of `Δg` involves `f'''`, which every unary operator provides.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ops::{BinaryOp, OperatorPool, UnaryOp};
use super::params::ParamLayout;
use super::tree::{Node, Skeleton};
use crate::error::{FexError, Result};
use crate::numeric::dot;

/// Denominators with magnitude below this floor raise a [`DomainError`].
pub const DIVISION_FLOOR: f64 = 1e-12;

/// Operator indices for each node, in skeleton order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OperatorSequence(pub Vec<usize>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("domain error at node {node}: denominator below floor")]
pub struct DomainError {
    pub node: usize,
}

#[derive(Debug, Clone)]
pub enum NodeOp {
    Unary(UnaryOp),
    Binary(BinaryOp),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub lap: f64,
}

/// Sensitivities of a [`Jet`] to θ. `grad` is row-major `|θ| × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetSensitivity {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub lap: Vec<f64>,
    pub dim: usize,
}

impl JetSensitivity {
    pub fn grad_row(&self, k: usize) -> &[f64] {
        &self.grad[k * self.dim..(k + 1) * self.dim]
    }
}

/// A skeleton with an operator assigned to every node.
#[derive(Debug, Clone)]
pub struct Tree {
    pub skeleton: Skeleton,
    pub sequence: OperatorSequence,
    pub ops: Vec<NodeOp>,
    pub layout: ParamLayout,
}

/// Leaf operator derivatives `[f, f', f'']` at a fixed point set, per unary
/// pool entry. Leaves read from it instead of re-evaluating operators.
#[derive(Debug, Clone)]
pub struct LeafTable {
    dim: usize,
    n_points: usize,
    values: Vec<Vec<[f64; 3]>>,
}

impl LeafTable {
    pub fn build(pool: &OperatorPool, points: &[Vec<f64>]) -> Self {
        use rayon::prelude::*;
        let dim = points.first().map_or(0, Vec::len);
        let values = pool
            .unary
            .par_iter()
            .map(|op| {
                points
                    .iter()
                    .flat_map(|x| x.iter().map(|&xi| {
                        let [f0, f1, f2, _] = op.derivs(xi);
                        [f0, f1, f2]
                    }))
                    .collect()
            })
            .collect();
        Self {
            dim,
            n_points: points.len(),
            values,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    fn get(&self, op: usize, point: usize, i: usize) -> [f64; 3] {
        self.values[op][point * self.dim + i]
    }
}

#[derive(Clone, Copy)]
struct Lookup<'a> {
    table: &'a LeafTable,
    point: usize,
}

#[derive(Clone, Copy)]
struct Mode {
    jet: bool,
    sens: bool,
    d: usize,
    p: usize,
}

struct NodeOut {
    v: f64,
    g: Vec<f64>,
    l: f64,
    dv: Vec<f64>,
    dg: Vec<f64>,
    dl: Vec<f64>,
}

impl Tree {
    pub fn new(skeleton: &Skeleton, pool: &OperatorPool, seq: &OperatorSequence) -> Result<Self> {
        if seq.0.len() != skeleton.len() {
            return Err(FexError::Dimension {
                what: "operator sequence",
                got: seq.0.len(),
                expected: skeleton.len(),
            });
        }
        let mut ops = Vec::with_capacity(seq.0.len());
        for (node, (&idx, n)) in seq.0.iter().zip(&skeleton.nodes).enumerate() {
            let op = match n {
                Node::Unary { .. } => pool.unary.get(idx).cloned().map(NodeOp::Unary),
                Node::Binary { .. } => pool.binary.get(idx).copied().map(NodeOp::Binary),
            };
            ops.push(op.ok_or_else(|| FexError::OperatorKind {
                name: format!("#{idx}"),
                node,
                kind: n.kind_str(),
            })?);
        }
        Ok(Self {
            skeleton: skeleton.clone(),
            sequence: seq.clone(),
            ops,
            layout: ParamLayout::for_skeleton(skeleton),
        })
    }

    /// Builds a tree from operator names, e.g. `["x^2", "+", "0"]`.
    pub fn from_names(skeleton: &Skeleton, pool: &OperatorPool, names: &[&str]) -> Result<Self> {
        if names.len() != skeleton.len() {
            return Err(FexError::Dimension {
                what: "operator name list",
                got: names.len(),
                expected: skeleton.len(),
            });
        }
        let mut seq = Vec::with_capacity(names.len());
        for (node, (name, n)) in names.iter().zip(&skeleton.nodes).enumerate() {
            let idx = if n.is_unary() {
                pool.unary_index(name)
            } else {
                pool.binary_index(name)
            };
            seq.push(idx.ok_or_else(|| FexError::OperatorKind {
                name: name.to_string(),
                node,
                kind: n.kind_str(),
            })?);
        }
        Self::new(skeleton, pool, &OperatorSequence(seq))
    }

    pub fn dim(&self) -> usize {
        self.skeleton.input_dim
    }

    pub fn param_len(&self) -> usize {
        self.layout.len
    }

    pub fn op_names(&self) -> Vec<String> {
        self.ops
            .iter()
            .map(|op| match op {
                NodeOp::Unary(u) => u.name(),
                NodeOp::Binary(b) => b.symbol().to_string(),
            })
            .collect()
    }

    /// TN operators referenced by this tree, deduplicated by name.
    pub fn tn_operators(&self) -> Vec<Arc<crate::transnet::TnOperator>> {
        let mut out: Vec<Arc<crate::transnet::TnOperator>> = Vec::new();
        for op in &self.ops {
            if let NodeOp::Unary(UnaryOp::Tn(tn)) = op {
                if !out.iter().any(|o| o.name() == tn.name()) {
                    out.push(tn.clone());
                }
            }
        }
        out
    }

    pub fn evaluate(&self, theta: &[f64], x: &[f64]) -> std::result::Result<f64, DomainError> {
        Ok(self.run(theta, x, None, false, false, false)?.v)
    }

    pub fn evaluate_jet(&self, theta: &[f64], x: &[f64]) -> std::result::Result<Jet, DomainError> {
        let o = self.run(theta, x, None, true, false, false)?;
        Ok(Jet {
            value: o.v,
            grad: o.g,
            lap: o.l,
        })
    }

    /// Value and its θ-gradient only; cheaper than the full jet.
    pub fn evaluate_with_value_sensitivity(
        &self,
        theta: &[f64],
        x: &[f64],
    ) -> std::result::Result<(f64, Vec<f64>), DomainError> {
        let o = self.run(theta, x, None, false, true, false)?;
        Ok((o.v, o.dv))
    }

    /// Value and θ-gradient at `table`'s point `point` (whose coordinates are `x`).
    pub fn value_sensitivity_at(
        &self,
        theta: &[f64],
        x: &[f64],
        table: &LeafTable,
        point: usize,
    ) -> std::result::Result<(f64, Vec<f64>), DomainError> {
        let o = self.run(theta, x, Some(Lookup { table, point }), false, true, false)?;
        Ok((o.v, o.dv))
    }

    /// Value, Laplacian and their θ-gradients at a tabulated point. The
    /// gradient-sensitivity block is not formed at the root.
    pub fn value_lap_sensitivity_at(
        &self,
        theta: &[f64],
        x: &[f64],
        table: &LeafTable,
        point: usize,
    ) -> std::result::Result<(Jet, Vec<f64>, Vec<f64>), DomainError> {
        let o = self.run(theta, x, Some(Lookup { table, point }), true, true, false)?;
        Ok((
            Jet {
                value: o.v,
                grad: o.g,
                lap: o.l,
            },
            o.dv,
            o.dl,
        ))
    }

    pub fn value_at(&self, theta: &[f64], x: &[f64], table: &LeafTable, point: usize) -> std::result::Result<f64, DomainError> {
        Ok(self.run(theta, x, Some(Lookup { table, point }), false, false, false)?.v)
    }

    pub fn jet_at(&self, theta: &[f64], x: &[f64], table: &LeafTable, point: usize) -> std::result::Result<Jet, DomainError> {
        let o = self.run(theta, x, Some(Lookup { table, point }), true, false, false)?;
        Ok(Jet {
            value: o.v,
            grad: o.g,
            lap: o.l,
        })
    }

    pub fn evaluate_jet_with_sensitivity(
        &self,
        theta: &[f64],
        x: &[f64],
    ) -> std::result::Result<(Jet, JetSensitivity), DomainError> {
        let o = self.run(theta, x, None, true, true, true)?;
        Ok((
            Jet {
                value: o.v,
                grad: o.g,
                lap: o.l,
            },
            JetSensitivity {
                value: o.dv,
                grad: o.dg,
                lap: o.dl,
                dim: self.dim(),
            },
        ))
    }

    fn run(
        &self,
        theta: &[f64],
        x: &[f64],
        lookup: Option<Lookup<'_>>,
        jet: bool,
        sens: bool,
        root_dg: bool,
    ) -> std::result::Result<NodeOut, DomainError> {
        assert_eq!(theta.len(), self.layout.len, "parameter vector length");
        assert_eq!(x.len(), self.dim(), "input dimension");
        let mode = Mode {
            jet,
            sens,
            d: self.dim(),
            p: self.layout.len,
        };
        self.node(self.skeleton.root, theta, x, lookup, mode, root_dg)
    }

    /// `want_dg`: whether the caller consumes this node's gradient sensitivities.
    fn node(
        &self,
        idx: usize,
        theta: &[f64],
        x: &[f64],
        lookup: Option<Lookup<'_>>,
        m: Mode,
        want_dg: bool,
    ) -> std::result::Result<NodeOut, DomainError> {
        match (&self.skeleton.nodes[idx], &self.ops[idx]) {
            (Node::Unary { child: None }, NodeOp::Unary(op)) => {
                Ok(self.leaf(idx, op, theta, x, lookup, m, want_dg))
            }
            (Node::Unary { child: Some(c) }, NodeOp::Unary(op)) => {
                let h = self.node(*c, theta, x, lookup, m, true)?;
                Ok(self.interior(idx, op, theta, h, m))
            }
            (Node::Binary { left, right }, NodeOp::Binary(op)) => {
                let child_dg = want_dg || matches!(op, BinaryOp::Mul | BinaryOp::Div);
                let a = self.node(*left, theta, x, lookup, m, child_dg)?;
                let b = self.node(*right, theta, x, lookup, m, child_dg)?;
                binary(idx, *op, a, b, m)
            }
            _ => unreachable!("operator kind checked at construction"),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn leaf(
        &self,
        idx: usize,
        op: &UnaryOp,
        theta: &[f64],
        x: &[f64],
        lookup: Option<Lookup<'_>>,
        m: Mode,
        want_dg: bool,
    ) -> NodeOut {
        let slot = self.layout.slot_for_node(idx).expect("unary node has a slot");
        let (off, d) = (slot.offset, m.d);
        let alpha = &theta[off..off + d];
        let op_index = self.sequence.0[idx];
        let mut out = NodeOut::zeros_with(m, want_dg);
        out.v = theta[slot.beta_index()];
        for i in 0..d {
            if m.jet {
                let [f0, f1, f2] = match lookup {
                    Some(lk) => lk.table.get(op_index, lk.point, i),
                    None => {
                        let [f0, f1, f2, _] = op.derivs(x[i]);
                        [f0, f1, f2]
                    }
                };
                out.v += alpha[i] * f0;
                out.g[i] = alpha[i] * f1;
                out.l += alpha[i] * f2;
                if m.sens {
                    out.dv[off + i] = f0;
                    if want_dg {
                        out.dg[(off + i) * d + i] = f1;
                    }
                    out.dl[off + i] = f2;
                }
            } else {
                let f0 = match lookup {
                    Some(lk) => lk.table.get(op_index, lk.point, i)[0],
                    None => op.value(x[i]),
                };
                out.v += alpha[i] * f0;
                if m.sens {
                    out.dv[off + i] = f0;
                }
            }
        }
        if m.sens {
            out.dv[slot.beta_index()] = 1.0;
        }
        out
    }

    fn interior(&self, idx: usize, op: &UnaryOp, theta: &[f64], h: NodeOut, m: Mode) -> NodeOut {
        let slot = self.layout.slot_for_node(idx).expect("unary node has a slot");
        let (ai, bi) = (slot.offset, slot.beta_index());
        let (alpha, beta) = (theta[ai], theta[bi]);
        let [f0, f1, f2, f3] = op.derivs(h.v);
        let d = m.d;
        let mut out = NodeOut::zeros(m);
        out.v = alpha * f0 + beta;
        let gg = if m.jet { dot(&h.g, &h.g) } else { 0.0 };
        if m.jet {
            for i in 0..d {
                out.g[i] = alpha * f1 * h.g[i];
            }
            out.l = alpha * (f2 * gg + f1 * h.l);
        }
        if m.sens {
            for k in 0..m.p {
                let dvk = h.dv[k];
                out.dv[k] = alpha * f1 * dvk;
                if m.jet {
                    let dgk = &h.dg[k * d..(k + 1) * d];
                    let row = &mut out.dg[k * d..(k + 1) * d];
                    for i in 0..d {
                        row[i] = alpha * (f2 * dvk * h.g[i] + f1 * dgk[i]);
                    }
                    out.dl[k] = alpha
                        * (f3 * dvk * gg + 2.0 * f2 * dot(&h.g, dgk) + f2 * dvk * h.l + f1 * h.dl[k]);
                }
            }
            out.dv[ai] = f0;
            out.dv[bi] = 1.0;
            if m.jet {
                for i in 0..d {
                    out.dg[ai * d + i] = f1 * h.g[i];
                }
                out.dl[ai] = f2 * gg + f1 * h.l;
            }
        }
        out
    }
}

impl NodeOut {
    fn zeros(m: Mode) -> Self {
        Self::zeros_with(m, true)
    }

    fn zeros_with(m: Mode, with_dg: bool) -> Self {
        let jd = if m.jet && with_dg { m.d } else { 0 };
        Self {
            v: 0.0,
            g: vec![0.0; if m.jet { m.d } else { 0 }],
            l: 0.0,
            dv: vec![0.0; if m.sens { m.p } else { 0 }],
            dg: vec![0.0; if m.sens { m.p * jd } else { 0 }],
            dl: vec![0.0; if m.sens && m.jet { m.p } else { 0 }],
        }
    }
}

fn binary(idx: usize, op: BinaryOp, a: NodeOut, b: NodeOut, m: Mode) -> std::result::Result<NodeOut, DomainError> {
    let mut out = NodeOut::zeros_with(m, !a.dg.is_empty() && !b.dg.is_empty());
    match op {
        BinaryOp::Add | BinaryOp::Sub => {
            let s = if op == BinaryOp::Add { 1.0 } else { -1.0 };
            out.v = a.v + s * b.v;
            out.l = a.l + s * b.l;
            zip_into(&mut out.g, &a.g, &b.g, |x, y| x + s * y);
            zip_into(&mut out.dv, &a.dv, &b.dv, |x, y| x + s * y);
            if a.dg.is_empty() || b.dg.is_empty() {
                out.dg = Vec::new();
            } else {
                zip_into(&mut out.dg, &a.dg, &b.dg, |x, y| x + s * y);
            }
            zip_into(&mut out.dl, &a.dl, &b.dl, |x, y| x + s * y);
        }
        BinaryOp::Mul => {
            out.v = a.v * b.v;
            if m.jet {
                zip_into(&mut out.g, &a.g, &b.g, |x, y| x * b.v + a.v * y);
                out.l = a.l * b.v + 2.0 * dot(&a.g, &b.g) + a.v * b.l;
            }
            if m.sens {
                let d = m.d;
                for k in 0..m.p {
                    out.dv[k] = a.dv[k] * b.v + a.v * b.dv[k];
                    if m.jet {
                        let (dga, dgb) = (&a.dg[k * d..(k + 1) * d], &b.dg[k * d..(k + 1) * d]);
                        let row = &mut out.dg[k * d..(k + 1) * d];
                        for i in 0..d {
                            row[i] = dga[i] * b.v + a.g[i] * b.dv[k] + a.dv[k] * b.g[i] + a.v * dgb[i];
                        }
                        out.dl[k] = a.dl[k] * b.v
                            + a.l * b.dv[k]
                            + 2.0 * (dot(dga, &b.g) + dot(&a.g, dgb))
                            + a.dv[k] * b.l
                            + a.v * b.dl[k];
                    }
                }
            }
        }
        BinaryOp::Div => {
            if b.v.abs() < DIVISION_FLOOR {
                return Err(DomainError { node: idx });
            }
            let q = a.v / b.v;
            out.v = q;
            if m.jet {
                zip_into(&mut out.g, &a.g, &b.g, |x, y| (x - q * y) / b.v);
                out.l = (a.l - 2.0 * dot(&out.g, &b.g) - q * b.l) / b.v;
            }
            if m.sens {
                let d = m.d;
                for k in 0..m.p {
                    let dq = (a.dv[k] - q * b.dv[k]) / b.v;
                    out.dv[k] = dq;
                    if m.jet {
                        let (dga, dgb) = (&a.dg[k * d..(k + 1) * d], &b.dg[k * d..(k + 1) * d]);
                        let mut row = vec![0.0; d];
                        for i in 0..d {
                            row[i] = (dga[i] - dq * b.g[i] - q * dgb[i] - out.g[i] * b.dv[k]) / b.v;
                        }
                        out.dl[k] = (a.dl[k]
                            - out.l * b.dv[k]
                            - 2.0 * (dot(&row, &b.g) + dot(&out.g, dgb))
                            - dq * b.l
                            - q * b.dl[k])
                            / b.v;
                        out.dg[k * d..(k + 1) * d].copy_from_slice(&row);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn zip_into(out: &mut [f64], a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = f(*x, *y);
    }
}
