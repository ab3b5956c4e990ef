//! Risk-seeking policy-gradient controller over operator sequences, with one
//! independent categorical distribution per tree node.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FexError, Result};
use crate::expr::{OperatorPool, OperatorSequence, Skeleton};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub epsilon: f64,
    /// When set, ε decays linearly to this value over the search iterations.
    pub epsilon_final: Option<f64>,
    pub quantile: f64,
    pub learning_rate: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            epsilon_final: None,
            quantile: 0.5,
            learning_rate: 0.002,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let eps_ok = |e: f64| (0.0..=1.0).contains(&e);
        if !eps_ok(self.epsilon) || self.epsilon_final.is_some_and(|e| !eps_ok(e)) {
            return Err(FexError::Config("epsilon must lie in [0, 1]".into()));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(FexError::Config("quantile must lie in (0, 1)".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(FexError::Config("controller learning_rate must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    /// One logit row per skeleton node.
    pub logits: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub epsilon_final: Option<f64>,
    pub decay_steps: usize,
    pub quantile: f64,
    pub learning_rate: f64,
    pub step: usize,
}

impl ControllerState {
    /// Zero logits (uniform policy) sized for `skel` over `pool`.
    pub fn new(skel: &Skeleton, pool: &OperatorPool, cfg: &ControllerConfig, decay_steps: usize) -> Result<Self> {
        cfg.validate()?;
        let rows = skel
            .nodes
            .iter()
            .map(|n| vec![0.0; if n.is_unary() { pool.unary.len() } else { pool.binary.len() }])
            .collect();
        Ok(Self::from_logits(rows, cfg, decay_steps))
    }

    pub fn from_logits(logits: Vec<Vec<f64>>, cfg: &ControllerConfig, decay_steps: usize) -> Self {
        Self {
            logits,
            epsilon: cfg.epsilon,
            epsilon_final: cfg.epsilon_final,
            decay_steps,
            quantile: cfg.quantile,
            learning_rate: cfg.learning_rate,
            step: 0,
        }
    }

    /// Exploration rate at the current step.
    pub fn current_epsilon(&self) -> f64 {
        match self.epsilon_final {
            Some(end) if self.decay_steps > 1 => {
                let frac = (self.step as f64 / (self.decay_steps - 1) as f64).min(1.0);
                self.epsilon + (end - self.epsilon) * frac
            }
            _ => self.epsilon,
        }
    }

    pub fn probabilities(&self, node: usize) -> Vec<f64> {
        softmax(&self.logits[node])
    }

    pub fn sample_sequence<R: Rng + ?Sized>(&self, rng: &mut R) -> OperatorSequence {
        let eps = self.current_epsilon();
        let seq = self
            .logits
            .iter()
            .map(|row| {
                // Both draws are always consumed so the stream layout does not depend on ε.
                let explore = rng.random::<f64>() < eps;
                let u: f64 = rng.random();
                if explore {
                    ((u * row.len() as f64) as usize).min(row.len() - 1)
                } else {
                    categorical(&softmax(row), u)
                }
            })
            .collect();
        OperatorSequence(seq)
    }

    /// `log p(e)` under the learned categoricals (ε ignored).
    pub fn log_prob(&self, e: &OperatorSequence) -> f64 {
        self.logits
            .iter()
            .zip(&e.0)
            .map(|(row, &i)| row[i] - log_sum_exp(row))
            .sum()
    }

    /// Gradient of `log p(e)` with respect to all logits, flattened row by row.
    pub fn log_prob_grad(&self, e: &OperatorSequence) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_logits());
        for (row, &i) in self.logits.iter().zip(&e.0) {
            let p = softmax(row);
            out.extend(p.iter().enumerate().map(|(j, pj)| if j == i { 1.0 - pj } else { -pj }));
        }
        out
    }

    pub fn n_logits(&self) -> usize {
        self.logits.iter().map(Vec::len).sum()
    }

    /// Masked, baseline-shifted gradient estimate for a scored batch.
    pub fn update_direction(&self, sequences: &[OperatorSequence], scores: &[f64]) -> Vec<f64> {
        let mut dir = vec![0.0; self.n_logits()];
        if sequences.is_empty() {
            return dir;
        }
        let thr = quantile_threshold(scores, self.quantile);
        let n = sequences.len() as f64;
        for (e, &s) in sequences.iter().zip(scores) {
            if s <= thr {
                continue;
            }
            let w = (s - thr) / n;
            for (d, g) in dir.iter_mut().zip(self.log_prob_grad(e)) {
                *d += w * g;
            }
        }
        dir
    }

    /// One ascent step on the risk-seeking objective; advances the step counter.
    pub fn update(&mut self, sequences: &[OperatorSequence], scores: &[f64]) -> Result<()> {
        if sequences.len() != scores.len() {
            return Err(FexError::Dimension {
                what: "batch scores",
                got: scores.len(),
                expected: sequences.len(),
            });
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(FexError::NonFinite("batch score"));
        }
        let dir = self.update_direction(sequences, scores);
        let mut k = 0;
        for row in &mut self.logits {
            for l in row.iter_mut() {
                *l += self.learning_rate * dir[k];
                k += 1;
            }
        }
        self.step += 1;
        Ok(())
    }
}

/// Lower order statistic at 1-based rank `ceil((1 − ν) N)`, clamped to `[1, N]`.
pub fn quantile_threshold(scores: &[f64], nu: f64) -> f64 {
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let rank = (((1.0 - nu) * n as f64).ceil() as usize).clamp(1, n);
    s[rank - 1]
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + row.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

fn categorical(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}
