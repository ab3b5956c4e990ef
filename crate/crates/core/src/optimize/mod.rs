//! Continuous optimizers over θ and the two-stage candidate score.

mod adam;
mod bfgs;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_run, AdamConfig};
pub use bfgs::{bfgs_run, BfgsConfig};

use crate::expr::Tree;
use crate::pde::LossContext;

/// Value-and-gradient objective. `value` defaults to discarding the gradient.
pub trait Objective {
    fn value_grad(&self, theta: &[f64]) -> (f64, Vec<f64>);

    fn value(&self, theta: &[f64]) -> f64 {
        self.value_grad(theta).0
    }
}

impl<F: Fn(&[f64]) -> (f64, Vec<f64>)> Objective for F {
    fn value_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        self(theta)
    }
}

/// Loss of one tree on a bound problem, as an [`Objective`].
pub struct TreeLoss<'a> {
    pub ctx: &'a LossContext,
    pub tree: &'a Tree,
}

impl Objective for TreeLoss<'_> {
    fn value_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        self.ctx.loss_and_grad(self.tree, theta)
    }

    fn value(&self, theta: &[f64]) -> f64 {
        self.ctx.loss(self.tree, theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptFlag {
    NonFinite,
    LineSearchFailed,
}

/// Best iterate visited by an optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub flag: Option<OptFlag>,
}

pub fn score_from_loss(loss: f64) -> f64 {
    1.0 / (1.0 + loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    pub t1: AdamConfig,
    pub t2: BfgsConfig,
    #[serde(default = "one")]
    pub restarts: usize,
}

fn one() -> usize {
    1
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            t1: AdamConfig {
                lr: 1e-3,
                steps: 2,
                ..AdamConfig::default()
            },
            t2: BfgsConfig::default(),
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOutcome {
    pub score: f64,
    pub loss: f64,
    pub theta: Vec<f64>,
    pub iterations: usize,
}

/// Adam for `t1.steps` then BFGS for at most `t2.max_steps`, from freshly
/// initialized θ; keeps the best of `restarts` attempts.
pub fn compute_score<R: Rng + ?Sized>(ctx: &LossContext, tree: &Tree, cfg: &ScoreConfig, rng: &mut R) -> ScoreOutcome {
    let obj = TreeLoss { ctx, tree };
    let mut best: Option<ScoreOutcome> = None;
    for _ in 0..cfg.restarts.max(1) {
        let theta0 = tree.layout.init(rng);
        let a = adam_run(&obj, &theta0, &cfg.t1);
        let b = bfgs_run(&obj, &a.theta, &cfg.t2);
        let out = ScoreOutcome {
            score: score_from_loss(b.value),
            loss: b.value,
            theta: b.theta,
            iterations: a.iterations + b.iterations,
        };
        if best.as_ref().is_none_or(|o| out.loss < o.loss) {
            best = Some(out);
        }
    }
    best.expect("at least one restart")
}
