use serde::{Deserialize, Serialize};

use super::{Objective, OptFlag, OptResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub steps: usize,
    /// Cosine decay of the step size from `lr` down to `lr / 100`.
    pub cosine_decay: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 0,
            cosine_decay: false,
        }
    }
}

impl AdamConfig {
    fn lr_at(&self, t: usize) -> f64 {
        if !self.cosine_decay || self.steps <= 1 {
            return self.lr;
        }
        let floor = self.lr / 100.0;
        let frac = t as f64 / (self.steps - 1) as f64;
        floor + 0.5 * (self.lr - floor) * (1.0 + (std::f64::consts::PI * frac).cos())
    }
}

/// Bias-corrected Adam. Returns the best iterate seen, including the final one.
pub fn adam_run(obj: &impl Objective, theta0: &[f64], cfg: &AdamConfig) -> OptResult {
    let n = theta0.len();
    let mut theta = theta0.to_vec();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut best = OptResult {
        theta: theta.clone(),
        value: f64::INFINITY,
        iterations: 0,
        flag: None,
    };
    let (mut b1t, mut b2t) = (1.0, 1.0);
    for t in 0..cfg.steps {
        let (f, g) = obj.value_grad(&theta);
        if !f.is_finite() || g.iter().any(|x| !x.is_finite()) {
            best.flag = Some(OptFlag::NonFinite);
            best.iterations = t;
            if !best.value.is_finite() {
                best.value = f;
            }
            return best;
        }
        if f < best.value {
            best.value = f;
            best.theta.copy_from_slice(&theta);
        }
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        let lr = cfg.lr_at(t);
        for i in 0..n {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let mh = m[i] / (1.0 - b1t);
            let vh = v[i] / (1.0 - b2t);
            theta[i] -= lr * mh / (vh.sqrt() + cfg.eps);
        }
    }
    let f = obj.value(&theta);
    if f < best.value || !best.value.is_finite() && f.is_finite() {
        best.value = f;
        best.theta = theta;
    } else if !best.value.is_finite() {
        best.value = f;
        best.flag = Some(OptFlag::NonFinite);
    }
    best.iterations = cfg.steps;
    best
}
