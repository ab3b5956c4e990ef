use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Objective, OptFlag, OptResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BfgsConfig {
    /// Initial trial step of the backtracking line search.
    pub step: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    /// Updates with `sᵀy ≤ curvature_eps · |s| |y|` are skipped.
    pub curvature_eps: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_steps: 20,
            grad_tol: 1e-12,
            curvature_eps: 1e-12,
        }
    }
}

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 40;

/// Inverse-Hessian BFGS with Armijo backtracking.
pub fn bfgs_run(obj: &impl Objective, theta0: &[f64], cfg: &BfgsConfig) -> OptResult {
    let n = theta0.len();
    let mut x = DVector::from_column_slice(theta0);
    let (f0, g0) = obj.value_grad(theta0);
    let mut res = OptResult {
        theta: theta0.to_vec(),
        value: f0,
        iterations: 0,
        flag: None,
    };
    if !f0.is_finite() || g0.iter().any(|v| !v.is_finite()) {
        res.flag = Some(OptFlag::NonFinite);
        return res;
    }
    let mut f = f0;
    let mut g = DVector::from_vec(g0);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut scaled = false;

    for k in 0..cfg.max_steps {
        if g.norm() <= cfg.grad_tol {
            break;
        }
        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if !(slope < 0.0) {
            h.fill_with_identity();
            p = -g.clone();
            slope = -g.norm_squared();
        }
        let mut t = cfg.step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = &x + t * &p;
            let ft = obj.value(trial.as_slice());
            if ft.is_finite() && ft <= f + ARMIJO_C * t * slope {
                accepted = Some(trial);
                break;
            }
            t *= BACKTRACK;
        }
        let Some(x_new) = accepted else {
            res.flag = Some(OptFlag::LineSearchFailed);
            res.iterations = k;
            return res;
        };
        let (f_new, g_new) = obj.value_grad(x_new.as_slice());
        if !f_new.is_finite() || g_new.iter().any(|v| !v.is_finite()) {
            res.flag = Some(OptFlag::NonFinite);
            res.iterations = k;
            return res;
        }
        let g_new = DVector::from_vec(g_new);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > cfg.curvature_eps * s.norm() * y.norm() {
            if !scaled {
                h = DMatrix::identity(n, n) * (sy / y.norm_squared());
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H⁺ = H − ρ(H y sᵀ + s yᵀH) + (ρ² yᵀHy + ρ) s sᵀ
            h -= rho * (&hy * s.transpose() + &s * hy.transpose());
            h += (rho * rho * yhy + rho) * (&s * s.transpose());
        }
        x = x_new;
        f = f_new;
        g = g_new;
        if f <= res.value {
            res.value = f;
            res.theta = x.as_slice().to_vec();
        }
        res.iterations = k + 1;
    }
    res
}
