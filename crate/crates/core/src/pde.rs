//! Benchmark elliptic problems with manufactured solutions, point samplers,
//! and the penalized least-squares loss
//! `mean_interior (D u − f)² + λ · mean_boundary (u − g)²`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FexError, Result};
use crate::expr::{LeafTable, OperatorPool, Tree};
use crate::numeric::compensated_sum;

/// Loss value assigned to expressions that hit a domain error or overflow.
pub const PENALTY: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrueSolution {
    /// `0.5 Σ x_i²`
    HalfSquareSum,
    /// `Σ x_i³`
    CubeSum,
    /// `exp((1/d) Σ cos x_j)`
    ExpMeanCos,
}

impl TrueSolution {
    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            TrueSolution::HalfSquareSum => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            TrueSolution::CubeSum => x.iter().map(|v| v * v * v).sum(),
            TrueSolution::ExpMeanCos => mean_cos(x).exp(),
        }
    }

    pub fn grad(self, x: &[f64]) -> Vec<f64> {
        match self {
            TrueSolution::HalfSquareSum => x.to_vec(),
            TrueSolution::CubeSum => x.iter().map(|v| 3.0 * v * v).collect(),
            TrueSolution::ExpMeanCos => {
                let u = self.value(x);
                let d = x.len() as f64;
                x.iter().map(|v| -u * v.sin() / d).collect()
            }
        }
    }

    pub fn laplacian(self, x: &[f64]) -> f64 {
        match self {
            TrueSolution::HalfSquareSum => x.len() as f64,
            TrueSolution::CubeSum => 6.0 * x.iter().sum::<f64>(),
            TrueSolution::ExpMeanCos => {
                // u = exp(m): Δu = u (|∇m|² + Δm), ∇m = −sin(x)/d, Δm = −m.
                let m = mean_cos(x);
                let d = x.len() as f64;
                let grad_m2: f64 = x.iter().map(|v| v.sin() * v.sin()).sum::<f64>() / (d * d);
                m.exp() * (grad_m2 - m)
            }
        }
    }
}

fn mean_cos(x: &[f64]) -> f64 {
    x.iter().map(|v| v.cos()).sum::<f64>() / x.len() as f64
}

/// `−ν Δu + μ u [+ u²] = f` on the open cube `(lo, hi)^d` with Dirichlet
/// data `g = u*` on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeProblem {
    pub name: String,
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub nu: f64,
    pub mu: f64,
    pub nonlinear: bool,
    pub solution: TrueSolution,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOverrides {
    pub dim: Option<usize>,
    pub nu: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
}

pub const PROBLEM_NAMES: [&str; 3] = ["poisson60", "reactdiff60", "semilinear55"];

impl PdeProblem {
    pub fn make(name: &str, ov: ProblemOverrides) -> Result<Self> {
        let (dim, lo, nu, mu, nonlinear, solution) = match name {
            "poisson60" => (60, -1.0, 1.0, 0.0, false, TrueSolution::HalfSquareSum),
            "reactdiff60" => (60, 0.0, 1.0, 1.0, false, TrueSolution::CubeSum),
            "semilinear55" => (55, -1.0, 1.0, 1.0, true, TrueSolution::ExpMeanCos),
            other => return Err(FexError::UnknownProblem(other.to_string())),
        };
        let p = Self {
            name: name.to_string(),
            dim: ov.dim.unwrap_or(dim),
            lo,
            hi: 1.0,
            nu: ov.nu.unwrap_or(nu),
            mu: ov.mu.unwrap_or(mu),
            nonlinear,
            solution,
            lambda: ov.lambda.unwrap_or(100.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(FexError::Config("problem dimension must be positive".into()));
        }
        if !(self.lo < self.hi) {
            return Err(FexError::Config("domain bounds must satisfy lo < hi".into()));
        }
        if !(self.nu >= 0.0) {
            return Err(FexError::Config("`nu` must be non-negative".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(FexError::Config("`lambda` must be positive".into()));
        }
        Ok(())
    }

    pub fn true_value(&self, x: &[f64]) -> f64 {
        self.solution.value(x)
    }

    /// Manufactured right-hand side `f = −ν Δu* + μ u* [+ u*²]`.
    pub fn rhs(&self, x: &[f64]) -> f64 {
        let u = self.solution.value(x);
        let mut f = -self.nu * self.solution.laplacian(x) + self.mu * u;
        if self.nonlinear {
            f += u * u;
        }
        f
    }

    /// Differential operator applied to a candidate with value `v` and Laplacian `lap`.
    pub fn apply_operator(&self, v: f64, lap: f64) -> f64 {
        let mut r = -self.nu * lap + self.mu * v;
        if self.nonlinear {
            r += v * v;
        }
        r
    }

    pub fn sample_points<R: Rng + ?Sized>(&self, n_interior: usize, n_boundary: usize, rng: &mut R) -> SampleSet {
        let interior = (0..n_interior).map(|_| self.interior_point(rng)).collect();
        let boundary = (0..n_boundary)
            .map(|_| {
                let mut x = self.interior_point(rng);
                let face = rng.random_range(0..self.dim);
                x[face] = if rng.random_bool(0.5) { self.lo } else { self.hi };
                x
            })
            .collect();
        SampleSet { interior, boundary }
    }

    /// Uniform point in the open cube.
    pub fn interior_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim)
            .map(|_| loop {
                let v = rng.random_range(self.lo..self.hi);
                if v > self.lo {
                    break v;
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub interior: Vec<Vec<f64>>,
    pub boundary: Vec<Vec<f64>>,
}

/// Interior residual mean and boundary mismatch mean (before λ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub interior: f64,
    pub boundary: f64,
    pub lambda: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.interior + self.lambda * self.boundary
    }
}

/// Loss without precomputation; evaluates every operator directly.
pub fn loss(problem: &PdeProblem, tree: &Tree, theta: &[f64], samples: &SampleSet) -> f64 {
    match loss_parts(problem, tree, theta, samples) {
        Some(p) if p.total().is_finite() => p.total(),
        _ => PENALTY,
    }
}

pub fn loss_parts(problem: &PdeProblem, tree: &Tree, theta: &[f64], samples: &SampleSet) -> Option<LossParts> {
    let interior: Vec<f64> = samples
        .interior
        .par_iter()
        .map(|x| {
            let j = tree.evaluate_jet(theta, x).ok()?;
            let r = problem.apply_operator(j.value, j.lap) - problem.rhs(x);
            Some(r * r)
        })
        .collect::<Option<_>>()?;
    let boundary: Vec<f64> = samples
        .boundary
        .par_iter()
        .map(|x| {
            let v = tree.evaluate(theta, x).ok()?;
            let e = v - problem.true_value(x);
            Some(e * e)
        })
        .collect::<Option<_>>()?;
    Some(LossParts {
        interior: mean(&interior),
        boundary: mean(&boundary),
        lambda: problem.lambda,
    })
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        compensated_sum(v.iter().copied()) / v.len() as f64
    }
}

/// A problem bound to a fixed sample set and operator pool, with right-hand
/// side, boundary data and leaf operator values precomputed.
#[derive(Debug, Clone)]
pub struct LossContext {
    pub problem: PdeProblem,
    pub samples: SampleSet,
    rhs: Vec<f64>,
    boundary_data: Vec<f64>,
    interior_table: LeafTable,
    boundary_table: LeafTable,
}

impl LossContext {
    pub fn new(problem: PdeProblem, samples: SampleSet, pool: &OperatorPool) -> Self {
        let rhs = samples.interior.iter().map(|x| problem.rhs(x)).collect();
        let boundary_data = samples.boundary.iter().map(|x| problem.true_value(x)).collect();
        Self {
            interior_table: LeafTable::build(pool, &samples.interior),
            boundary_table: LeafTable::build(pool, &samples.boundary),
            problem,
            samples,
            rhs,
            boundary_data,
        }
    }

    /// Loss of `tree` (built from the same pool) at `theta`.
    pub fn loss(&self, tree: &Tree, theta: &[f64]) -> f64 {
        let interior: Option<Vec<f64>> = self
            .samples
            .interior
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let j = tree.jet_at(theta, x, &self.interior_table, i).ok()?;
                let r = self.problem.apply_operator(j.value, j.lap) - self.rhs[i];
                Some(r * r)
            })
            .collect();
        let boundary: Option<Vec<f64>> = self
            .samples
            .boundary
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let v = tree.value_at(theta, x, &self.boundary_table, i).ok()?;
                let e = v - self.boundary_data[i];
                Some(e * e)
            })
            .collect();
        match (interior, boundary) {
            (Some(a), Some(b)) => {
                let total = mean(&a) + self.problem.lambda * mean(&b);
                if total.is_finite() {
                    total
                } else {
                    PENALTY
                }
            }
            _ => PENALTY,
        }
    }

    /// Loss and its exact θ-gradient. Penalized evaluations return a zero gradient.
    pub fn loss_and_grad(&self, tree: &Tree, theta: &[f64]) -> (f64, Vec<f64>) {
        let p = theta.len();
        let p_ = &self.problem;
        let interior: Option<Vec<(f64, Vec<f64>)>> = self
            .samples
            .interior
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let (j, dv, dl) = tree.value_lap_sensitivity_at(theta, x, &self.interior_table, i).ok()?;
                let r = p_.apply_operator(j.value, j.lap) - self.rhs[i];
                let dv_coef = p_.mu + if p_.nonlinear { 2.0 * j.value } else { 0.0 };
                let g = (0..p).map(|k| 2.0 * r * (-p_.nu * dl[k] + dv_coef * dv[k])).collect();
                Some((r * r, g))
            })
            .collect();
        let boundary: Option<Vec<(f64, Vec<f64>)>> = self
            .samples
            .boundary
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let (v, dv) = tree.value_sensitivity_at(theta, x, &self.boundary_table, i).ok()?;
                let e = v - self.boundary_data[i];
                Some((e * e, dv.iter().map(|d| 2.0 * e * d).collect()))
            })
            .collect();
        let (Some(a), Some(b)) = (interior, boundary) else {
            return (PENALTY, vec![0.0; p]);
        };
        let (na, nb) = (a.len().max(1) as f64, b.len().max(1) as f64);
        let lam = p_.lambda;
        let value = mean_of(&a, |t| t.0) + lam * mean_of(&b, |t| t.0);
        let grad: Vec<f64> = (0..p)
            .map(|k| {
                compensated_sum(a.iter().map(|t| t.1[k])) / na + lam * compensated_sum(b.iter().map(|t| t.1[k])) / nb
            })
            .collect();
        if value.is_finite() && grad.iter().all(|g| g.is_finite()) {
            (value, grad)
        } else {
            (PENALTY, vec![0.0; p])
        }
    }
}

fn mean_of<T>(v: &[T], f: impl Fn(&T) -> f64) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        compensated_sum(v.iter().map(f)) / v.len() as f64
    }
}

/// Run-config block describing the problem and its collocation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    pub n_interior: usize,
    pub n_boundary: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<PdeProblem> {
        PdeProblem::make(
            &self.name,
            ProblemOverrides {
                dim: self.d,
                nu: self.nu,
                mu: self.mu,
                lambda: self.lambda,
            },
        )
    }

    /// Same config with every defaulted coefficient filled in.
    pub fn resolved(&self) -> Result<Self> {
        let p = self.build()?;
        Ok(Self {
            d: Some(p.dim),
            nu: Some(p.nu),
            mu: Some(p.mu),
            lambda: Some(p.lambda),
            ..self.clone()
        })
    }
}
