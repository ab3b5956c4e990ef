use rand::Rng;
use serde::{Deserialize, Serialize};

use super::basis::{tanh_derivs, FeatureBasis};
use super::lsq::ls_fit;
use crate::error::{FexError, Result};

/// Grid resolution used to measure the recorded sup-norm fit error.
pub const SUP_GRID: usize = 1001;

/// Scalar target functions with a fixed tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnTarget {
    Square,
    Cube,
    Quartic,
    Exp,
    Sin,
    Cos,
    SinOfSquare,
    XSinX,
}

impl TnTarget {
    pub const ALL: [TnTarget; 8] = [
        TnTarget::Square,
        TnTarget::Cube,
        TnTarget::Quartic,
        TnTarget::Exp,
        TnTarget::Sin,
        TnTarget::Cos,
        TnTarget::SinOfSquare,
        TnTarget::XSinX,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            TnTarget::Square => "x^2",
            TnTarget::Cube => "x^3",
            TnTarget::Quartic => "x^4",
            TnTarget::Exp => "exp",
            TnTarget::Sin => "sin",
            TnTarget::Cos => "cos",
            TnTarget::SinOfSquare => "sin(x^2)",
            TnTarget::XSinX => "x*sin(x)",
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.tag() == tag)
    }

    /// Parses an operator name of the form `TN[tag]`.
    pub fn from_operator_name(name: &str) -> Option<Self> {
        name.strip_prefix("TN[")?.strip_suffix(']').and_then(Self::parse)
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            TnTarget::Square => x * x,
            TnTarget::Cube => x * x * x,
            TnTarget::Quartic => x * x * x * x,
            TnTarget::Exp => x.exp(),
            TnTarget::Sin => x.sin(),
            TnTarget::Cos => x.cos(),
            TnTarget::SinOfSquare => (x * x).sin(),
            TnTarget::XSinX => x * x.sin(),
        }
    }
}

/// A trained one-dimensional network `Σ α_m tanh(γ(a_m y + r_m)) + α_0` with
/// frozen weights, used as a unary pool operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TnOperator {
    pub target_tag: String,
    pub domain: (f64, f64),
    pub basis: FeatureBasis,
    pub coeffs: Vec<f64>,
    pub fit_sup_error: f64,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

/// Serialized form of a [`TnOperator`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TnOperatorRecord {
    pub target_tag: String,
    pub domain: [f64; 2],
    #[serde(rename = "M")]
    pub m: usize,
    pub gamma: f64,
    pub a: Vec<f64>,
    pub r: Vec<f64>,
    pub alpha: Vec<f64>,
    pub fit_sup_error: f64,
}

impl TnOperator {
    pub fn new(target_tag: String, domain: (f64, f64), basis: FeatureBasis, coeffs: Vec<f64>) -> Result<Self> {
        if basis.dim != 1 {
            return Err(FexError::Dimension {
                what: "TN operator input",
                got: basis.dim,
                expected: 1,
            });
        }
        if coeffs.len() != basis.neurons() + 1 {
            return Err(FexError::Dimension {
                what: "TN output coefficients",
                got: coeffs.len(),
                expected: basis.neurons() + 1,
            });
        }
        if !(domain.0 < domain.1) {
            return Err(FexError::Config(format!("empty fit domain [{}, {}]", domain.0, domain.1)));
        }
        let weights = (0..basis.neurons()).map(|m| basis.weight(m)[0]).collect();
        let biases = (0..basis.neurons()).map(|m| basis.bias(m)).collect();
        Ok(Self {
            target_tag,
            domain,
            basis,
            coeffs,
            fit_sup_error: f64::NAN,
            weights,
            biases,
        })
    }

    pub fn name(&self) -> String {
        format!("TN[{}]", self.target_tag)
    }

    pub fn neurons(&self) -> usize {
        self.weights.len()
    }

    pub fn value(&self, y: f64) -> f64 {
        let mut v = self.coeffs[0];
        for ((a, w), b) in self.coeffs[1..].iter().zip(&self.weights).zip(&self.biases) {
            v += a * (w * y + b).tanh();
        }
        v
    }

    /// `[f, f', f'', f''']` from the tanh chain rule.
    pub fn derivs(&self, y: f64) -> [f64; 4] {
        let mut out = [self.coeffs[0], 0.0, 0.0, 0.0];
        for ((a, w), b) in self.coeffs[1..].iter().zip(&self.weights).zip(&self.biases) {
            let [s0, s1, s2, s3] = tanh_derivs(w * y + b);
            let aw = a * w;
            out[0] += a * s0;
            out[1] += aw * s1;
            out[2] += aw * w * s2;
            out[3] += aw * w * w * s3;
        }
        out
    }

    /// Sup-norm error against `f` on a uniform grid of the fit domain.
    pub fn measure_sup_error(&self, f: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = self.domain;
        (0..SUP_GRID)
            .map(|i| {
                let y = lo + (hi - lo) * i as f64 / (SUP_GRID - 1) as f64;
                (self.value(y) - f(y)).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_record(&self) -> TnOperatorRecord {
        TnOperatorRecord {
            target_tag: self.target_tag.clone(),
            domain: [self.domain.0, self.domain.1],
            m: self.neurons(),
            gamma: self.basis.gamma,
            a: self.basis.directions.clone(),
            r: self.basis.offsets.clone(),
            alpha: self.coeffs.clone(),
            fit_sup_error: self.fit_sup_error,
        }
    }

    pub fn from_record(rec: TnOperatorRecord) -> Result<Self> {
        if rec.a.len() != rec.m || rec.r.len() != rec.m {
            return Err(FexError::Dimension {
                what: "TN location parameters",
                got: rec.a.len().min(rec.r.len()),
                expected: rec.m,
            });
        }
        if !(rec.gamma > 0.0) {
            return Err(FexError::Config(format!("TN[{}]: gamma must be positive", rec.target_tag)));
        }
        let basis = FeatureBasis {
            dim: 1,
            gamma: rec.gamma,
            directions: rec.a,
            offsets: rec.r,
        };
        let mut op = Self::new(rec.target_tag, (rec.domain[0], rec.domain[1]), basis, rec.alpha)?;
        op.fit_sup_error = rec.fit_sup_error;
        Ok(op)
    }
}

/// Settings for fitting one TN operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TnFit {
    pub domain: (f64, f64),
    pub neurons: usize,
    pub gamma: f64,
    /// Fit points J (both domain endpoints plus `J - 2` uniform draws).
    pub samples: usize,
}

/// Samples locations, fixes the shape γ, fits output weights by least squares
/// on the fit domain and records the measured sup error.
pub fn build_tn_operator<R: Rng + ?Sized>(
    tag: &str,
    target: impl Fn(f64) -> f64,
    fit: TnFit,
    rng: &mut R,
) -> Result<TnOperator> {
    let (lo, hi) = fit.domain;
    if !(lo < hi) {
        return Err(FexError::Config(format!("empty fit domain [{lo}, {hi}]")));
    }
    if fit.samples < 2 || fit.neurons == 0 || !(fit.gamma > 0.0) {
        return Err(FexError::Config(
            "TN fit needs at least 2 samples, 1 neuron and a positive gamma".into(),
        ));
    }
    let basis = FeatureBasis::sample(fit.neurons, 1, fit.gamma, rng);
    let mut points = vec![vec![lo], vec![hi]];
    points.extend((2..fit.samples).map(|_| vec![rng.random_range(lo..hi)]));
    let targets: Vec<f64> = points.iter().map(|p| target(p[0])).collect();
    let lsq = ls_fit(&basis, &points, &targets)?;
    let mut op = TnOperator::new(tag.to_string(), fit.domain, basis, lsq.coeffs)?;
    op.fit_sup_error = op.measure_sup_error(&target);
    Ok(op)
}
