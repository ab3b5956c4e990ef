use nalgebra::{DMatrix, DVector};

use super::basis::FeatureBasis;
use crate::error::{FexError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LsFit {
    /// `α_0..α_M`, intercept first.
    pub coeffs: Vec<f64>,
    /// Attained minimum of the residual sum of squares.
    pub sse: f64,
    /// `sse / J`.
    pub mse: f64,
}

/// Minimum-norm least squares via truncated SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    svd.solve(b, cutoff)
        .expect("SVD computed with both factors")
        .iter()
        .copied()
        .collect()
}

pub fn residual_sse(a: &DMatrix<f64>, coeffs: &[f64], targets: &[f64]) -> f64 {
    let r = a * DVector::from_column_slice(coeffs) - DVector::from_column_slice(targets);
    crate::numeric::compensated_sum(r.iter().map(|v| v * v))
}

/// Fits output weights of `basis` (with intercept) to `targets` at `points`.
pub fn ls_fit(basis: &FeatureBasis, points: &[Vec<f64>], targets: &[f64]) -> Result<LsFit> {
    if points.is_empty() || points.len() != targets.len() {
        return Err(FexError::Dimension {
            what: "least-squares targets",
            got: targets.len(),
            expected: points.len(),
        });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(FexError::NonFinite("least-squares targets"));
    }
    let a = basis.design_matrix(points);
    let coeffs = lstsq(&a, &DVector::from_column_slice(targets));
    let sse = residual_sse(&a, &coeffs, targets);
    Ok(LsFit {
        mse: sse / points.len() as f64,
        sse,
        coeffs,
    })
}
