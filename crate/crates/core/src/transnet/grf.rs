use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{FexError, Result};

const JITTERS: [f64; 3] = [1e-10, 1e-8, 1e-6];

/// Squared-exponential covariance `exp(-|y - y'|² / (2 η²))`.
pub fn se_covariance(points: &[Vec<f64>], eta: f64) -> DMatrix<f64> {
    let n = points.len();
    let scale = 1.0 / (2.0 * eta * eta);
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d2 * scale).exp()
    })
}

/// One realization of a zero-mean Gaussian random field with
/// squared-exponential covariance, evaluated at `points`.
pub fn grf_realize<R: Rng + ?Sized>(points: &[Vec<f64>], eta: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(eta > 0.0) {
        return Err(FexError::Config("GRF correlation length must be positive".into()));
    }
    let n = points.len();
    let cov = se_covariance(points, eta);
    let chol = std::iter::once(0.0)
        .chain(JITTERS)
        .find_map(|jitter| {
            let mut k = cov.clone();
            for i in 0..n {
                k[(i, i)] += jitter;
            }
            k.cholesky()
        })
        .ok_or(FexError::Factorization(JITTERS[JITTERS.len() - 1]))?;
    let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    Ok((chol.l() * z).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coincident_points_get_equal_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = vec![vec![0.3, -0.1], vec![0.3, -0.1], vec![0.9, 0.2]];
        for _ in 0..20 {
            let v = grf_realize(&pts, 0.5, &mut rng).unwrap();
            assert!((v[0] - v[1]).abs() < 1e-4);
        }
    }

    #[test]
    fn empirical_correlation_at_one_length() {
        let eta = 0.5;
        let pts = vec![vec![0.0], vec![eta]];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 5000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let v = grf_realize(&pts, eta, &mut rng).unwrap();
            sxy += v[0] * v[1];
            sxx += v[0] * v[0];
            syy += v[1] * v[1];
        }
        let rho = sxy / (sxx * syy).sqrt();
        let target = (-0.5f64).exp();
        // Standard error of a sample correlation: (1 - ρ²)/sqrt(n).
        let se = (1.0 - target * target) / (n as f64).sqrt();
        assert!((rho - target).abs() < 3.0 * se, "rho {rho} vs {target}");
    }

    #[test]
    fn long_correlation_gives_flat_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..30).map(|_| crate::transnet::sample_unit_ball(3, &mut rng)).collect();
        for _ in 0..10 {
            let v = grf_realize(&pts, 1e6, &mut rng).unwrap();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            assert!(var < 1e-6, "variance {var}");
        }
    }

    #[test]
    fn bad_length_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(grf_realize(&[vec![0.0]], 0.0, &mut rng).is_err());
    }
}
