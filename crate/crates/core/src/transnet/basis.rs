use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// `[σ, σ', σ'', σ''']` for σ = tanh.
#[inline]
pub fn tanh_derivs(z: f64) -> [f64; 4] {
    let s = z.tanh();
    let s1 = 1.0 - s * s;
    let s2 = -2.0 * s * s1;
    let s3 = -2.0 * (s1 * s1 + s * s2);
    [s, s1, s2, s3]
}

/// Neuron locations: unit directions `a_m` (Gaussian draws normalized) and
/// offsets `r_m ~ U[0, 1]`.
pub fn sample_locations<R: Rng + ?Sized>(m: usize, dim: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut dirs = Vec::with_capacity(m * dim);
    let mut offsets = Vec::with_capacity(m);
    for _ in 0..m {
        loop {
            let x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let n = crate::numeric::norm(&x);
            if n > 0.0 {
                dirs.extend(x.iter().map(|v| v / n));
                break;
            }
        }
        offsets.push(rng.random::<f64>());
    }
    (dirs, offsets)
}

/// Uniform sample in the unit ball of R^dim.
pub fn sample_unit_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = crate::numeric::norm(&x);
        if n > 0.0 {
            let radius = rng.random::<f64>().powf(1.0 / dim as f64);
            return x.iter().map(|v| v / n * radius).collect();
        }
    }
}

/// Single-hidden-layer tanh feature space with a shared shape parameter.
/// Neuron `m` is `tanh(γ (a_m·y + r_m))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBasis {
    pub dim: usize,
    pub gamma: f64,
    /// Row-major `M × dim` unit directions.
    pub directions: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl FeatureBasis {
    pub fn sample<R: Rng + ?Sized>(m: usize, dim: usize, gamma: f64, rng: &mut R) -> Self {
        assert!(m >= 1 && dim >= 1, "basis needs at least one neuron and dimension");
        assert!(gamma > 0.0, "shape parameter must be positive");
        let (directions, offsets) = sample_locations(m, dim, rng);
        Self {
            dim,
            gamma,
            directions,
            offsets,
        }
    }

    pub fn neurons(&self) -> usize {
        self.offsets.len()
    }

    pub fn direction(&self, m: usize) -> &[f64] {
        &self.directions[m * self.dim..(m + 1) * self.dim]
    }

    pub fn weight(&self, m: usize) -> Vec<f64> {
        self.direction(m).iter().map(|a| self.gamma * a).collect()
    }

    pub fn bias(&self, m: usize) -> f64 {
        self.gamma * self.offsets[m]
    }

    /// `[1, ψ_1(y), …, ψ_M(y)]`.
    pub fn features(&self, y: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.neurons() + 1);
        out.push(1.0);
        for m in 0..self.neurons() {
            let z = crate::numeric::dot(self.direction(m), y) + self.offsets[m];
            out.push((self.gamma * z).tanh());
        }
        out
    }

    pub fn design_matrix(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        let cols = self.neurons() + 1;
        let mut a = DMatrix::zeros(points.len(), cols);
        for (j, y) in points.iter().enumerate() {
            for (c, v) in self.features(y).into_iter().enumerate() {
                a[(j, c)] = v;
            }
        }
        a
    }

    pub fn evaluate(&self, coeffs: &[f64], y: &[f64]) -> f64 {
        crate::numeric::dot(coeffs, &self.features(y))
    }
}
