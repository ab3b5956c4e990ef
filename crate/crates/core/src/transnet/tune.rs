use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{sample_unit_ball, FeatureBasis};
use super::grf::grf_realize;
use super::lsq::ls_fit;
use crate::error::{FexError, Result};
use crate::rng::{index2, stream, Purpose};

/// Grid search settings for the shared shape parameter γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaTuneConfig {
    /// Neurons M.
    #[serde(default = "default_neurons")]
    pub neurons: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_eta")]
    pub eta_corr: f64,
    /// GRF realizations K.
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Sample points J per realization.
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_neurons() -> usize {
    200
}
fn default_dim() -> usize {
    1
}
fn default_eta() -> f64 {
    0.5
}
fn default_realizations() -> usize {
    10
}
fn default_samples() -> usize {
    500
}
fn default_grid() -> usize {
    50
}

impl Default for GammaTuneConfig {
    fn default() -> Self {
        Self {
            neurons: default_neurons(),
            dim: default_dim(),
            eta_corr: default_eta(),
            realizations: default_realizations(),
            samples: default_samples(),
            gamma_min: 0.1,
            gamma_max: 10.0,
            grid_size: default_grid(),
            seed: 0,
        }
    }
}

impl GammaTuneConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("neurons", self.neurons),
            ("dim", self.dim),
            ("realizations", self.realizations),
            ("samples", self.samples),
            ("grid_size", self.grid_size),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(FexError::Config(format!("`{key}` must be positive")));
            }
        }
        if !(self.gamma_min > 0.0 && self.gamma_min < self.gamma_max) {
            return Err(FexError::Config(format!(
                "`gamma_min` ({}) must be positive and below `gamma_max` ({})",
                self.gamma_min, self.gamma_max
            )));
        }
        if !(self.eta_corr > 0.0) {
            return Err(FexError::Config("`eta_corr` must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.grid_size == 1 {
            return vec![self.gamma_min];
        }
        let step = (self.gamma_max - self.gamma_min) / (self.grid_size - 1) as f64;
        (0..self.grid_size)
            .map(|s| if s + 1 == self.grid_size { self.gamma_max } else { self.gamma_min + step * s as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCurve {
    pub gammas: Vec<f64>,
    pub avg_mse: Vec<f64>,
    pub opt_index: usize,
    pub gamma_opt: f64,
}

struct Auxiliary {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

/// Average least-squares error over the GRF auxiliaries for one grid point,
/// drawing fresh neuron locations for every `(s, k)` pair.
fn avg_mse_at(cfg: &GammaTuneConfig, aux: &[Auxiliary], s: usize, gamma: f64) -> Result<f64> {
    let mut total = 0.0;
    for (k, a) in aux.iter().enumerate() {
        let mut rng = stream(cfg.seed, Purpose::Locations, index2(s as u64, k as u64));
        let basis = FeatureBasis::sample(cfg.neurons, cfg.dim, gamma, &mut rng);
        total += ls_fit(&basis, &a.points, &a.values)?.mse;
    }
    Ok(total / aux.len() as f64)
}

/// Grid search for γ minimizing the average fitting error over Gaussian
/// random field realizations sampled in the unit ball.
pub fn tune_gamma(cfg: &GammaTuneConfig) -> Result<GammaCurve> {
    cfg.validate()?;
    let aux = (0..cfg.realizations)
        .map(|k| {
            let mut rng = stream(cfg.seed, Purpose::Grf, k as u64);
            let points: Vec<Vec<f64>> = (0..cfg.samples).map(|_| sample_unit_ball(cfg.dim, &mut rng)).collect();
            let values = grf_realize(&points, cfg.eta_corr, &mut rng)?;
            Ok(Auxiliary { points, values })
        })
        .collect::<Result<Vec<_>>>()?;
    let gammas = cfg.grid();
    let avg_mse = gammas
        .par_iter()
        .enumerate()
        .map(|(s, &g)| avg_mse_at(cfg, &aux, s, g))
        .collect::<Result<Vec<_>>>()?;
    let opt_index = avg_mse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    Ok(GammaCurve {
        gamma_opt: gammas[opt_index],
        gammas,
        avg_mse,
        opt_index,
    })
}
