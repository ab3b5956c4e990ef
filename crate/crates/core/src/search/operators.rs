//! Resolution of operator names into a concrete pool, including building or
//! loading TN operators.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FexError, Result};
use crate::expr::{BinaryOp, OperatorPool, UnaryOp};
use crate::rng::{stream, Purpose};
use crate::transnet::{build_tn_operator, tune_gamma, GammaCurve, GammaTuneConfig, TnFit, TnOperator, TnOperatorRecord, TnTarget};

pub const DEFAULT_BINARY: [&str; 3] = ["+", "-", "*"];

pub const POOL_NAMES: [&str; 5] = ["poisson-P1", "poisson-P2", "reactdiff-P1", "reactdiff-P2", "semilinear"];

/// Unary operator names and fit domain of a named pool.
pub fn named_pool(name: &str) -> Result<(Vec<&'static str>, (f64, f64))> {
    let p1 = vec!["0", "1", "id", "TN[x^2]", "TN[x^3]", "TN[x^4]", "TN[exp]", "TN[sin]", "TN[cos]"];
    let swap = |from: &str, to: &'static str| -> Vec<&'static str> {
        p1.iter().map(|n| if *n == from { to } else { *n }).collect()
    };
    Ok(match name {
        "poisson-P1" => (p1.clone(), (-1.0, 1.0)),
        "poisson-P2" => (swap("TN[x^2]", "TN[sin(x^2)]"), (-1.0, 1.0)),
        "reactdiff-P1" => (p1.clone(), (0.0, 1.0)),
        "reactdiff-P2" => (swap("TN[x^3]", "TN[x*sin(x)]"), (0.0, 1.0)),
        "semilinear" => (p1.clone(), (-1.0, 1.0)),
        other => return Err(FexError::UnknownPool(other.to_string())),
    })
}

/// How the shared shape parameter of pool operators is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Fixed(f64),
    Tuned { tune: GammaTuneConfig },
}

/// Settings for TN operators built on the fly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TnBuildConfig {
    pub neurons: usize,
    pub samples: usize,
    pub gamma: GammaSetting,
    /// Fit interval; the problem's coordinate range when absent.
    pub domain: Option<[f64; 2]>,
    /// Seed for locations and fit points; the run seed when absent.
    pub seed: Option<u64>,
}

impl Default for TnBuildConfig {
    fn default() -> Self {
        Self {
            neurons: 200,
            samples: 500,
            gamma: GammaSetting::Tuned {
                tune: GammaTuneConfig {
                    gamma_min: 0.1,
                    gamma_max: 0.4,
                    grid_size: 7,
                    ..GammaTuneConfig::default()
                },
            },
            domain: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    /// Named pool supplying the unary list when `unary` is absent.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub unary: Option<Vec<String>>,
    #[serde(default)]
    pub binary: Option<Vec<String>>,
    /// Prebuilt TN operators from `build-pool`; names found there are not rebuilt.
    #[serde(default)]
    pub pool_file: Option<PathBuf>,
    #[serde(default)]
    pub tn: TnBuildConfig,
}

/// Serialized output of `build-pool`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolFile {
    pub name: Option<String>,
    pub unary: Vec<String>,
    pub binary: Vec<String>,
    pub gamma: Option<f64>,
    pub gamma_curve: Option<GammaCurve>,
    pub tn_operators: Vec<TnOperatorRecord>,
}

impl PoolFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FexError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| FexError::json(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| FexError::json(path, e))?;
        std::fs::write(path, text).map_err(|e| FexError::io(path, e))
    }
}

/// A resolved pool together with the build metadata worth persisting.
#[derive(Debug, Clone)]
pub struct BuiltPool {
    pub pool: OperatorPool,
    pub gamma: Option<f64>,
    pub gamma_curve: Option<GammaCurve>,
}

impl BuiltPool {
    pub fn to_file(&self, name: Option<String>) -> PoolFile {
        PoolFile {
            name,
            unary: self.pool.unary_names(),
            binary: self.pool.binary_names(),
            gamma: self.gamma,
            gamma_curve: self.gamma_curve.clone(),
            tn_operators: self
                .pool
                .unary
                .iter()
                .filter_map(|u| match u {
                    UnaryOp::Tn(t) => Some(t.to_record()),
                    _ => None,
                })
                .collect(),
        }
    }
}

impl PoolSpec {
    pub fn unary_names(&self) -> Result<Vec<String>> {
        match (&self.unary, &self.name) {
            (Some(u), _) => Ok(u.clone()),
            (None, Some(n)) => Ok(named_pool(n)?.0.into_iter().map(String::from).collect()),
            (None, None) => Err(FexError::Config("pool needs `name` or `unary`".into())),
        }
    }

    pub fn binary_names(&self) -> Vec<String> {
        self.binary
            .clone()
            .unwrap_or_else(|| DEFAULT_BINARY.iter().map(|s| s.to_string()).collect())
    }

    /// Builds the pool. `default_domain` is used for TN fits without an
    /// explicit domain; `seed` when `tn.seed` is unset.
    pub fn build(&self, default_domain: (f64, f64), seed: u64) -> Result<BuiltPool> {
        let unary_names = self.unary_names()?;
        let binary = self
            .binary_names()
            .iter()
            .map(|b| BinaryOp::parse(b).ok_or_else(|| FexError::UnknownOperator(b.clone())))
            .collect::<Result<Vec<_>>>()?;
        let loaded: Vec<TnOperator> = match &self.pool_file {
            Some(p) => PoolFile::load(p)?
                .tn_operators
                .into_iter()
                .map(TnOperator::from_record)
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };

        let mut to_build = Vec::new();
        for name in &unary_names {
            if UnaryOp::builtin(name).is_some() || loaded.iter().any(|t| &t.name() == name) {
                continue;
            }
            let target = TnTarget::from_operator_name(name).ok_or_else(|| FexError::UnknownOperator(name.clone()))?;
            to_build.push(target);
        }

        let (gamma, curve) = if to_build.is_empty() {
            (None, None)
        } else {
            match &self.tn.gamma {
                GammaSetting::Fixed(g) => (Some(*g), None),
                GammaSetting::Tuned { tune } => {
                    let c = tune_gamma(tune)?;
                    (Some(c.gamma_opt), Some(c))
                }
            }
        };
        let domain = self.tn.domain.map(|d| (d[0], d[1])).unwrap_or(default_domain);
        let tn_seed = self.tn.seed.unwrap_or(seed);
        let built: Vec<TnOperator> = to_build
            .par_iter()
            .map(|t| {
                let idx = TnTarget::ALL.iter().position(|a| a == t).expect("known target") as u64;
                let mut rng = stream(tn_seed, Purpose::TnFit, idx);
                let fit = TnFit {
                    domain,
                    neurons: self.tn.neurons,
                    gamma: gamma.expect("gamma resolved"),
                    samples: self.tn.samples,
                };
                build_tn_operator(t.tag(), |x| t.eval(x), fit, &mut rng)
            })
            .collect::<Result<_>>()?;

        let unary = unary_names
            .iter()
            .map(|name| {
                if let Some(b) = UnaryOp::builtin(name) {
                    return b;
                }
                let op = loaded.iter().chain(&built).find(|t| &t.name() == name).expect("resolved above");
                UnaryOp::Tn(Arc::new(op.clone()))
            })
            .collect();
        Ok(BuiltPool {
            pool: OperatorPool::new(unary, binary)?,
            gamma,
            gamma_curve: curve,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_pool_contents() {
        let (p1, _) = named_pool("poisson-P1").unwrap();
        assert_eq!(p1.len(), 9);
        assert_eq!(p1.iter().filter(|n| n.starts_with("TN[")).count(), 6);
        let (p2, _) = named_pool("poisson-P2").unwrap();
        assert!(p2.contains(&"TN[sin(x^2)]") && !p2.contains(&"TN[x^2]"));
        let (r2, dom) = named_pool("reactdiff-P2").unwrap();
        assert!(r2.contains(&"TN[x*sin(x)]") && !r2.contains(&"TN[x^3]"));
        assert_eq!(dom, (0.0, 1.0));
        assert!(matches!(named_pool("heat"), Err(FexError::UnknownPool(_))));
    }

    #[test]
    fn gamma_setting_forms() {
        let f: GammaSetting = serde_json::from_str("0.5").unwrap();
        assert_eq!(f, GammaSetting::Fixed(0.5));
        let t: GammaSetting = serde_json::from_str(r#"{"tune": {"gamma_min": 0.1, "gamma_max": 2.0}}"#).unwrap();
        assert!(matches!(t, GammaSetting::Tuned { .. }));
    }

    #[test]
    fn builtins_only_and_unknown_names() {
        let spec = PoolSpec {
            name: None,
            unary: Some(vec!["0".into(), "id".into(), "x^2".into()]),
            binary: Some(vec!["+".into()]),
            pool_file: None,
            tn: TnBuildConfig::default(),
        };
        let b = spec.build((-1.0, 1.0), 0).unwrap();
        assert_eq!(b.pool.unary.len(), 3);
        assert!(b.gamma.is_none());
        let bad = PoolSpec {
            unary: Some(vec!["TN[tan]".into()]),
            ..spec.clone()
        };
        assert!(matches!(bad.build((-1.0, 1.0), 0), Err(FexError::UnknownOperator(_))));
        let missing = PoolSpec {
            pool_file: Some("/nonexistent/pool.json".into()),
            ..spec
        };
        assert!(matches!(missing.build((-1.0, 1.0), 0), Err(FexError::Io { .. })));
    }

    #[test]
    fn pool_file_round_trip_skips_rebuild() {
        let spec = PoolSpec {
            name: None,
            unary: Some(vec!["0".into(), "TN[sin]".into()]),
            binary: None,
            pool_file: None,
            tn: TnBuildConfig {
                neurons: 30,
                samples: 100,
                gamma: GammaSetting::Fixed(1.0),
                ..Default::default()
            },
        };
        let built = spec.build((-1.0, 1.0), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.json");
        built.to_file(None).save(&path).unwrap();
        let from_file = PoolSpec {
            pool_file: Some(path),
            tn: TnBuildConfig {
                gamma: GammaSetting::Fixed(-1.0),
                ..spec.tn.clone()
            },
            ..spec
        };
        let again = from_file.build((-1.0, 1.0), 99).unwrap();
        assert!(again.gamma.is_none());
        let (UnaryOp::Tn(a), UnaryOp::Tn(b)) = (&built.pool.unary[1], &again.pool.unary[1]) else {
            panic!("expected TN operators");
        };
        assert_eq!(a.coeffs, b.coeffs);
    }
}
