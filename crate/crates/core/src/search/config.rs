use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::operators::PoolSpec;
use crate::controller::ControllerConfig;
use crate::error::{FexError, Result};
use crate::optimize::{AdamConfig, ScoreConfig};
use crate::pde::ProblemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Search-loop iterations T.
    pub iterations: usize,
    /// Batch size N.
    pub batch: usize,
    /// Candidate pool capacity K.
    pub pool_size: usize,
    /// Checkpoint period in iterations; 0 disables checkpoints.
    pub checkpoint_every: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            iterations: 50,
            batch: 10,
            pool_size: 10,
            checkpoint_every: 10,
        }
    }
}

fn default_depth() -> usize {
    2
}

fn default_fine_tune() -> AdamConfig {
    AdamConfig {
        lr: 0.01,
        steps: 15000,
        cosine_decay: true,
        ..AdamConfig::default()
    }
}

/// Everything that determines a run. Serialized with every default filled in
/// as `config.json` in the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub pool: PoolSpec,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub score: ScoreConfig,
    #[serde(default = "default_fine_tune")]
    pub fine_tune: AdamConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.problem.build()?;
        self.controller.validate()?;
        if self.search.batch == 0 || self.search.pool_size == 0 {
            return Err(FexError::Config("search.batch and search.pool_size must be positive".into()));
        }
        if self.problem.n_interior + self.problem.n_boundary == 0 {
            return Err(FexError::Config("problem needs at least one sample point".into()));
        }
        for (name, a) in [("score.t1", &self.score.t1), ("fine_tune", &self.fine_tune)] {
            if !(a.lr > 0.0) || !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) {
                return Err(FexError::Config(format!("{name}: need lr > 0 and beta1, beta2 in [0, 1)")));
            }
        }
        crate::expr::Skeleton::build(self.depth, 1)?;
        Ok(())
    }

    /// Copy with problem defaults made explicit.
    pub fn resolved(&self) -> Result<Self> {
        Ok(Self {
            problem: self.problem.resolved()?,
            ..self.clone()
        })
    }

    /// Digest of the resolved config; checkpoints refuse to resume under a different one.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_string(&self.resolved()?).map_err(|e| FexError::Config(e.to_string()))?;
        Ok(hex(&Sha256::digest(json.as_bytes())))
    }

    /// Parses JSON text, then applies `key.path=value` overrides.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| FexError::Config(format!("invalid config JSON: {e}")))?;
        apply_overrides(&mut value, overrides)?;
        let cfg: Self = serde_json::from_value(value).map_err(|e| FexError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Sets dotted paths in a JSON tree. Values parse as JSON, falling back to a string.
pub fn apply_overrides(root: &mut serde_json::Value, overrides: &[String]) -> Result<()> {
    for ov in overrides {
        let (path, raw) = ov
            .split_once('=')
            .ok_or_else(|| FexError::Config(format!("override `{ov}` is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        let mut node = &mut *root;
        let keys: Vec<&str> = path.split('.').collect();
        for (i, key) in keys.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| FexError::Config(format!("override `{path}`: `{key}` is not inside an object")))?;
            if i + 1 == keys.len() {
                obj.insert(key.to_string(), value.clone());
                break;
            }
            node = obj
                .entry(key.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
        }
    }
    Ok(())
}
