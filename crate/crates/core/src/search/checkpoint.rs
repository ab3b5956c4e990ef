use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::hex;
use super::pool::CandidatePool;
use crate::controller::ControllerState;
use crate::error::{FexError, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub best_score: f64,
    pub mean_score: f64,
}

/// Everything needed to continue a search. Random streams are derived from
/// the seed and iteration index, so no generator state is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub next_iteration: usize,
    pub controller: ControllerState,
    pub pool: CandidatePool,
    pub history: Vec<HistoryRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    config_hash: String,
    checksum: String,
    state: RunState,
}

fn checksum(state: &RunState) -> String {
    let json = serde_json::to_string(state).expect("run state serializes");
    hex(&Sha256::digest(json.as_bytes()))
}

pub fn save_checkpoint(path: &Path, config_hash: &str, state: &RunState) -> Result<()> {
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        config_hash: config_hash.to_string(),
        checksum: checksum(state),
        state: state.clone(),
    };
    let text = serde_json::to_string(&file).map_err(|e| FexError::json(path, e))?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text).map_err(|e| FexError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| FexError::io(path, e))
}

pub fn load_checkpoint(path: &Path, config_hash: &str) -> Result<RunState> {
    let text = std::fs::read_to_string(path).map_err(|e| FexError::io(path, e))?;
    let file: CheckpointFile =
        serde_json::from_str(&text).map_err(|e| FexError::Checkpoint(format!("{}: unreadable ({e})", path.display())))?;
    if file.version != CHECKPOINT_VERSION {
        return Err(FexError::Checkpoint(format!(
            "version {} is not supported (expected {CHECKPOINT_VERSION})",
            file.version
        )));
    }
    if checksum(&file.state) != file.checksum {
        return Err(FexError::Checkpoint("checksum mismatch, file is corrupt".into()));
    }
    if file.config_hash != config_hash {
        return Err(FexError::Checkpoint("checkpoint was written by a different config".into()));
    }
    Ok(file.state)
}
