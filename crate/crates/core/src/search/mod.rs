//! The search loop: sample operator sequences, score them, keep the best K,
//! update the controller, and finally fine-tune the survivors.

mod checkpoint;
mod config;
mod operators;
mod pool;
mod run;

pub use checkpoint::{load_checkpoint, save_checkpoint, HistoryRow, RunState, CHECKPOINT_VERSION};
pub use config::{apply_overrides, RunConfig, SearchConfig};
pub use operators::{named_pool, BuiltPool, GammaSetting, PoolFile, PoolSpec, TnBuildConfig, DEFAULT_BINARY, POOL_NAMES};
pub use pool::{Candidate, CandidatePool};
pub use run::{history_csv, run_search, BestExpressionFile, FineTuned, RunOptions, SearchOutcome, SearchResult, Session};
