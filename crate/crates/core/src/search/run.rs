use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checkpoint::{load_checkpoint, save_checkpoint, HistoryRow, RunState};
use super::config::RunConfig;
use super::operators::BuiltPool;
use super::pool::{Candidate, CandidatePool};
use crate::controller::ControllerState;
use crate::error::{FexError, Result};
use crate::expr::{Expression, ExpressionRecord, OperatorSequence, Skeleton, Tree};
use crate::numeric::compensated_sum;
use crate::optimize::{adam_run, compute_score, score_from_loss, TreeLoss};
use crate::pde::{LossContext, PdeProblem};
use crate::rng::{index2, stream, Purpose};

/// Problem, sample points and operator pool for one run.
pub struct Session {
    pub config: RunConfig,
    pub problem: PdeProblem,
    pub skeleton: Skeleton,
    pub pool: BuiltPool,
    pub ctx: LossContext,
}

impl Session {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let config = config.resolved()?;
        let problem = config.problem.build()?;
        let pool = config.pool.build((problem.lo, problem.hi), config.seed)?;
        let sample_seed = config.problem.seed.unwrap_or(config.seed);
        let samples = problem.sample_points(
            config.problem.n_interior,
            config.problem.n_boundary,
            &mut stream(sample_seed, Purpose::Samples, 0),
        );
        let skeleton = Skeleton::build(config.depth, problem.dim)?;
        let ctx = LossContext::new(problem.clone(), samples, &pool.pool);
        Ok(Self {
            config,
            problem,
            skeleton,
            pool,
            ctx,
        })
    }

    pub fn tree(&self, e: &OperatorSequence) -> Result<Tree> {
        Tree::new(&self.skeleton, &self.pool.pool, e)
    }

    /// Adam fine-tuning of one candidate from its stored parameters.
    pub fn fine_tune(&self, cand: &Candidate) -> Result<FineTuned> {
        let tree = self.tree(&cand.e)?;
        let r = adam_run(&TreeLoss { ctx: &self.ctx, tree: &tree }, &cand.theta, &self.config.fine_tune);
        Ok(FineTuned {
            candidate: cand.clone(),
            loss: r.value,
            expression: Expression::new(tree, r.theta)?,
        })
    }

    fn score_batch(&self, t: usize, seqs: &[OperatorSequence]) -> Vec<Candidate> {
        seqs.par_iter()
            .enumerate()
            .map(|(n, e)| {
                let tree = self.tree(e).expect("controller emits valid sequences");
                let mut rng = stream(self.config.seed, Purpose::ThetaInit, index2(t as u64, n as u64));
                let scored = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                    compute_score(&self.ctx, &tree, &self.config.score, &mut rng)
                }));
                let (score, loss, theta) = match scored {
                    Ok(o) if o.score.is_finite() => (o.score, o.loss, o.theta),
                    _ => {
                        log::warn!("iteration {t}: candidate {:?} failed to score, skipped", tree.op_names());
                        (0.0, f64::INFINITY, tree.layout.init(&mut rng))
                    }
                };
                Candidate {
                    e: e.clone(),
                    ops: tree.op_names(),
                    theta,
                    score,
                    loss,
                    origin_iteration: t + 1,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FineTuned {
    pub candidate: Candidate,
    pub loss: f64,
    pub expression: Expression,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: FineTuned,
    pub fine_tuned: Vec<FineTuned>,
    pub pool: CandidatePool,
    pub history: Vec<HistoryRow>,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Finished(Box<SearchResult>),
    /// Stopped on request after this many iterations; a checkpoint was written.
    Interrupted { iterations: usize },
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub run_dir: Option<PathBuf>,
    pub resume: bool,
    /// Stop (with a checkpoint) after this many completed iterations.
    pub stop_after: Option<usize>,
}

/// `best_expression.json`: the exported expression plus its fine-tuned loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestExpressionFile {
    pub problem: String,
    pub loss: f64,
    pub score: f64,
    pub expression: ExpressionRecord,
}

#[derive(Debug, Serialize)]
struct PoolReport<'a> {
    capacity: usize,
    entries: Vec<PoolReportEntry<'a>>,
}

#[derive(Debug, Serialize)]
struct PoolReportEntry<'a> {
    #[serde(flatten)]
    candidate: &'a Candidate,
    fine_tuned_loss: f64,
}

pub fn history_csv(history: &[HistoryRow]) -> String {
    let mut s = String::from("iteration,best_score,mean_score\n");
    for h in history {
        writeln!(s, "{},{},{}", h.iteration, h.best_score, h.mean_score).expect("string write");
    }
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| FexError::io(path, e))
}

fn to_json<T: Serialize>(path: &Path, v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| FexError::json(path, e))
}

const CHECKPOINT_FILE: &str = "latest.json";

/// Search loop, then fine-tuning of every pooled candidate.
pub fn run_search(config: &RunConfig, opts: &RunOptions) -> Result<SearchOutcome> {
    let session = Session::new(config)?;
    let cfg = &session.config;
    let hash = cfg.hash()?;
    let ckpt_dir = opts.run_dir.as_ref().map(|d| d.join("checkpoints"));
    if let Some(dir) = &opts.run_dir {
        std::fs::create_dir_all(dir.join("checkpoints")).map_err(|e| FexError::io(dir, e))?;
        let path = dir.join("config.json");
        write(&path, &to_json(&path, cfg)?)?;
    }

    let mut state = match (&ckpt_dir, opts.resume) {
        (Some(dir), true) => load_checkpoint(&dir.join(CHECKPOINT_FILE), &hash)?,
        (None, true) => return Err(FexError::Checkpoint("resume needs a run directory".into())),
        _ => RunState {
            next_iteration: 0,
            controller: ControllerState::new(&session.skeleton, &session.pool.pool, &cfg.controller, cfg.search.iterations)?,
            pool: CandidatePool::new(cfg.search.pool_size),
            history: Vec::new(),
        },
    };

    let total = cfg.search.iterations;
    while state.next_iteration < total {
        let t = state.next_iteration;
        let mut rng = stream(cfg.seed, Purpose::Controller, t as u64);
        let seqs: Vec<OperatorSequence> = (0..cfg.search.batch).map(|_| state.controller.sample_sequence(&mut rng)).collect();
        let cands = session.score_batch(t, &seqs);
        let scores: Vec<f64> = cands.iter().map(|c| c.score).collect();
        for c in cands {
            state.pool.insert(c);
        }
        state.controller.update(&seqs, &scores)?;
        state.history.push(HistoryRow {
            iteration: t + 1,
            best_score: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_score: compensated_sum(scores.iter().copied()) / scores.len() as f64,
        });
        state.next_iteration = t + 1;
        log::info!(
            "iteration {}/{total}: batch best {:.6e}, pool best {:.6e}",
            t + 1,
            state.history.last().map_or(0.0, |h| h.best_score),
            state.pool.entries.first().map_or(0.0, |c| c.score)
        );

        let stop = opts.stop_after == Some(t + 1);
        let periodic = cfg.search.checkpoint_every > 0 && (t + 1) % cfg.search.checkpoint_every == 0;
        if let Some(dir) = &ckpt_dir {
            if stop || periodic {
                save_checkpoint(&dir.join(CHECKPOINT_FILE), &hash, &state)?;
            }
        }
        if stop && t + 1 < total {
            return Ok(SearchOutcome::Interrupted { iterations: t + 1 });
        }
    }

    if state.pool.is_empty() {
        return Err(FexError::EmptyPool);
    }
    let fine_tuned: Vec<FineTuned> = state
        .pool
        .entries
        .par_iter()
        .map(|c| session.fine_tune(c))
        .collect::<Result<_>>()?;
    let best = fine_tuned
        .iter()
        .reduce(|a, b| if b.loss < a.loss { b } else { a })
        .expect("non-empty pool")
        .clone();

    if let Some(dir) = &opts.run_dir {
        write(&dir.join("history.csv"), &history_csv(&state.history))?;
        let report = PoolReport {
            capacity: state.pool.capacity,
            entries: state
                .pool
                .entries
                .iter()
                .zip(&fine_tuned)
                .map(|(c, f)| PoolReportEntry {
                    candidate: c,
                    fine_tuned_loss: f.loss,
                })
                .collect(),
        };
        let p = dir.join("pool.json");
        write(&p, &to_json(&p, &report)?)?;
        let best_file = BestExpressionFile {
            problem: session.problem.name.clone(),
            loss: best.loss,
            score: score_from_loss(best.loss),
            expression: best.expression.to_record(),
        };
        let p = dir.join("best_expression.json");
        write(&p, &to_json(&p, &best_file)?)?;
    }

    Ok(SearchOutcome::Finished(Box::new(SearchResult {
        best,
        fine_tuned,
        pool: state.pool,
        history: state.history,
    })))
}
