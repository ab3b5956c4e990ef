//! Command-line front end. The binary is a thin wrapper around [`run`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{FexError, Result};
use crate::eval::{mc_relative_l2, slice_grid, ErrorMode, ErrorReport};
use crate::expr::Expression;
use crate::search::{apply_overrides, run_search, BestExpressionFile, PoolSpec, RunConfig, RunOptions, SearchOutcome};
use crate::transnet::{tune_gamma, GammaTuneConfig};

pub const OUTPUT_ROOT_ENV: &str = "FEX_OUTPUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "fex", version, about = "Finite expression search for high-dimensional elliptic PDEs")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Default root for run directories and built pools.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, default_value = "runs")]
    pub output_root: PathBuf,
    /// Print per-iteration progress.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON config file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set search.iterations=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Master seed (same as `--set seed=N`).
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<String> {
        let mut v = self.set.clone();
        if let Some(s) = self.seed {
            v.push(format!("seed={s}"));
        }
        v
    }

    fn load<T: serde::de::DeserializeOwned>(&self, fallback: &str) -> Result<T> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p).map_err(|e| FexError::io(p, e))?,
            None => fallback.to_string(),
        };
        let mut value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| FexError::Config(format!("invalid config JSON: {e}")))?;
        apply_overrides(&mut value, &self.overrides())?;
        serde_json::from_value(value).map_err(|e| FexError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Absolute,
    Relative,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid search for the TN shape parameter; writes `gamma,avg_mse,opt` CSV.
    TuneGamma {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// CSV destination (stdout when absent).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Builds the TN operators of a pool and saves them as JSON.
    BuildPool {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Named pool (poisson-P1, poisson-P2, reactdiff-P1, reactdiff-P2, semilinear).
        #[arg(long)]
        pool: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Runs the search and fine-tuning; writes a run directory.
    Solve {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Run directory (default: <output-root>/<config name>).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Continue from the run directory's latest checkpoint.
        #[arg(long)]
        resume: bool,
        /// Stop after this many search iterations, leaving a checkpoint.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Monte Carlo relative L² error of a run's best expression; writes eval.json.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value_t = 2000)]
        points: usize,
        #[arg(long, default_value_t = 50)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reference, prediction and error grids on a 2-D slice.
    Slice {
        #[arg(long)]
        run: PathBuf,
        /// Two 0-based coordinates, e.g. `22,37`.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Absolute)]
        mode: ModeArg,
        /// Values for all coordinates (entries at `dims` are ignored); domain midpoint by default.
        #[arg(long, value_delimiter = ',')]
        fixed: Option<Vec<f64>>,
        /// Output directory (default: <run>/slice_<i>_<j>).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// `build-pool` config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildPoolConfig {
    pub pool: PoolSpec,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct EvalFile<'a> {
    run: &'a Path,
    problem: &'a str,
    report: &'a ErrorReport,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| FexError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| FexError::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| FexError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| FexError::json(path, e))
}

fn load_run(run: &Path) -> Result<(crate::pde::PdeProblem, Expression)> {
    let cfg: RunConfig = read_json(&run.join("config.json"))?;
    let best: BestExpressionFile = read_json(&run.join("best_expression.json"))?;
    Ok((cfg.problem.build()?, Expression::from_record(&best.expression)?))
}

/// Executes a parsed command line, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    if let Some(n) = cli.threads {
        // Ignored if a global pool already exists (e.g. repeated calls in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let say = |out: &mut dyn std::io::Write, s: String| {
        let _ = writeln!(out, "{s}");
    };
    match cli.command {
        Command::TuneGamma { cfg, out: dest } => {
            let tune: GammaTuneConfig = cfg.load(&serde_json::to_string(&GammaTuneConfig::default()).expect("serializes"))?;
            let curve = tune_gamma(&tune)?;
            let mut csv = String::from("gamma,avg_mse,opt\n");
            for (k, (g, m)) in curve.gammas.iter().zip(&curve.avg_mse).enumerate() {
                csv.push_str(&format!("{g},{m:e},{}\n", u8::from(k == curve.opt_index)));
            }
            match dest {
                Some(p) => {
                    write_file(&p, &csv)?;
                    say(out, format!("gamma_opt = {} ({} grid points) -> {}", curve.gamma_opt, curve.gammas.len(), p.display()));
                }
                None => {
                    let _ = out.write_all(csv.as_bytes());
                }
            }
        }
        Command::BuildPool { cfg, pool, out: dest } => {
            let fallback = match &pool {
                Some(name) => serde_json::json!({ "pool": { "name": name } }).to_string(),
                None if cfg.config.is_none() => {
                    return Err(FexError::Config("build-pool needs --pool or --config".into()));
                }
                None => String::new(),
            };
            let bp: BuildPoolConfig = cfg.load(&fallback)?;
            let domain = match &bp.pool.name {
                Some(n) => crate::search::named_pool(n)?.1,
                None => (-1.0, 1.0),
            };
            let built = bp.pool.build(domain, bp.seed)?;
            let name = bp.pool.name.clone();
            let file = built.to_file(name.clone());
            let dest = dest.unwrap_or_else(|| {
                cli.output_root
                    .join("pools")
                    .join(format!("{}.json", name.as_deref().unwrap_or("pool")))
            });
            write_file(&dest, &serde_json::to_string_pretty(&file).map_err(|e| FexError::json(&dest, e))?)?;
            if let Some(g) = built.gamma {
                say(out, format!("gamma = {g}"));
            }
            for t in &file.tn_operators {
                say(out, format!("TN[{}] on [{}, {}]: fit_sup_error = {:.3e}", t.target_tag, t.domain[0], t.domain[1], t.fit_sup_error));
            }
            say(out, format!("unary: {}", file.unary.join(", ")));
            say(out, format!("wrote {}", dest.display()));
        }
        Command::Solve {
            cfg,
            out: dest,
            resume,
            stop_after,
        } => {
            let path = cfg
                .config
                .clone()
                .ok_or_else(|| FexError::Config("solve needs --config".into()))?;
            let text = std::fs::read_to_string(&path).map_err(|e| FexError::io(&path, e))?;
            let rc = RunConfig::from_json_with_overrides(&text, &cfg.overrides())?;
            let run_dir = dest.unwrap_or_else(|| {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or("run".into());
                cli.output_root.join(stem)
            });
            let opts = RunOptions {
                run_dir: Some(run_dir.clone()),
                resume,
                stop_after,
            };
            match run_search(&rc, &opts)? {
                SearchOutcome::Interrupted { iterations } => {
                    say(out, format!("stopped after {iterations} iterations; checkpoint in {}", run_dir.join("checkpoints").display()));
                }
                SearchOutcome::Finished(r) => {
                    say(out, format!("best: {}", r.best.expression.render(6)));
                    say(out, format!("fine-tuned loss: {:.6e}", r.best.loss));
                    say(out, format!("run directory: {}", run_dir.display()));
                }
            }
        }
        Command::Eval {
            run,
            points,
            repeats,
            seed,
        } => {
            let (problem, expr) = load_run(&run)?;
            let report = mc_relative_l2(&problem, |x| expr.value(x).unwrap_or(f64::NAN), points, repeats, seed)?;
            let path = run.join("eval.json");
            let file = EvalFile {
                run: &run,
                problem: &problem.name,
                report: &report,
            };
            write_file(&path, &serde_json::to_string_pretty(&file).map_err(|e| FexError::json(&path, e))?)?;
            say(out, format!("relative L2 error: {:.6e} ± {:.3e} ({repeats} × {points} points)", report.mean, report.std));
        }
        Command::Slice {
            run,
            dims,
            resolution,
            mode,
            fixed,
            out: dest,
        } => {
            if dims.len() != 2 {
                return Err(FexError::Config(format!("--dims takes two coordinates, got {}", dims.len())));
            }
            let (problem, expr) = load_run(&run)?;
            let mode = match mode {
                ModeArg::Absolute => ErrorMode::Absolute,
                ModeArg::Relative => ErrorMode::Relative,
            };
            let grid = slice_grid(
                &problem,
                |x| expr.value(x).unwrap_or(f64::NAN),
                (dims[0], dims[1]),
                fixed.as_deref(),
                resolution,
                mode,
            )?;
            let dir = dest.unwrap_or_else(|| run.join(format!("slice_{}_{}", dims[0], dims[1])));
            grid.write_csvs(&dir)?;
            let max_err = grid.error.iter().copied().fold(0.0, f64::max);
            say(out, format!("wrote ref.csv, pred.csv, err.csv ({} rows each) to {}; max error {max_err:.3e}", grid.coords.len(), dir.display()));
        }
    }
    Ok(())
}
