//! End-to-end acceptance checks. Every criterion runs even if an earlier one
//! fails; one PASS/FAIL line is printed per criterion and the target exits
//! non-zero if any criterion did.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fex::controller::{ControllerConfig, ControllerState};
use fex::eval::{mc_relative_l2, mc_relative_l2_in, Cube};
use fex::expr::{BinaryOp, Expression, OperatorPool, OperatorSequence, Skeleton, Tree, UnaryOp};
use fex::optimize::{adam_run, AdamConfig, TreeLoss};
use fex::pde::{loss_parts, PdeProblem, ProblemOverrides};
use fex::rng::{stream, Purpose};
use fex::search::{BestExpressionFile, PoolSpec, RunConfig, Session};
use fex::transnet::{
    ls_fit, residual_sse, sample_locations, tune_gamma, FeatureBasis, GammaTuneConfig, TnOperator, TnTarget,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn desk_config_path() -> PathBuf {
    repo_root().join("configs/desk-poisson5.json")
}

fn desk_config() -> RunConfig {
    let text = std::fs::read_to_string(desk_config_path()).unwrap();
    RunConfig::from_json_with_overrides(&text, &[]).unwrap()
}

// ---------------------------------------------------------------- 1

fn small_tn(target: TnTarget, seed: u64) -> UnaryOp {
    // O(1) output weights keep finite differences well conditioned.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = FeatureBasis::sample(20, 1, 2.0, &mut rng);
    let coeffs = (0..=20).map(|_| rng.random_range(-1.0..1.0)).collect();
    UnaryOp::Tn(Arc::new(TnOperator::new(target.tag().into(), (-1.0, 1.0), basis, coeffs).unwrap()))
}

fn rel(a: f64, fd: f64) -> f64 {
    (a - fd).abs() / (1.0 + fd.abs())
}

fn criterion_derivatives() -> Outcome {
    let mut unary: Vec<UnaryOp> = ["0", "1", "id", "x^2", "x^3", "exp", "sin", "cos"]
        .iter()
        .map(|n| UnaryOp::builtin(n).unwrap())
        .collect();
    unary.push(small_tn(TnTarget::Square, 1));
    unary.push(small_tn(TnTarget::Exp, 2));
    unary.push(small_tn(TnTarget::Cos, 3));
    let pool = OperatorPool::new(unary, vec![BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul]).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let (mut worst_x, mut worst_theta) = (0.0f64, 0.0f64);
    let mut with_tn = 0;
    for t in 0..50 {
        let depth = rng.random_range(1..=3);
        let d = rng.random_range(1..=4);
        let skel = Skeleton::build(depth, d).unwrap();
        let seq = skel
            .nodes
            .iter()
            .map(|n| rng.random_range(0..if n.is_unary() { pool.unary.len() } else { pool.binary.len() }))
            .collect();
        let tree = Tree::new(&skel, &pool, &OperatorSequence(seq)).unwrap();
        if tree.op_names().iter().any(|n| n.starts_with("TN[")) {
            with_tn += 1;
        }
        let theta: Vec<f64> = (0..tree.param_len()).map(|_| rng.random_range(-0.8..0.8)).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-0.9..0.9)).collect();

        let (jet, sens) = tree.evaluate_jet_with_sensitivity(&theta, &x).map_err(|e| e.to_string())?;
        let f = |y: &[f64]| tree.evaluate(&theta, y).unwrap();
        let h = 1e-4;
        let mut y = x.clone();
        let mut lap = 0.0;
        for i in 0..d {
            y[i] = x[i] + h;
            let fp = f(&y);
            y[i] = x[i] - h;
            let fm = f(&y);
            y[i] = x[i];
            worst_x = worst_x.max(rel(jet.grad[i], (fp - fm) / (2.0 * h)));
            lap += (fp - 2.0 * jet.value + fm) / (h * h);
        }
        worst_x = worst_x.max(rel(jet.lap, lap));

        let hs = 1e-5;
        for k in 0..theta.len() {
            let mut tp = theta.clone();
            tp[k] += hs;
            let jp = tree.evaluate_jet(&tp, &x).unwrap();
            tp[k] -= 2.0 * hs;
            let jm = tree.evaluate_jet(&tp, &x).unwrap();
            worst_theta = worst_theta.max(rel(sens.value[k], (jp.value - jm.value) / (2.0 * hs)));
            worst_theta = worst_theta.max(rel(sens.lap[k], (jp.lap - jm.lap) / (2.0 * hs)));
            for i in 0..d {
                let fd = (jp.grad[i] - jm.grad[i]) / (2.0 * hs);
                worst_theta = worst_theta.max(rel(sens.grad_row(k)[i], fd));
            }
        }
        check(worst_x < 1e-5 && worst_theta < 1e-5, || {
            format!("tree {t} {:?}: x-error {worst_x:.2e}, theta-error {worst_theta:.2e}", tree.op_names())
        })?;
    }
    Ok(format!(
        "50 trees ({with_tn} with TN operators), max rel error x {worst_x:.1e}, theta {worst_theta:.1e}"
    ))
}

// ---------------------------------------------------------------- 2

fn criterion_tn_fits() -> Outcome {
    let spec: PoolSpec =
        serde_json::from_value(serde_json::json!({"unary": ["TN[x^2]", "TN[x^3]", "TN[exp]", "TN[sin]", "TN[cos]"]}))
            .unwrap();
    let built = spec.build((-1.0, 1.0), 2024).map_err(|e| e.to_string())?;
    let gamma = built.gamma.expect("tuned gamma");
    let mut parts = vec![format!("gamma {gamma}")];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for op in &built.pool.unary {
        let UnaryOp::Tn(tn) = op else { unreachable!() };
        check(tn.neurons() == 200, || format!("{}: {} neurons", tn.name(), tn.neurons()))?;
        let target = TnTarget::parse(&tn.target_tag).unwrap();
        let measured = tn.measure_sup_error(|x| target.eval(x));
        check(measured == tn.fit_sup_error, || format!("{}: recorded error differs from measured", tn.name()))?;
        check(tn.fit_sup_error < 1e-3, || format!("{}: sup error {:.2e}", tn.name(), tn.fit_sup_error))?;
        parts.push(format!("{} {:.1e}", tn.name(), tn.fit_sup_error));

        // Least-squares optimality in this operator's feature space.
        let pts: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| target.eval(p[0])).collect();
        let fit = ls_fit(&tn.basis, &pts, &ys).map_err(|e| e.to_string())?;
        let a = tn.basis.design_matrix(&pts);
        for _ in 0..50 {
            let scale = 10f64.powf(rng.random_range(-6.0..-1.0));
            let pert: Vec<f64> = fit.coeffs.iter().map(|c| c + scale * rng.random_range(-1.0..1.0)).collect();
            let sse = residual_sse(&a, &pert, &ys);
            check(sse >= fit.sse * (1.0 - 1e-9) - 1e-24, || {
                format!("{}: perturbed sse {sse:e} below fitted {:e}", tn.name(), fit.sse)
            })?;
        }
    }
    Ok(parts.join(", "))
}

// ---------------------------------------------------------------- 3

fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

fn criterion_gamma_tuning() -> Outcome {
    let cfg = GammaTuneConfig {
        neurons: 60,
        realizations: 4,
        samples: 200,
        gamma_min: 0.2,
        gamma_max: 6.0,
        grid_size: 12,
        seed: 7,
        ..Default::default()
    };
    let curve = tune_gamma(&cfg).map_err(|e| e.to_string())?;
    let (argmin, _) = curve
        .avg_mse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    check(curve.opt_index == argmin && curve.gamma_opt == curve.gammas[argmin], || {
        format!("returned index {} but argmin is {argmin}", curve.opt_index)
    })?;
    let single = tune_gamma(&GammaTuneConfig { grid_size: 1, ..cfg }).map_err(|e| e.to_string())?;
    check(single.gammas == vec![0.2] && single.gamma_opt == 0.2, || format!("S=1 returned {:?}", single.gammas))?;

    let m = 10_000;
    let mut rng = stream(31, Purpose::Locations, 0);
    let (dirs, offsets) = sample_locations(m, 3, &mut rng);
    // Directions are unit vectors, so |r| is the plane's distance to the origin.
    for (k, a) in dirs.chunks(3).enumerate() {
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        check((norm - 1.0).abs() < 1e-12, || format!("direction {k} has norm {norm}"))?;
    }
    let dist: Vec<f64> = offsets.iter().map(|r| r.abs()).collect();
    let d_stat = ks_uniform(dist);
    let crit = 1.6276 / (m as f64).sqrt();
    check(d_stat < crit, || format!("KS statistic {d_stat:.4} >= {crit:.4}"))?;
    // Each coordinate of a uniform unit vector in R^3 has variance 1/3.
    let se = (1.0 / 3.0 / m as f64).sqrt();
    for c in 0..3 {
        let mean = dirs.iter().skip(c).step_by(3).sum::<f64>() / m as f64;
        check(mean.abs() < 3.0 * se, || format!("direction mean[{c}] = {mean:.4}"))?;
    }
    Ok(format!(
        "argmin gamma {:.3} over {} points, KS D={d_stat:.4} (crit {crit:.4})",
        curve.gamma_opt,
        curve.gammas.len()
    ))
}

// ---------------------------------------------------------------- 4

fn criterion_policy_gradient() -> Outcome {
    let scores_of = [0.2, 0.5, 0.9];
    let probs = [0.3, 0.3, 0.4];
    let logits: Vec<f64> = probs.iter().map(|p: &f64| p.ln()).collect();
    let cfg = ControllerConfig {
        epsilon: 0.0,
        quantile: 0.5,
        ..Default::default()
    };
    let ctrl = ControllerState::from_logits(vec![logits], &cfg, 1);
    let p = ctrl.probabilities(0);

    // Population threshold at level 1 - ν = 0.5: cumulative mass 0.3, 0.6, 1.0
    // puts it on the middle score, so only the top operator contributes.
    let thr = 0.5;
    let expected: Vec<f64> = (0..3)
        .map(|j| {
            (0..3)
                .filter(|&k| scores_of[k] > thr)
                .map(|k| p[k] * (scores_of[k] - thr) * (f64::from(u8::from(j == k)) - p[j]))
                .sum()
        })
        .collect();

    let n = 10_000;
    let mut rng = stream(404, Purpose::Controller, 0);
    let seqs: Vec<OperatorSequence> = (0..n).map(|_| ctrl.sample_sequence(&mut rng)).collect();
    let scores: Vec<f64> = seqs.iter().map(|e| scores_of[e.0[0]]).collect();
    let dir = ctrl.update_direction(&seqs, &scores);

    // Per-sample contributions give the standard error of the batch mean.
    let emp_thr = fex::controller::quantile_threshold(&scores, cfg.quantile);
    check(emp_thr == thr, || format!("empirical threshold {emp_thr}"))?;
    for j in 0..3 {
        let contrib: Vec<f64> = seqs
            .iter()
            .zip(&scores)
            .map(|(e, &s)| if s > thr { (s - thr) * ctrl.log_prob_grad(e)[j] } else { 0.0 })
            .collect();
        let mean = contrib.iter().sum::<f64>() / n as f64;
        let var = contrib.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        check((dir[j] - expected[j]).abs() < 3.0 * se, || {
            format!("component {j}: {:.5} vs expected {:.5} (se {se:.1e})", dir[j], expected[j])
        })?;
    }

    // Changing scores that stay at or below the threshold leaves the update unchanged.
    let mut masked = scores.clone();
    for s in masked.iter_mut() {
        if *s < thr {
            *s = 0.05;
        }
    }
    let dir_masked = ctrl.update_direction(&seqs, &masked);
    check(fex::controller::quantile_threshold(&masked, cfg.quantile) == thr && dir_masked == dir, || {
        "sub-threshold scores changed the update".into()
    })?;

    let flat = vec![0.7; n];
    let zero = ctrl.update_direction(&seqs, &flat);
    check(zero.iter().all(|v| *v == 0.0), || format!("all-equal scores gave {zero:?}"))?;
    let mut moved = ctrl.clone();
    moved.update(&seqs, &flat).map_err(|e| e.to_string())?;
    check(moved.logits == ctrl.logits, || "all-equal update moved the logits".into())?;

    Ok(format!(
        "direction [{:.4}, {:.4}, {:.4}] vs expected [{:.4}, {:.4}, {:.4}]",
        dir[0], dir[1], dir[2], expected[0], expected[1], expected[2]
    ))
}

// ------------------------------------------------------------ 5 and 8

fn fex_cmd(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fex"))
        .args(args)
        .output()
        .map_err(|e| format!("spawn fex: {e}"))?;
    if !out.status.success() {
        return Err(format!("fex {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn solve(dir: &Path, threads: usize, extra: &[&str]) -> Result<(), String> {
    let cfg = desk_config_path();
    let threads = threads.to_string();
    let mut args = vec![
        "--threads",
        threads.as_str(),
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    fex_cmd(&args).map(|_| ())
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

struct DeskRuns {
    _tmp: tempfile::TempDir,
    single: PathBuf,
    error: Result<(), String>,
    seconds: f64,
}

fn desk_runs() -> DeskRuns {
    let tmp = tempfile::tempdir().unwrap();
    let single = tmp.path().join("threads1");
    let t0 = Instant::now();
    let error = solve(&single, 1, &[]);
    DeskRuns {
        seconds: t0.elapsed().as_secs_f64(),
        single,
        error,
        _tmp: tmp,
    }
}

fn criterion_desk(runs: &DeskRuns) -> Outcome {
    runs.error.clone()?;
    let best: BestExpressionFile =
        serde_json::from_str(&read(&runs.single.join("best_expression.json"))?).map_err(|e| e.to_string())?;
    let expr = Expression::from_record(&best.expression).map_err(|e| e.to_string())?;
    let problem = desk_config().problem.build().map_err(|e| e.to_string())?;
    let report = mc_relative_l2(&problem, |x: &[f64]| expr.value(x).unwrap_or(f64::NAN), 2000, 10, 1)
        .map_err(|e| e.to_string())?;
    check(report.mean < 1e-3, || format!("relative L2 {:.3e} ({})", report.mean, best.expression.render))?;
    Ok(format!(
        "relative L2 {:.2e} ± {:.1e}, loss {:.2e}, {:.0} s, best {}",
        report.mean, report.std, best.loss, runs.seconds, best.expression.render
    ))
}

fn criterion_determinism(runs: &DeskRuns) -> Outcome {
    runs.error.clone()?;
    let root = runs.single.parent().unwrap();
    let reference = read(&runs.single.join("history.csv"))?;
    let best_ref = read(&runs.single.join("best_expression.json"))?;

    let multi = root.join("threads3");
    solve(&multi, 3, &[])?;
    check(read(&multi.join("history.csv"))? == reference, || "history differs between --threads 1 and 3".into())?;
    check(read(&multi.join("best_expression.json"))? == best_ref, || "best expression differs across threads".into())?;

    let resumed = root.join("resumed");
    solve(&resumed, 2, &["--stop-after", "23"])?;
    check(!resumed.join("best_expression.json").exists(), || "interrupted run wrote a final result".into())?;
    solve(&resumed, 1, &["--resume"])?;
    check(read(&resumed.join("history.csv"))? == reference, || "resumed history differs".into())?;
    check(read(&resumed.join("best_expression.json"))? == best_ref, || "resumed best expression differs".into())?;
    Ok(format!("{} history rows identical for threads 1/3 and stop at 23 + resume", reference.lines().count() - 1))
}

// ---------------------------------------------------------------- 6

fn criterion_oracle_fine_tune() -> Outcome {
    let session = Session::new(&desk_config()).map_err(|e| e.to_string())?;
    let tree = Tree::from_names(&session.skeleton, &session.pool.pool, &["TN[x^2]", "+", "TN[x^2]"])
        .map_err(|e| e.to_string())?;
    let theta0 = tree.layout.init(&mut stream(session.config.seed, Purpose::FineTune, 0));
    let cfg = AdamConfig {
        lr: 0.01,
        steps: 5000,
        cosine_decay: true,
        ..Default::default()
    };
    let t0 = Instant::now();
    let r = adam_run(&TreeLoss { ctx: &session.ctx, tree: &tree }, &theta0, &cfg);
    let expr = Expression::new(tree, r.theta).map_err(|e| e.to_string())?;
    let report = mc_relative_l2(&session.problem, |x: &[f64]| expr.value(x).unwrap_or(f64::NAN), 2000, 10, 2)
        .map_err(|e| e.to_string())?;
    check(r.value < 1e-8 && report.mean < 1e-4, || {
        format!("loss {:.3e}, relative L2 {:.3e}", r.value, report.mean)
    })?;
    Ok(format!(
        "gamma {}, loss {:.2e}, relative L2 {:.2e}, {:.1} s",
        session.pool.gamma.unwrap_or(f64::NAN),
        r.value,
        report.mean,
        t0.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 7

fn exact_expression(problem: &PdeProblem) -> (Tree, Vec<f64>) {
    let d = problem.dim;
    let leaf = |a: f64| {
        let mut v = vec![a; d];
        v.push(0.0);
        v
    };
    match problem.name.as_str() {
        "poisson60" | "reactdiff60" => {
            let (op, a) = if problem.name == "poisson60" { ("x^2", 0.5) } else { ("x^3", 1.0) };
            let pool = OperatorPool::from_names(&["0", op], &["+"]).unwrap();
            let tree = Tree::from_names(&Skeleton::build(2, d).unwrap(), &pool, &[op, "+", "0"]).unwrap();
            let mut theta = leaf(a);
            theta.extend(leaf(0.0));
            (tree, theta)
        }
        _ => {
            let pool = OperatorPool::from_names(&["0", "cos", "exp"], &["+"]).unwrap();
            let tree = Tree::from_names(&Skeleton::build(3, d).unwrap(), &pool, &["cos", "+", "0", "exp"]).unwrap();
            let mut theta = leaf(1.0 / d as f64);
            theta.extend(leaf(0.0));
            theta.extend([1.0, 0.0]);
            (tree, theta)
        }
    }
}

fn criterion_loss() -> Outcome {
    let mut worst_exact = 0.0f64;
    for (name, dim) in [("poisson60", 5), ("poisson60", 60), ("reactdiff60", 5), ("reactdiff60", 60), ("semilinear55", 5), ("semilinear55", 55)] {
        let problem = PdeProblem::make(name, ProblemOverrides { dim: Some(dim), ..Default::default() }).unwrap();
        let samples = problem.sample_points(300, 300, &mut stream(5, Purpose::Samples, 0));
        let (tree, theta) = exact_expression(&problem);
        let l = loss_parts(&problem, &tree, &theta, &samples).ok_or("domain error")?.total();
        check(l < 1e-20, || format!("{name} d={dim}: exact loss {l:e}"))?;
        worst_exact = worst_exact.max(l);
    }

    for d in [5usize, 60] {
        let problem = PdeProblem::make("poisson60", ProblemOverrides { dim: Some(d), ..Default::default() }).unwrap();
        let samples = problem.sample_points(200, 200, &mut stream(6, Purpose::Samples, 0));
        let pool = OperatorPool::from_names(&["0"], &["+"]).unwrap();
        let tree = Tree::from_names(&Skeleton::build(2, d).unwrap(), &pool, &["0", "+", "0"]).unwrap();
        let theta = vec![0.0; tree.param_len()];
        let parts = loss_parts(&problem, &tree, &theta, &samples).ok_or("domain error")?;
        check(parts.interior == (d * d) as f64, || format!("d={d}: zero interior term {}", parts.interior))?;
    }

    let mut worst_affine = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for name in ["poisson60", "reactdiff60", "semilinear55"] {
        let base = PdeProblem::make(name, ProblemOverrides { dim: Some(4), ..Default::default() }).unwrap();
        let samples = base.sample_points(100, 100, &mut stream(7, Purpose::Samples, 0));
        let pool = OperatorPool::from_names(&["sin", "x^2", "exp"], &["*"]).unwrap();
        let tree = Tree::from_names(&Skeleton::build(2, 4).unwrap(), &pool, &["sin", "*", "exp"]).unwrap();
        let theta: Vec<f64> = (0..tree.param_len()).map(|_| rng.random_range(-0.5..0.5)).collect();
        let at = |lambda: f64| {
            let p = PdeProblem::make(name, ProblemOverrides { dim: Some(4), lambda: Some(lambda), ..Default::default() }).unwrap();
            loss_parts(&p, &tree, &theta, &samples).unwrap()
        };
        let (l1, l2) = (at(1.0).total(), at(2.0).total());
        for lambda in [0.5, 3.0, 100.0, 1234.5] {
            let got = at(lambda).total();
            let want = l1 + (lambda - 1.0) * (l2 - l1);
            let err = (got - want).abs() / want.abs().max(1.0);
            worst_affine = worst_affine.max(err);
            check(err < 1e-12, || format!("{name} lambda={lambda}: {got} vs {want}"))?;
        }
    }
    Ok(format!(
        "exact loss max {worst_exact:.1e}, zero-expression interior = d^2, lambda-affinity error {worst_affine:.1e}"
    ))
}

// ---------------------------------------------------------------- 9

fn criterion_mc() -> Outcome {
    let cube = Cube { dim: 6, lo: -1.0, hi: 1.0 };
    let r = mc_relative_l2_in(cube, |x: &[f64]| x[0], |x: &[f64]| 2.0 * x[0], 500, 20, 3).map_err(|e| e.to_string())?;
    check(r.values.len() == 20 && r.values.iter().all(|v| *v == 1.0), || format!("values {:?}", r.values))?;

    // ‖c‖ / ‖x₁‖ on (−1,1)^d with E[x₁²] = 1/3 gives c·√3.
    let c = 0.1;
    let closed = c * 3f64.sqrt();
    let r = mc_relative_l2_in(cube, |x: &[f64]| x[0], |x: &[f64]| x[0] + c, 2000, 50, 4).map_err(|e| e.to_string())?;
    let sem = r.std / (r.repeats as f64).sqrt();
    check((r.mean - closed).abs() < 4.0 * sem, || {
        format!("mean {:.6} vs closed form {closed:.6} (sem {sem:.1e})", r.mean)
    })?;
    Ok(format!("exact 1.0 on all repeats; offset pair mean {:.5} vs {closed:.5} (sem {sem:.1e})", r.mean))
}

// ----------------------------------------------------------------

fn main() {
    let desk = std::cell::OnceCell::new();
    let desk = || desk.get_or_init(desk_runs);
    let criteria: Vec<Criterion> = vec![
        ("derivative correctness", Box::new(criterion_derivatives)),
        ("TN fit quality", Box::new(criterion_tn_fits)),
        ("gamma tuning fidelity", Box::new(criterion_gamma_tuning)),
        ("policy-gradient oracle", Box::new(criterion_policy_gradient)),
        ("desk-scale end-to-end", Box::new(|| criterion_desk(desk()))),
        ("oracle-sequence fine-tune", Box::new(criterion_oracle_fine_tune)),
        ("loss functional", Box::new(criterion_loss)),
        ("determinism and resume", Box::new(|| criterion_determinism(desk()))),
        ("MC error estimator", Box::new(criterion_mc)),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1} s]", i + 1),
            Err(why) => {
                println!("criterion {} {name}: FAIL ({why}) [{secs:.1} s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
