//! Monte Carlo relative L² errors and 2-D slice grids for heatmaps.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FexError, Result};
use crate::numeric::compensated_sum;
use crate::pde::PdeProblem;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub mean: f64,
    /// Sample standard deviation across repeats (n − 1 denominator).
    pub std: f64,
    pub repeats: usize,
    pub points_per_repeat: usize,
    pub seed: u64,
    pub values: Vec<f64>,
}

/// Axis-aligned box `(lo, hi)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
}

impl From<&PdeProblem> for Cube {
    fn from(p: &PdeProblem) -> Self {
        Self {
            dim: p.dim,
            lo: p.lo,
            hi: p.hi,
        }
    }
}

/// `‖u − ũ‖ / ‖u‖` over a point set (discrete sums).
pub fn relative_l2(reference: &[f64], approx: &[f64]) -> Result<f64> {
    let num = compensated_sum(reference.iter().zip(approx).map(|(u, v)| (u - v) * (u - v)));
    let den = compensated_sum(reference.iter().map(|u| u * u));
    if den == 0.0 {
        return Err(FexError::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// One relative error per repeat, each on fresh uniform points of `cube`.
pub fn mc_relative_l2_in<U, V>(cube: Cube, u: U, approx: V, n_points: usize, repeats: usize, seed: u64) -> Result<ErrorReport>
where
    U: Fn(&[f64]) -> f64 + Sync,
    V: Fn(&[f64]) -> f64 + Sync,
{
    if n_points == 0 || repeats == 0 {
        return Err(FexError::Config("n_points and repeats must be positive".into()));
    }
    let values = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, Purpose::Eval, r as u64);
            let (mut refs, mut preds) = (Vec::with_capacity(n_points), Vec::with_capacity(n_points));
            for _ in 0..n_points {
                let x: Vec<f64> = (0..cube.dim)
                    .map(|_| loop {
                        let v = rng.random_range(cube.lo..cube.hi);
                        if v > cube.lo {
                            break v;
                        }
                    })
                    .collect();
                refs.push(u(&x));
                preds.push(approx(&x));
            }
            relative_l2(&refs, &preds)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let std = if values.len() > 1 {
        (compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(ErrorReport {
        mean,
        std,
        repeats,
        points_per_repeat: n_points,
        seed,
        values,
    })
}

/// Relative error of `approx` against the problem's true solution.
pub fn mc_relative_l2<V>(problem: &PdeProblem, approx: V, n_points: usize, repeats: usize, seed: u64) -> Result<ErrorReport>
where
    V: Fn(&[f64]) -> f64 + Sync,
{
    mc_relative_l2_in(problem.into(), |x| problem.true_value(x), approx, n_points, repeats, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    #[default]
    Absolute,
    /// `|ũ − u| / |u|`.
    Relative,
}

/// Reference, prediction and error on a `resolution²` grid over dims `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceGrid {
    pub dims: (usize, usize),
    pub fixed: Vec<f64>,
    pub resolution: usize,
    /// `(x_i, x_j)` per row, `x_i` varying fastest.
    pub coords: Vec<(f64, f64)>,
    pub reference: Vec<f64>,
    pub prediction: Vec<f64>,
    pub error: Vec<f64>,
}

/// Builds a slice. `fixed` gives every coordinate (entries `i`, `j` are
/// overwritten); the domain midpoint is used when absent.
pub fn slice_grid<V>(
    problem: &PdeProblem,
    approx: V,
    dims: (usize, usize),
    fixed: Option<&[f64]>,
    resolution: usize,
    mode: ErrorMode,
) -> Result<SliceGrid>
where
    V: Fn(&[f64]) -> f64 + Sync,
{
    let (i, j) = dims;
    let d = problem.dim;
    if i == j || i >= d || j >= d {
        return Err(FexError::Config(format!("slice dims ({i}, {j}) must be distinct and below {d}")));
    }
    if resolution < 2 {
        return Err(FexError::Config("slice resolution must be at least 2".into()));
    }
    let base = match fixed {
        Some(f) if f.len() != d => {
            return Err(FexError::Dimension {
                what: "fixed values",
                got: f.len(),
                expected: d,
            })
        }
        Some(f) => f.to_vec(),
        None => vec![0.5 * (problem.lo + problem.hi); d],
    };
    let axis: Vec<f64> = (0..resolution)
        .map(|k| problem.lo + (problem.hi - problem.lo) * k as f64 / (resolution - 1) as f64)
        .collect();
    let coords: Vec<(f64, f64)> = axis.iter().flat_map(|&b| axis.iter().map(move |&a| (a, b))).collect();
    let rows: Vec<(f64, f64)> = coords
        .par_iter()
        .map(|&(a, b)| {
            let mut x = base.clone();
            x[i] = a;
            x[j] = b;
            (problem.true_value(&x), approx(&x))
        })
        .collect();
    let error = rows
        .iter()
        .map(|(u, v)| match mode {
            ErrorMode::Absolute => (v - u).abs(),
            ErrorMode::Relative => (v - u).abs() / u.abs().max(f64::MIN_POSITIVE),
        })
        .collect();
    Ok(SliceGrid {
        dims,
        fixed: base,
        resolution,
        coords,
        reference: rows.iter().map(|r| r.0).collect(),
        prediction: rows.iter().map(|r| r.1).collect(),
        error,
    })
}

impl SliceGrid {
    pub fn fixed_hash(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.fixed {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// CSV text for one of the value columns.
    pub fn csv(&self, values: &[f64]) -> String {
        let mut s = format!("dim_i={},dim_j={},fixed_hash={}\n", self.dims.0, self.dims.1, self.fixed_hash());
        for ((a, b), v) in self.coords.iter().zip(values) {
            writeln!(s, "{a},{b},{v:e}").expect("string write");
        }
        s
    }

    /// Writes `ref.csv`, `pred.csv` and `err.csv` into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| FexError::io(dir, e))?;
        for (name, vals) in [("ref.csv", &self.reference), ("pred.csv", &self.prediction), ("err.csv", &self.error)] {
            let p = dir.join(name);
            std::fs::write(&p, self.csv(vals)).map_err(|e| FexError::io(&p, e))?;
        }
        Ok(())
    }
}
