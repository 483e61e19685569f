//! LibSVM datasets and synthetic problem generators.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vrgrad_core::problems::{build_least_squares, build_one_dimensional, FiniteSumProblem, ProblemError, SparseRow};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("malformed input on line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("dataset has no examples")]
    Empty,
    #[error("no regularization in [0, {xi_max}] gives sparsity in [{lo}, {hi}]")]
    Unattainable { lo: f64, hi: f64, xi_max: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sparse examples with 1-based feature indices, as in LibSVM files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    /// `(index, value)` pairs per example, indices strictly increasing and ≥ 1.
    pub rows: Vec<Vec<(u32, f64)>>,
    pub labels: Vec<f64>,
    pub n_features: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows with 0-based indices for the problem builders.
    pub fn sparse_rows(&self) -> Vec<SparseRow> {
        self.rows
            .iter()
            .map(|r| SparseRow::new(r.iter().map(|(j, _)| j - 1).collect(), r.iter().map(|(_, v)| *v).collect()))
            .collect()
    }
}

/// Parses `label index:value ...` lines. Blank lines and text after `#` are skipped.
pub fn parse_libsvm<R: BufRead>(input: R) -> Result<Dataset, DataError> {
    let mut data = Dataset::default();
    for (k, line) in input.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let bad = |reason: String| DataError::MalformedLine { line: line_no, reason };
        let mut tokens = content.split_whitespace();
        let label_token = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_token.parse().map_err(|_| bad(format!("label `{label_token}`")))?;
        let mut row = Vec::new();
        let mut last = 0u32;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| bad(format!("pair `{tok}`")))?;
            let idx: u32 = idx.parse().map_err(|_| bad(format!("index `{idx}`")))?;
            let val: f64 = val.parse().map_err(|_| bad(format!("value `{val}`")))?;
            if idx == 0 || idx <= last {
                return Err(bad(format!("index {idx} after {last}")));
            }
            if !val.is_finite() {
                return Err(bad(format!("value `{val}`")));
            }
            last = idx;
            row.push((idx, val));
        }
        data.n_features = data.n_features.max(last as usize);
        data.rows.push(row);
        data.labels.push(label);
    }
    Ok(data)
}

/// Writes one line per example. Numbers use the shortest round-trip form, in exponent
/// notation for very small or large magnitudes.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    for (row, label) in data.rows.iter().zip(&data.labels) {
        let mut line = crate::num(*label);
        for (j, v) in row {
            write!(line, " {j}:{}", crate::num(*v)).expect("writing to a String");
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Debug export with header `label,idx:val;idx:val`.
pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "idx:val;idx:val"]).map_err(csv_io)?;
    for (row, label) in data.rows.iter().zip(&data.labels) {
        let features: Vec<String> = row.iter().map(|(j, v)| format!("{j}:{v}")).collect();
        w.write_record([label.to_string(), features.join(";")]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> DataError {
    DataError::Io(std::io::Error::other(e))
}

/// Removes feature columns with no nonzero entry and re-indexes the rest densely.
/// Returns the dropped 1-based column indices.
pub fn drop_zero_columns(data: &Dataset) -> (Dataset, Vec<u32>) {
    let used: BTreeSet<u32> = data.rows.iter().flatten().filter(|(_, v)| *v != 0.0).map(|(j, _)| *j).collect();
    let mut remap = vec![0u32; data.n_features + 1];
    let mut dropped = Vec::new();
    let mut next = 0u32;
    for j in 1..=data.n_features as u32 {
        if used.contains(&j) {
            next += 1;
            remap[j as usize] = next;
        } else {
            dropped.push(j);
        }
    }
    let rows = data
        .rows
        .iter()
        .map(|r| r.iter().filter(|(_, v)| *v != 0.0).map(|(j, v)| (remap[*j as usize], *v)).collect())
        .collect();
    (Dataset { rows, labels: data.labels.clone(), n_features: next as usize }, dropped)
}

/// Least squares (plus `xi·‖x‖₁`) with the labels as targets.
pub fn to_problem(data: &Dataset, xi: f64) -> Result<FiniteSumProblem, DataError> {
    if data.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(build_least_squares(data.sparse_rows(), data.labels.clone(), data.n_features, xi)?)
}

/// 1-D least squares `(1/n)Σ(a_i x − b_i)²` with `a`, then `b`, drawn standard normal
/// from `ChaCha8Rng::seed_from_u64(seed)`.
pub fn generate_1d_least_squares(n: usize, seed: u64) -> Result<(FiniteSumProblem, Vec<f64>, Vec<f64>), DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    if n == 0 {
        return Err(DataError::Empty);
    }
    let problem = build_one_dimensional(&a, &b)?;
    Ok((problem, a, b))
}

/// Lipschitz constants drawn uniformly from `(0, 2)` and `μ = L̄/κ`.
pub fn generate_constants(n: usize, kappa: f64, seed: u64) -> (Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l: Vec<f64> = (0..n)
        .map(|_| loop {
            let v = 2.0 * rng.random::<f64>();
            if v > 0.0 {
                break v;
            }
        })
        .collect();
    let mean = l.iter().sum::<f64>() / n as f64;
    (l, mean / kappa)
}

/// Fraction of coordinates with `|x_j| < 1e-8·max_k |x_k|`; the zero vector counts as fully sparse.
pub fn sparsity(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 1.0;
    }
    x.iter().filter(|v| v.abs() < 1e-8 * scale).count() as f64 / x.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityTuning {
    pub xi: f64,
    pub sparsity: f64,
    pub solution: Vec<f64>,
    pub steps: usize,
}

const TUNE_STEPS: usize = 60;
const TUNE_SOLVER_TOL: f64 = 1e-10;
const TUNE_SOLVER_ITER: usize = 1_000_000;

/// Bisects `ξ` until the lasso solution's sparsity lies in `[lo, hi + 1/dim]`.
pub fn tune_l1_for_sparsity(
    rows: &[SparseRow],
    targets: &[f64],
    dim: usize,
    (lo, hi): (f64, f64),
) -> Result<SparsityTuning, DataError> {
    let hi = hi + 1.0 / dim as f64;
    let solve = |xi: f64| -> Result<(f64, Vec<f64>), DataError> {
        let p = build_least_squares(rows.to_vec(), targets.to_vec(), dim, xi)?;
        let x = p.proximal_gradient(&vec![0.0; dim], TUNE_SOLVER_TOL, TUNE_SOLVER_ITER).x;
        Ok((sparsity(&x), x))
    };
    // x = 0 is optimal once ξ ≥ ‖∇F(0)‖∞
    let base = build_least_squares(rows.to_vec(), targets.to_vec(), dim, 0.0)?;
    let xi_max = base.full_gradient(&vec![0.0; dim]).iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let (mut a, mut b) = (0.0, xi_max);
    for step in 0..=TUNE_STEPS {
        let xi = if step == 0 { 0.0 } else { 0.5 * (a + b) };
        let (s, x) = solve(xi)?;
        if s >= lo && s <= hi {
            return Ok(SparsityTuning { xi, sparsity: s, solution: x, steps: step });
        }
        if step > 0 {
            if s < lo {
                a = xi;
            } else {
                b = xi;
            }
        }
    }
    Err(DataError::Unattainable { lo, hi, xi_max })
}
