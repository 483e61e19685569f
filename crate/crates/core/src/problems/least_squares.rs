use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{ComponentFunctions, FiniteSumProblem, ProblemError, ProxOperator};

/// One row of the design matrix in compressed (index, value) form.
///
/// Indices are 0-based and strictly increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Self {
        debug_assert_eq!(indices.len(), values.len());
        SparseRow { indices, values }
    }

    /// Keeps the nonzero entries of a dense row.
    pub fn from_dense(row: &[f64]) -> Self {
        let (indices, values) = row
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j as u32, *v))
            .unzip();
        SparseRow { indices, values }
    }

    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&j, v)| v * x[j as usize])
            .sum()
    }

    pub fn norm2_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&j, &v)| (j as usize, v))
    }
}

/// Components `f_i(x) = (a_iᵀx − b_i)²`.
#[derive(Debug, Clone)]
pub struct LeastSquaresTerms {
    rows: Vec<SparseRow>,
    targets: Vec<f64>,
    dim: usize,
}

impl LeastSquaresTerms {
    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    #[inline]
    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].dot(x) - self.targets[i]
    }

    /// `(2/n)·AᵀA` as a dense matrix.
    fn scaled_gram(&self) -> DMatrix<f64> {
        let n = self.rows.len() as f64;
        let mut gram = DMatrix::<f64>::zeros(self.dim, self.dim);
        for row in &self.rows {
            for (j, vj) in row.iter() {
                for (k, vk) in row.iter() {
                    gram[(j, k)] += vj * vk;
                }
            }
        }
        gram * (2.0 / n)
    }
}

impl ComponentFunctions for LeastSquaresTerms {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        let r = self.residual(i, x);
        r * r
    }

    fn gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.add_gradient(i, x, 1.0, out);
    }

    fn add_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]) {
        let c = 2.0 * weight * self.residual(i, x);
        for (j, v) in self.rows[i].iter() {
            out[j] += c * v;
        }
    }
}

/// Extreme eigenvalues of the symmetric matrix `(2/n)AᵀA`: `(min, max)`.
fn gram_spectrum_bounds(terms: &LeastSquaresTerms) -> (f64, f64) {
    if terms.dim == 1 {
        let n = terms.rows.len() as f64;
        let s: f64 = terms.rows.iter().map(|r| r.norm2_sq()).sum();
        let v = 2.0 * s / n;
        return (v, v);
    }
    let eig = SymmetricEigen::try_new(terms.scaled_gram(), 1e-14, 0)
        .expect("symmetric eigen decomposition with unlimited iterations");
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Builds `F(x) = (1/n) Σ (a_iᵀx − b_i)²` with `g = xi·‖x‖₁` (or `g = 0` when `xi = 0`).
///
/// `L_i = 2‖a_i‖²` and `μ = λ_min((2/n)AᵀA)`.
pub fn build_least_squares(
    rows: Vec<SparseRow>,
    targets: Vec<f64>,
    dim: usize,
    xi: f64,
) -> Result<FiniteSumProblem, ProblemError> {
    let n = rows.len();
    if n == 0 || dim == 0 {
        return Err(ProblemError::Empty);
    }
    if targets.len() != n {
        return Err(ProblemError::DimensionMismatch { expected: n, found: targets.len() });
    }
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(ProblemError::InvalidRegularization(xi));
    }
    for row in &rows {
        if row.indices.len() != row.values.len() {
            return Err(ProblemError::DimensionMismatch {
                expected: row.indices.len(),
                found: row.values.len(),
            });
        }
        if let Some(&j) = row.indices.iter().find(|&&j| j as usize >= dim) {
            return Err(ProblemError::IndexOutOfRange { index: j as usize, len: dim });
        }
    }
    let lipschitz: Vec<f64> = rows.iter().map(|r| 2.0 * r.norm2_sq()).collect();
    if let Some(i) = lipschitz.iter().position(|&l| !(l > 0.0)) {
        return Err(ProblemError::ZeroRow(i));
    }
    let terms = LeastSquaresTerms { rows, targets, dim };
    let (mu, smoothness) = gram_spectrum_bounds(&terms);
    let mut problem = FiniteSumProblem::new(
        alloc::boxed::Box::new(terms),
        lipschitz,
        mu,
        ProxOperator::l1(xi),
    )?;
    problem.smoothness = smoothness.max(mu);
    Ok(problem)
}

/// [`build_least_squares`] from a dense row-major matrix.
pub fn build_least_squares_dense(
    a: &[Vec<f64>],
    b: &[f64],
    xi: f64,
) -> Result<FiniteSumProblem, ProblemError> {
    let dim = a.first().map_or(0, |r| r.len());
    if let Some(r) = a.iter().find(|r| r.len() != dim) {
        return Err(ProblemError::DimensionMismatch { expected: dim, found: r.len() });
    }
    let rows = a.iter().map(|r| SparseRow::from_dense(r)).collect();
    build_least_squares(rows, b.to_vec(), dim, xi)
}

/// Closed-form optimum of the unregularized 1-D problem: `Σa_i b_i / Σa_i²`.
pub fn one_dimensional_solution(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    num / den
}

/// 1-D least squares `(1/n)Σ(a_i x − b_i)²` with the closed-form optimum attached.
pub fn build_one_dimensional(a: &[f64], b: &[f64]) -> Result<FiniteSumProblem, ProblemError> {
    let rows = a.iter().map(|&v| SparseRow::from_dense(&[v])).collect();
    let problem = build_least_squares(rows, b.to_vec(), 1, 0.0)?;
    Ok(problem.with_solution(vec![one_dimensional_solution(a, b)]))
}
