//! Composite finite-sum objectives `g(x) + (1/n) Σ f_i(x)`.
//!
//! Component indices are 0-based throughout the crate.

mod least_squares;
mod prox;

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;


use crate::linalg;

pub use least_squares::{
    build_least_squares, build_least_squares_dense, build_one_dimensional,
    one_dimensional_solution, LeastSquaresTerms, SparseRow,
};
pub use prox::{prox_apply, soft_threshold, ProxOperator, ProximalMap};

/// Relative threshold below which `μ` is treated as zero.
pub const STRONG_CONVEXITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("component {0} has a zero row (L_i = 0)")]
    ZeroRow(usize),
    #[error("objective is not strongly convex: mu = {mu:e} below {threshold:e}")]
    NotStronglyConvex { mu: f64, threshold: f64 },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("problem must have at least one component and one dimension")]
    Empty,
    #[error("smoothness constants must be positive and finite")]
    NonPositiveLipschitz,
    #[error("strong convexity constant mu = {mu} exceeds mean smoothness {mean_lipschitz}")]
    MuExceedsMeanLipschitz { mu: f64, mean_lipschitz: f64 },
    #[error("invalid regularization weight {0}")]
    InvalidRegularization(f64),
}

/// The smooth components `f_1..f_n` of a finite sum.
pub trait ComponentFunctions: Send + Sync {
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    fn value(&self, i: usize, x: &[f64]) -> f64;
    /// Writes `∇f_i(x)` into `out` (length `dim`).
    fn gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]);

    /// `out += weight·∇f_i(x)`.
    fn add_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]) {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(i, x, &mut g);
        linalg::axpy(weight, &g, out);
    }
}

/// `min_x g(x) + F(x)`, `F = (1/n) Σ f_i`, with `f_i` `L_i`-smooth and `F` `μ`-strongly convex.
///
/// Immutable after construction.
pub struct FiniteSumProblem {
    terms: Box<dyn ComponentFunctions>,
    lipschitz: Vec<f64>,
    mu: f64,
    prox: ProxOperator,
    x_star: Option<Vec<f64>>,
    /// Smoothness of `F` itself; only used as the step of the deterministic solver.
    pub(crate) smoothness: f64,
}

impl fmt::Debug for FiniteSumProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteSumProblem")
            .field("n", &self.n())
            .field("dim", &self.dim())
            .field("mu", &self.mu)
            .field("mean_lipschitz", &self.mean_lipschitz())
            .field("prox", &self.prox)
            .finish()
    }
}

impl FiniteSumProblem {
    pub fn new(
        terms: Box<dyn ComponentFunctions>,
        lipschitz: Vec<f64>,
        mu: f64,
        prox: ProxOperator,
    ) -> Result<Self, ProblemError> {
        let n = terms.len();
        if n == 0 || terms.dim() == 0 {
            return Err(ProblemError::Empty);
        }
        if lipschitz.len() != n {
            return Err(ProblemError::DimensionMismatch { expected: n, found: lipschitz.len() });
        }
        if lipschitz.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(ProblemError::NonPositiveLipschitz);
        }
        let mean_lipschitz = lipschitz.iter().sum::<f64>() / n as f64;
        let threshold = STRONG_CONVEXITY_FLOOR * mean_lipschitz;
        if !(mu >= threshold) {
            return Err(ProblemError::NotStronglyConvex { mu, threshold });
        }
        // eigenvalue routines can overshoot the mean by a few ulps
        let mu = if mu > mean_lipschitz && mu <= mean_lipschitz * (1.0 + 1e-12) {
            mean_lipschitz
        } else {
            mu
        };
        if mu > mean_lipschitz {
            return Err(ProblemError::MuExceedsMeanLipschitz { mu, mean_lipschitz });
        }
        Ok(FiniteSumProblem { terms, lipschitz, mu, prox, x_star: None, smoothness: mean_lipschitz })
    }

    /// Attaches a known optimum.
    pub fn with_solution(mut self, x_star: Vec<f64>) -> Self {
        assert_eq!(x_star.len(), self.dim(), "solution has wrong dimension");
        self.x_star = Some(x_star);
        self
    }

    /// Replaces the regularizer; any attached optimum is dropped.
    pub fn with_prox(mut self, prox: ProxOperator) -> Self {
        self.prox = prox;
        self.x_star = None;
        self
    }

    pub fn n(&self) -> usize {
        self.terms.len()
    }

    pub fn dim(&self) -> usize {
        self.terms.dim()
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn mean_lipschitz(&self) -> f64 {
        self.lipschitz.iter().sum::<f64>() / self.n() as f64
    }

    pub fn max_lipschitz(&self) -> f64 {
        self.lipschitz.iter().fold(0.0, |m, &l| m.max(l))
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `L̄ / μ`.
    pub fn condition_number(&self) -> f64 {
        self.mean_lipschitz() / self.mu
    }

    pub fn prox(&self) -> &ProxOperator {
        &self.prox
    }

    pub fn solution(&self) -> Option<&[f64]> {
        self.x_star.as_deref()
    }

    pub fn terms(&self) -> &dyn ComponentFunctions {
        &*self.terms
    }

    /// `∇f_i(x)` written into `out`.
    #[inline]
    pub fn gradient_component_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        self.terms.gradient_into(i, x, out);
    }

    pub fn gradient_component(&self, i: usize, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        self.check_index(i)?;
        self.check_point(x)?;
        let mut out = vec![0.0; self.dim()];
        self.terms.gradient_into(i, x, &mut out);
        Ok(out)
    }

    /// `Σ_i ∇f_i(x)` written into `out`.
    pub fn gradient_sum_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n() {
            self.terms.add_gradient(i, x, 1.0, out);
        }
    }

    /// `∇F(x) = (1/n) Σ ∇f_i(x)`.
    pub fn full_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_sum_into(x, &mut out);
        linalg::scale(1.0 / self.n() as f64, &mut out);
        out
    }

    /// `F(x) = (1/n) Σ f_i(x)`.
    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        (0..self.n()).map(|i| self.terms.value(i, x)).sum::<f64>() / self.n() as f64
    }

    /// `F(x) + g(x)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth_value(x) + self.prox.value(x)
    }

    pub fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        self.terms.value(i, x)
    }

    /// Residual of the fixed-point characterization `x = prox_{λg}(x − λ∇F(x))`, as `‖·‖∞`.
    pub fn fixed_point_residual(&self, x: &[f64], step: f64) -> f64 {
        let g = self.full_gradient(x);
        let mut z: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
        self.prox.apply_in_place(step, &mut z);
        z.iter().zip(x).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Deterministic proximal gradient with step `1/L_F` from `x0`.
    ///
    /// Stops once an iteration moves no coordinate by more than `tol·max(1, ‖x‖∞)`.
    pub fn proximal_gradient(&self, x0: &[f64], tol: f64, max_iter: usize) -> ProximalGradientResult {
        let step = 1.0 / self.smoothness;
        let mut x = x0.to_vec();
        let mut next = vec![0.0; self.dim()];
        let mut grad = vec![0.0; self.dim()];
        let inv_n = 1.0 / self.n() as f64;
        for it in 1..=max_iter {
            self.gradient_sum_into(&x, &mut grad);
            for ((nj, xj), gj) in next.iter_mut().zip(&x).zip(&grad) {
                *nj = xj - step * inv_n * gj;
            }
            self.prox.apply_in_place(step, &mut next);
            let moved = next.iter().zip(&x).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
            core::mem::swap(&mut x, &mut next);
            if moved <= tol * linalg::max_abs(&x).max(1.0) {
                return ProximalGradientResult { x, iterations: it, converged: true };
            }
        }
        ProximalGradientResult { x, iterations: max_iter, converged: false }
    }

    /// Solves to `tol` with proximal gradient from the origin and attaches the result.
    pub fn solve_and_attach(self, tol: f64, max_iter: usize) -> (Self, ProximalGradientResult) {
        let res = self.proximal_gradient(&vec![0.0; self.dim()], tol, max_iter);
        (self.with_solution(res.x.clone()), res)
    }

    fn check_index(&self, i: usize) -> Result<(), ProblemError> {
        if i >= self.n() {
            Err(ProblemError::IndexOutOfRange { index: i, len: self.n() })
        } else {
            Ok(())
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<(), ProblemError> {
        if x.len() != self.dim() {
            Err(ProblemError::DimensionMismatch { expected: self.dim(), found: x.len() })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProximalGradientResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Free-function form of [`FiniteSumProblem::gradient_component`].
pub fn gradient_component(p: &FiniteSumProblem, i: usize, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
    p.gradient_component(i, x)
}

pub fn full_gradient(p: &FiniteSumProblem, x: &[f64]) -> Vec<f64> {
    p.full_gradient(x)
}
