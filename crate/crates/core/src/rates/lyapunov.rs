//! Lyapunov function, its primal/dual terms, and the exact one-step expectation.

use alloc::vec;
use alloc::vec::Vec;

use super::{RateCertificate, RateError};
use crate::dual::{DualStorage, DualStrategy, Replacement, UpdateSet};
use crate::linalg;
use crate::problems::FiniteSumProblem;
use crate::sampling::PrimalDistribution;
use crate::solver::SolverState;

/// Largest number of `(I, U)` outcomes the oracle will enumerate.
pub const MAX_OUTCOMES: u128 = 1_000_000;

/// `‖x − x⋆‖² + Σ γ̂_i ‖y_i − y⋆_i‖²`.
pub fn lyapunov_eval(x: &[f64], y: &[Vec<f64>], x_star: &[f64], y_star: &[Vec<f64>], gamma_hat: &[f64]) -> f64 {
    let dual: f64 = y
        .iter()
        .zip(y_star)
        .zip(gamma_hat)
        .map(|((yi, si), g)| if *g == 0.0 { 0.0 } else { g * linalg::dist2(yi, si) })
        .sum();
    linalg::dist2(x, x_star) + dual
}

/// `y⋆_i = ∇f_i(x⋆)` for every component.
pub fn optimal_duals(problem: &FiniteSumProblem) -> Result<Vec<Vec<f64>>, RateError> {
    let x_star = problem.solution().ok_or(RateError::MissingSolution)?;
    Ok(component_gradients(problem, x_star))
}

fn component_gradients(problem: &FiniteSumProblem, x: &[f64]) -> Vec<Vec<f64>> {
    (0..problem.n())
        .map(|i| {
            let mut g = vec![0.0; problem.dim()];
            problem.gradient_component_into(i, x, &mut g);
            g
        })
        .collect()
}

/// The primal, dual and variance terms of the Lyapunov bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovTerms {
    pub primal: f64,
    pub dual: f64,
    pub variance: f64,
}

/// Evaluates `𝒫(x)`, `𝒟(y)` and `𝒱(x)` for meta-parameters `γ_i ≥ 0`, `δ > 0`.
///
/// `𝒟` is written with `(1 − η_i)γ_i + 1` in place of `(1 − η_i + 1/γ_i)γ_i`, which
/// is the stated convention `γ_i/γ_i = 1` when `γ_i = 0`.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_terms(
    problem: &FiniteSumProblem,
    p: &[f64],
    eta: &[f64],
    gamma: &[f64],
    delta: f64,
    lambda: f64,
    x: &[f64],
    y: &[Vec<f64>],
) -> Result<LyapunovTerms, RateError> {
    let x_star = problem.solution().ok_or(RateError::MissingSolution)?;
    let y_star = component_gradients(problem, x_star);
    let grads = component_gradients(problem, x);
    let n = problem.n() as f64;
    let dim = problem.dim();
    let n2 = n * n;

    let mut mean_grad_diff = vec![0.0; dim];
    let mut variance = 0.0;
    for i in 0..problem.n() {
        let diff: Vec<f64> = grads[i].iter().zip(&y_star[i]).map(|(a, b)| a - b).collect();
        linalg::axpy(1.0 / n, &diff, &mut mean_grad_diff);
        let coef = (1.0 + delta) * (eta[i] * gamma[i] / delta + 1.0) / (n2 * p[i]);
        variance += coef * linalg::norm2_sq(&diff);
    }
    variance -= delta * linalg::norm2_sq(&mean_grad_diff);

    let dx: Vec<f64> = x.iter().zip(x_star).map(|(a, b)| a - b).collect();
    let primal = linalg::norm2_sq(&dx) - 2.0 * lambda * linalg::dot(&mean_grad_diff, &dx) + lambda * lambda * variance;

    let scale = (1.0 + 1.0 / delta) * lambda * lambda;
    let mut mean_dual_diff = vec![0.0; dim];
    let mut dual = 0.0;
    for i in 0..problem.n() {
        let diff: Vec<f64> = y[i].iter().zip(&y_star[i]).map(|(a, b)| a - b).collect();
        linalg::axpy(1.0 / n, &diff, &mut mean_dual_diff);
        dual += ((1.0 - eta[i]) * gamma[i] + 1.0) * scale / (n2 * p[i]) * linalg::norm2_sq(&diff);
    }
    dual -= scale * linalg::norm2_sq(&mean_dual_diff);

    Ok(LyapunovTerms { primal, dual, variance })
}

/// Exact expectation of the next Lyapunov value against its contracted current value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOutcome {
    /// `E[‖x⁺ − x⋆‖² + Σ γ̂_i‖y⁺_i − y⋆_i‖²]` over every `(I, U)` outcome.
    pub expected_next: f64,
    /// `(1 − ρ)` times the current Lyapunov value.
    pub contracted: f64,
    pub outcomes: u128,
}

impl OracleOutcome {
    pub fn slack(&self) -> f64 {
        self.contracted - self.expected_next
    }
}

/// Number of `(I, U)` pairs the oracle would visit.
pub fn outcome_count(strategy: &DualStrategy, n: usize) -> u128 {
    let n128 = n as u128;
    let sets: u128 = match *strategy {
        DualStrategy::Saga => 1,
        DualStrategy::Lsvrg { .. } => 2,
        DualStrategy::Ilsvrg { .. } => 1u128.checked_shl(n as u32).unwrap_or(u128::MAX),
        DualStrategy::Qsaga { q, replacement: Replacement::Without } => binomial(n, q),
        DualStrategy::Qsaga { q, replacement: Replacement::With } => {
            n128.checked_pow(q as u32).unwrap_or(u128::MAX)
        }
    };
    n128.saturating_mul(sets)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, j| acc.saturating_mul((n - j) as u128) / (j as u128 + 1))
}

/// Update sets drawn independently of the primal index, with their probabilities.
fn independent_update_sets(strategy: &DualStrategy, n: usize) -> Vec<(UpdateSet, f64)> {
    match *strategy {
        DualStrategy::Saga => Vec::new(),
        DualStrategy::Lsvrg { q } => {
            if q >= 1.0 {
                vec![(UpdateSet::All, 1.0)]
            } else {
                vec![(UpdateSet::All, q), (UpdateSet::Empty, 1.0 - q)]
            }
        }
        DualStrategy::Ilsvrg { q } => (0u64..1 << n)
            .filter_map(|mask| {
                let picked: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
                let k = picked.len() as i32;
                let prob = libm::pow(q, k as f64) * libm::pow(1.0 - q, (n as i32 - k) as f64);
                (prob > 0.0).then(|| (UpdateSet::from_sorted(picked, n), prob))
            })
            .collect(),
        DualStrategy::Qsaga { q, replacement: Replacement::Without } => {
            let prob = 1.0 / binomial(n, q) as f64;
            combinations(n, q).into_iter().map(|c| (UpdateSet::from_sorted(c, n), prob)).collect()
        }
        DualStrategy::Qsaga { q, replacement: Replacement::With } => {
            let total = (n as u64).pow(q as u32);
            let prob = 1.0 / total as f64;
            let mut merged: Vec<(Vec<usize>, f64)> = Vec::new();
            for code in 0..total {
                let mut rest = code;
                let mut picked: Vec<usize> = (0..q)
                    .map(|_| {
                        let j = (rest % n as u64) as usize;
                        rest /= n as u64;
                        j
                    })
                    .collect();
                picked.sort_unstable();
                picked.dedup();
                match merged.iter_mut().find(|(set, _)| *set == picked) {
                    Some(entry) => entry.1 += prob,
                    None => merged.push((picked, prob)),
                }
            }
            merged.into_iter().map(|(c, pr)| (UpdateSet::from_sorted(c, n), pr)).collect()
        }
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for j in start..n {
            current.push(j);
            rec(j + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Enumerates every `(I, U)` outcome of one iteration from `(x, y)` and returns the exact
/// expected next Lyapunov value next to `(1 − ρ)` times the current one.
#[allow(clippy::too_many_arguments)]
pub fn one_step_contraction_oracle(
    problem: &FiniteSumProblem,
    dist: &PrimalDistribution,
    strategy: &DualStrategy,
    lambda: f64,
    x: &[f64],
    y: &[Vec<f64>],
    cert: &RateCertificate,
) -> Result<OracleOutcome, RateError> {
    let n = problem.n();
    let outcomes = outcome_count(strategy, n);
    if outcomes > MAX_OUTCOMES {
        return Err(RateError::TooManyOutcomes(outcomes));
    }
    let x_star = problem.solution().ok_or(RateError::MissingSolution)?;
    let y_star = component_gradients(problem, x_star);
    let gamma_hat = &cert.gamma_hat;
    let current = lyapunov_eval(x, y, x_star, &y_star, gamma_hat);

    let dual = DualStorage::from_table(y, problem.dim()).map_err(crate::solver::SolverError::from)?;
    let start = SolverState::from_parts(problem, x.to_vec(), dual, 0, 0);
    let shared = independent_update_sets(strategy, n);

    let mut expected = 0.0;
    for i in 0..n {
        let pi = dist.p(i);
        let saga_set = [(UpdateSet::Single(i), 1.0)];
        let sets: &[(UpdateSet, f64)] = if matches!(strategy, DualStrategy::Saga) { &saga_set } else { &shared };
        for (set, prob) in sets {
            let mut state = start.clone();
            state.transition(problem, dist, lambda, i, set)?;
            let y_next = state.dual.values(problem);
            expected += pi * prob * lyapunov_eval(&state.x, &y_next, x_star, &y_star, gamma_hat);
        }
    }
    Ok(OracleOutcome { expected_next: expected, contracted: (1.0 - cert.rho) * current, outcomes })
}
