//! Closed-form step sizes, rates and complexities for SAGA, L-SVRG, q-SAGA and IL-SVRG.

use alloc::vec::Vec;

use super::{positive, solve_optimal_rate, RateError, RateInputs};
use crate::dual::{DualStrategy, Replacement, StorageLayout};
use crate::sampling::PrimalDistribution;

/// Primal sampling covered by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Uniform,
    Lipschitz,
}

/// `λ_max`, the recommended `λ⋆`, and the rate `ρ⋆ = μλ⋆`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBounds {
    pub lambda_max: f64,
    pub lambda_star: f64,
    pub rho_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Saga,
    Lsvrg(StorageLayout),
    /// q-SAGA and IL-SVRG share their bounds.
    Qsaga,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Saga => "saga",
            Method::Lsvrg(StorageLayout::FullTable) => "lsvrg",
            Method::Lsvrg(StorageLayout::Anchor) => "lsvrg-anchor",
            Method::Qsaga => "qsaga/ilsvrg",
        }
    }

    /// Expected gradient evaluations per iteration used by the complexity bounds.
    pub fn cost_per_iteration(self, n: usize, eta: f64) -> f64 {
        match self {
            Method::Saga => 1.0,
            Method::Lsvrg(StorageLayout::Anchor) => 2.0 + n as f64 * eta,
            Method::Lsvrg(StorageLayout::FullTable) | Method::Qsaga => 1.0 + n as f64 * eta,
        }
    }
}

/// Expected cost (up to `log(1/ε)`) and the recommended update frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityReport {
    pub method: &'static str,
    pub eta_star: f64,
    /// The bracketed constant evaluated at `eta_star`.
    pub total_complexity: f64,
    pub per_iteration_cost: f64,
    /// The simplified form, e.g. `(√n + √(D_L L̄/μ))²`.
    pub closed_form: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Constants {
    n: f64,
    mean: f64,
    max: f64,
    min: f64,
    mu: f64,
}

fn constants(lipschitz: &[f64], mu: f64) -> Result<Constants, RateError> {
    if lipschitz.is_empty() {
        return Err(RateError::LengthMismatch);
    }
    positive("mu", mu)?;
    for &l in lipschitz {
        positive("L_i", l)?;
    }
    let n = lipschitz.len() as f64;
    let mean = lipschitz.iter().sum::<f64>() / n;
    if mu > mean * (1.0 + 1e-12) {
        return Err(RateError::MuExceedsMean { mu, mean });
    }
    let max = lipschitz.iter().copied().fold(0.0, f64::max);
    let min = lipschitz.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Constants { n, mean, max, min, mu: mu.min(mean) })
}

fn frequency(eta: f64) -> Result<f64, RateError> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(eta)
    } else {
        Err(RateError::InvalidFrequency(eta))
    }
}

/// `C = 2 + 2√(1 − μ/L)`.
pub fn c_constant(mu: f64, l: f64) -> f64 {
    2.0 + 2.0 * libm::sqrt((1.0 - mu / l).max(0.0))
}

/// `D = 4 − 3μ/L`.
pub fn d_constant(mu: f64, l: f64) -> f64 {
    4.0 - 3.0 * mu / l
}

/// `λ = 2/(K + m + √(K² + m²))`.
fn recommended_step(k: f64, m: f64) -> f64 {
    2.0 / (k + m + libm::hypot(k, m))
}

fn bounds(k: f64, m: f64, mu: f64) -> StepBounds {
    let lambda_star = recommended_step(k, m);
    StepBounds { lambda_max: 2.0 / k, lambda_star, rho_star: mu * lambda_star }
}

/// SAGA: `K = C_U L_max, m = nμ` (uniform) or `K = C_L L̄, m = μ/p_min` (Lipschitz).
pub fn saga_bounds(lipschitz: &[f64], mu: f64, sampling: Sampling) -> Result<StepBounds, RateError> {
    let c = constants(lipschitz, mu)?;
    Ok(match sampling {
        Sampling::Uniform => bounds(c_constant(c.mu, c.max) * c.max, c.n * c.mu, c.mu),
        Sampling::Lipschitz => {
            let p_min = c.min / (c.n * c.mean);
            bounds(c_constant(c.mu, c.mean) * c.mean, c.mu / p_min, c.mu)
        }
    })
}

/// SAGA with `p_i ∝ 4L_i + nμ + √((4L_i)² + (nμ)²)` and `λ = 2/S`, `S` the mean weight.
#[derive(Debug, Clone)]
pub struct ImprovedSaga {
    pub distribution: PrimalDistribution,
    pub s: f64,
    pub lambda: f64,
    pub rho: f64,
}

impl ImprovedSaga {
    /// `1/(λμ) = S/(2μ)`.
    pub fn complexity(&self, mu: f64) -> f64 {
        self.s / (2.0 * mu)
    }
}

pub fn saga_improved(lipschitz: &[f64], mu: f64) -> Result<ImprovedSaga, RateError> {
    let c = constants(lipschitz, mu)?;
    let (distribution, s) = PrimalDistribution::improved_saga(lipschitz, c.mu)
        .map_err(|_| RateError::NonPositive { name: "L_i", value: c.min })?;
    let lambda = 2.0 / s;
    Ok(ImprovedSaga { distribution, s, lambda, rho: c.mu * lambda })
}

/// L-SVRG: `K = D_U L_max` or `D_L L̄`, `m = μ/η`.
pub fn lsvrg_bounds(lipschitz: &[f64], mu: f64, eta: f64, sampling: Sampling) -> Result<StepBounds, RateError> {
    let c = constants(lipschitz, mu)?;
    let eta = frequency(eta)?;
    let l = match sampling {
        Sampling::Uniform => c.max,
        Sampling::Lipschitz => c.mean,
    };
    Ok(bounds(d_constant(c.mu, l) * l, c.mu / eta, c.mu))
}

/// q-SAGA and IL-SVRG: `K = C_U L_max` or `C_L L̄`, `m = μ/η`.
pub fn qsaga_bounds(lipschitz: &[f64], mu: f64, eta: f64, sampling: Sampling) -> Result<StepBounds, RateError> {
    let c = constants(lipschitz, mu)?;
    let eta = frequency(eta)?;
    let l = match sampling {
        Sampling::Uniform => c.max,
        Sampling::Lipschitz => c.mean,
    };
    Ok(bounds(c_constant(c.mu, l) * l, c.mu / eta, c.mu))
}

/// L-SVRG complexity constant `(1 + nη)(D_L L̄/μ + 1/η)`, or `(2 + nη)(…)` with anchor storage.
pub fn lsvrg_complexity(lipschitz: &[f64], mu: f64, eta: f64, layout: StorageLayout) -> Result<f64, RateError> {
    let c = constants(lipschitz, mu)?;
    let eta = frequency(eta)?;
    let cost = Method::Lsvrg(layout).cost_per_iteration(lipschitz.len(), eta);
    Ok(cost * (d_constant(c.mu, c.mean) * c.mean / c.mu + 1.0 / eta))
}

/// q-SAGA/IL-SVRG complexity constant `(1 + nη)(C_L L̄/μ + 1/η)`.
pub fn qsaga_complexity(lipschitz: &[f64], mu: f64, eta: f64) -> Result<f64, RateError> {
    let c = constants(lipschitz, mu)?;
    let eta = frequency(eta)?;
    Ok((1.0 + c.n * eta) * (c_constant(c.mu, c.mean) * c.mean / c.mu + 1.0 / eta))
}

/// `η⋆ = √(μ/(n D_L L̄))` (full table) or `√(2μ/(n D_L L̄))` (anchor), clamped to `(0, 1]`.
pub fn lsvrg_eta_star(lipschitz: &[f64], mu: f64, layout: StorageLayout) -> Result<ComplexityReport, RateError> {
    let c = constants(lipschitz, mu)?;
    let kappa = d_constant(c.mu, c.mean) * c.mean / c.mu;
    let base = match layout {
        StorageLayout::FullTable => 1.0,
        StorageLayout::Anchor => 2.0,
    };
    let eta_star = libm::sqrt(base / (c.n * kappa)).min(1.0);
    let closed = libm::sqrt(c.n) + libm::sqrt(base * kappa);
    Ok(ComplexityReport {
        method: Method::Lsvrg(layout).label(),
        eta_star,
        total_complexity: lsvrg_complexity(lipschitz, mu, eta_star, layout)?,
        per_iteration_cost: Method::Lsvrg(layout).cost_per_iteration(lipschitz.len(), eta_star),
        closed_form: closed * closed,
    })
}

/// `η⋆ = √(μ/(n C_L L̄))`, clamped to `(0, 1]`.
pub fn qsaga_eta_star(lipschitz: &[f64], mu: f64) -> Result<ComplexityReport, RateError> {
    let c = constants(lipschitz, mu)?;
    let kappa = c_constant(c.mu, c.mean) * c.mean / c.mu;
    let eta_star = libm::sqrt(1.0 / (c.n * kappa)).min(1.0);
    let closed = libm::sqrt(c.n) + libm::sqrt(kappa);
    Ok(ComplexityReport {
        method: Method::Qsaga.label(),
        eta_star,
        total_complexity: qsaga_complexity(lipschitz, mu, eta_star)?,
        per_iteration_cost: Method::Qsaga.cost_per_iteration(lipschitz.len(), eta_star),
        closed_form: closed * closed,
    })
}

/// SAGA complexity with improved sampling: `S/(2μ)`.
pub fn saga_complexity(lipschitz: &[f64], mu: f64) -> Result<ComplexityReport, RateError> {
    let improved = saga_improved(lipschitz, mu)?;
    let value = improved.complexity(mu);
    Ok(ComplexityReport {
        method: Method::Saga.label(),
        eta_star: improved.distribution.min_probability(),
        total_complexity: value,
        per_iteration_cost: 1.0,
        closed_form: value,
    })
}

/// Complexity from the theorems: per-iteration cost over the optimal certified rate, with
/// Lipschitz sampling and update frequency `eta`.
pub fn theorem_complexity(lipschitz: &[f64], mu: f64, eta: f64, method: Method) -> Result<f64, RateError> {
    let c = constants(lipschitz, mu)?;
    let eta = frequency(eta)?;
    let dist = PrimalDistribution::lipschitz(lipschitz)
        .map_err(|_| RateError::NonPositive { name: "L_i", value: c.min })?;
    let n = lipschitz.len();
    let strategy = match method {
        Method::Saga => DualStrategy::Saga,
        Method::Lsvrg(_) => DualStrategy::Lsvrg { q: eta },
        Method::Qsaga => DualStrategy::Ilsvrg { q: eta },
    };
    let inputs = RateInputs::for_strategy(lipschitz, c.mu, &dist, &strategy)?;
    let cert = solve_optimal_rate(&inputs)?;
    let eta_used = if method == Method::Saga { 0.0 } else { eta };
    Ok(method.cost_per_iteration(n, eta_used) / cert.rho)
}

/// The q-SAGA batch size matching a frequency, and the frequency it actually gives.
pub fn qsaga_batch(eta: f64, n: usize, replacement: Replacement) -> (usize, f64) {
    let q = crate::dual::batch_for_frequency(eta, n);
    (q, crate::dual::qsaga_frequency(q, n, replacement))
}

/// Comparison row for uniform-sampling SAGA from the literature: `λ_max = 1/(4L_max)` and
/// `λ⋆ = 2/(4L_max + nμ + √((4L_max)² + (nμ)²))`. Printed for comparison only.
pub fn reference_saga_bounds(lipschitz: &[f64], mu: f64) -> Result<StepBounds, RateError> {
    let c = constants(lipschitz, mu)?;
    Ok(reference(c.max, c.n * c.mu, c.mu))
}

/// Comparison row for uniform-sampling L-SVRG: as [`reference_saga_bounds`] with `μ/η` for `nμ`.
pub fn reference_lsvrg_bounds(lipschitz: &[f64], mu: f64, eta: f64) -> Result<StepBounds, RateError> {
    let c = constants(lipschitz, mu)?;
    let eta = frequency(eta)?;
    Ok(reference(c.max, c.mu / eta, c.mu))
}

fn reference(l_max: f64, m: f64, mu: f64) -> StepBounds {
    let lambda_star = recommended_step(4.0 * l_max, m);
    StepBounds { lambda_max: 1.0 / (4.0 * l_max), lambda_star, rho_star: mu * lambda_star }
}

/// Comparison steps for SAGA with nonuniform sampling: `1/(4L̄ + μ/p_min)` for `p_i ∝ L_i`
/// and `1/(4L̄ + nμ)` for `p_i ∝ 4L_i + nμ`.
pub fn reference_saga_nonuniform_steps(lipschitz: &[f64], mu: f64) -> Result<(f64, f64), RateError> {
    let c = constants(lipschitz, mu)?;
    let p_min = c.min / (c.n * c.mean);
    Ok((1.0 / (4.0 * c.mean + c.mu / p_min), 1.0 / (4.0 * c.mean + c.n * c.mu)))
}

/// Log-spaced grid of `points` values on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (libm::log(lo), libm::log(hi));
    (0..points)
        .map(|k| {
            if points == 1 {
                lo
            } else {
                libm::exp(a + (b - a) * k as f64 / (points - 1) as f64)
            }
        })
        .collect()
}
