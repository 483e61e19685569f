//! Certified linear rates for PVRSG: the implicit fixed points of the two convergence
//! theorems, their Lyapunov weights, the contraction diagnostics, and the corollary
//! closed forms.

use alloc::vec;
use alloc::vec::Vec;

use crate::dual::DualStrategy;
use crate::problems::FiniteSumProblem;
use crate::sampling::PrimalDistribution;
use crate::solver::SolverError;

pub mod corollary;
pub mod lyapunov;

pub use corollary::*;
pub use lyapunov::*;

/// Relative tolerance for `max_i L_i/(n p_i) = μ`.
pub const DEGENERATE_TOLERANCE: f64 = 1e-10;
/// In the incoherent degenerate branch any rate below the root is certified; we report
/// `root·(1 − DEGENERATE_SHRINK)`.
pub const DEGENERATE_SHRINK: f64 = 1e-9;
/// Upper bisection bracket is `min η − BRACKET_GUARD·min η`.
pub const BRACKET_GUARD: f64 = 1e-12;
/// Search interval for `δ` in the general minimax.
pub const DELTA_RANGE: (f64, f64) = (1e-8, 1e8);
/// Width of the final golden-section bracket on `log δ`.
pub const DELTA_TOLERANCE: f64 = 1e-10;
/// Fraction of a bound at which a certificate is reported as limited by it.
pub const LIMITING_FRACTION: f64 = 0.95;
const PROBABILITY_TOLERANCE: f64 = 1e-10;
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RateError {
    #[error("rate {rho} is outside the admissible range below {bound}")]
    RhoTooLarge { rho: f64, bound: f64 },
    #[error("step size {lambda} admits no convergent rate (largest certified step {lambda_max})")]
    NoConvergentRate { lambda: f64, lambda_max: f64 },
    #[error("coherent certificates need a single common update frequency")]
    NonUniformFrequency,
    #[error("inputs have inconsistent lengths or are empty")]
    LengthMismatch,
    #[error("{name} must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("update frequency {0} is outside (0, 1]")]
    InvalidFrequency(f64),
    #[error("sampling probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("max L_i/(n p_i) = {smoothness} is below mu = {mu}; the constants are inconsistent")]
    SmoothnessBelowMu { smoothness: f64, mu: f64 },
    #[error("mu = {mu} exceeds the mean Lipschitz constant {mean}")]
    MuExceedsMean { mu: f64, mean: f64 },
    #[error("no step size was given")]
    MissingStepSize,
    #[error("enumeration needs {0} outcomes, above the limit")]
    TooManyOutcomes(u128),
    #[error("the problem has no attached solution")]
    MissingSolution,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Constants entering the theorems: `L_i`, `μ`, `p_i`, `η_i`, coherence and the step size.
#[derive(Debug, Clone, PartialEq)]
pub struct RateInputs {
    pub lipschitz: Vec<f64>,
    pub mu: f64,
    pub p: Vec<f64>,
    pub eta: Vec<f64>,
    pub coherent: bool,
    pub lambda: Option<f64>,
}

impl RateInputs {
    pub fn new(lipschitz: Vec<f64>, mu: f64, p: Vec<f64>, eta: Vec<f64>, coherent: bool) -> Result<Self, RateError> {
        let inputs = RateInputs { lipschitz, mu, p, eta, coherent, lambda: None };
        inputs.validate()?;
        Ok(inputs)
    }

    /// Inputs for running `strategy` with sampling `dist` on constants `(L, μ)`.
    pub fn for_strategy(
        lipschitz: &[f64],
        mu: f64,
        dist: &PrimalDistribution,
        strategy: &DualStrategy,
    ) -> Result<Self, RateError> {
        Self::new(
            lipschitz.to_vec(),
            mu,
            dist.probabilities().to_vec(),
            strategy.expected_update_frequency(dist),
            strategy.is_coherent(),
        )
    }

    pub fn for_problem(
        problem: &FiniteSumProblem,
        dist: &PrimalDistribution,
        strategy: &DualStrategy,
    ) -> Result<Self, RateError> {
        Self::for_strategy(problem.lipschitz(), problem.mu(), dist, strategy)
    }

    pub fn with_step_size(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    fn validate(&self) -> Result<(), RateError> {
        let n = self.lipschitz.len();
        if n == 0 || self.p.len() != n || self.eta.len() != n {
            return Err(RateError::LengthMismatch);
        }
        positive("mu", self.mu)?;
        for &l in &self.lipschitz {
            positive("L_i", l)?;
        }
        for &p in &self.p {
            positive("p_i", p)?;
        }
        let total: f64 = self.p.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(RateError::NotNormalized(total));
        }
        if let Some(&e) = self.eta.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(RateError::InvalidFrequency(e));
        }
        if self.coherent {
            let (lo, hi) = min_max(&self.eta);
            if hi - lo > 1e-12 * hi {
                return Err(RateError::NonUniformFrequency);
            }
        }
        let m = self.max_sampled_smoothness();
        if m < self.mu * (1.0 - DEGENERATE_TOLERANCE) {
            return Err(RateError::SmoothnessBelowMu { smoothness: m, mu: self.mu });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.lipschitz.len()
    }

    /// `r_i = L_i/(n p_i)`.
    pub fn sampled_smoothness(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.lipschitz.iter().zip(&self.p).map(|(l, p)| l / (n * p)).collect()
    }

    pub fn max_sampled_smoothness(&self) -> f64 {
        self.sampled_smoothness().into_iter().fold(0.0, f64::max)
    }

    pub fn min_eta(&self) -> f64 {
        min_max(&self.eta).0
    }

    /// `max_i L_i/(n p_i) = μ` to [`DEGENERATE_TOLERANCE`].
    pub fn is_degenerate(&self) -> bool {
        self.max_sampled_smoothness() <= self.mu * (1.0 + DEGENERATE_TOLERANCE)
    }

    fn step_size(&self) -> Result<f64, RateError> {
        let lambda = self.lambda.ok_or(RateError::MissingStepSize)?;
        positive("lambda", lambda)?;
        Ok(lambda)
    }

    fn common_eta(&self) -> Result<f64, RateError> {
        let (lo, hi) = min_max(&self.eta);
        if hi - lo > 1e-12 * hi {
            return Err(RateError::NonUniformFrequency);
        }
        Ok(hi)
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), RateError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(RateError::NonPositive { name, value })
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// `ν(ρ)` and the minimizing `δ⋆` (absent in the degenerate branches).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuValue {
    pub nu: f64,
    pub delta: Option<f64>,
}

/// `ν(ρ) = min_δ max_i (1+1/δ) r_i η_i/(η_i−ρ) + (1+δ) r_i − δμ` with `r_i = L_i/(n p_i)`.
pub fn nu_incoherent(inputs: &RateInputs, rho: f64) -> Result<NuValue, RateError> {
    let eta_min = inputs.min_eta();
    if !(rho >= 0.0) || rho >= eta_min {
        return Err(RateError::RhoTooLarge { rho, bound: eta_min });
    }
    let mu = inputs.mu;
    if inputs.is_degenerate() {
        let m = inputs.eta.iter().map(|e| e / (e - rho)).fold(0.0, f64::max);
        return Ok(NuValue { nu: mu + mu * m, delta: None });
    }
    let b = inputs.sampled_smoothness();
    let a: Vec<f64> = b.iter().zip(&inputs.eta).map(|(r, e)| r * e / (e - rho)).collect();

    // one pass for the index with the largest b (ties by a)
    let mut star = 0;
    for i in 1..b.len() {
        if b[i] > b[star] || (b[i] == b[star] && a[i] > a[star]) {
            star = i;
        }
    }
    if a.iter().all(|&ai| ai <= a[star]) {
        let (a, b) = (a[star], b[star]);
        let nu = a + b + 2.0 * libm::sqrt(a * (b - mu));
        return Ok(NuValue { nu, delta: Some(libm::sqrt(a / (b - mu))) });
    }

    let objective = |t: f64| {
        let d = libm::exp(t);
        a.iter()
            .zip(&b)
            .map(|(ai, bi)| ai + bi + ai / d + d * (bi - mu))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let t = golden_section(objective, libm::log(DELTA_RANGE.0), libm::log(DELTA_RANGE.1), DELTA_TOLERANCE);
    Ok(NuValue { nu: objective(t), delta: Some(libm::exp(t)) })
}

/// Minimizer of a unimodal function on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    // the bracket may have collapsed onto an endpoint of the search range
    [lo, mid, hi].into_iter().fold(mid, |best, t| if f(t) < f(best) { t } else { best })
}

/// `ν(ρ) = μ + (M − μ)(1 + √(η/(η−ρ)))²` with `M = max_i L_i/(n p_i)`; `ν = μ` when `M = μ`.
pub fn nu_coherent(inputs: &RateInputs, rho: f64) -> Result<f64, RateError> {
    let eta = inputs.common_eta()?;
    if inputs.is_degenerate() {
        if !(rho >= 0.0) || rho > 1.0 {
            return Err(RateError::RhoTooLarge { rho, bound: 1.0 });
        }
        return Ok(inputs.mu);
    }
    if !(rho >= 0.0) || rho >= eta {
        return Err(RateError::RhoTooLarge { rho, bound: eta });
    }
    let s = 1.0 + libm::sqrt(eta / (eta - rho));
    Ok(inputs.mu + (inputs.max_sampled_smoothness() - inputs.mu) * s * s)
}

/// `ν(ρ)` from the theorem matching `inputs.coherent`.
pub fn nu(inputs: &RateInputs, rho: f64) -> Result<NuValue, RateError> {
    if inputs.coherent {
        let nu = nu_coherent(inputs, rho)?;
        let delta = if inputs.is_degenerate() {
            None
        } else {
            let eta = inputs.common_eta()?;
            Some(libm::sqrt(eta / (eta - rho)))
        };
        Ok(NuValue { nu, delta })
    } else {
        nu_incoherent(inputs, rho)
    }
}

/// `γ̂_i = λ²/(n² p_i) · 1/(η_i − ρ) · (1 + 1/δ)`. `δ = ∞` gives the weights of the degenerate branch.
pub fn lyapunov_weights_incoherent(inputs: &RateInputs, rho: f64, delta: f64) -> Result<Vec<f64>, RateError> {
    let lambda = inputs.step_size()?;
    let eta_min = inputs.min_eta();
    if !(rho >= 0.0) || rho >= eta_min {
        return Err(RateError::RhoTooLarge { rho, bound: eta_min });
    }
    if !(delta > 0.0) {
        return Err(RateError::NonPositive { name: "delta", value: delta });
    }
    let n2 = (inputs.n() * inputs.n()) as f64;
    Ok(inputs
        .p
        .iter()
        .zip(&inputs.eta)
        .map(|(p, e)| lambda * lambda / (n2 * p) / (e - rho) * (1.0 + 1.0 / delta))
        .collect())
}

/// `γ̂_i = λ²/(n² p_i) · 1/(η − ρ) · max(0, 1 − n p_i μ/L_i) · (1 + √((η−ρ)/η))`, all zero when degenerate.
pub fn lyapunov_weights_coherent(inputs: &RateInputs, rho: f64) -> Result<Vec<f64>, RateError> {
    let lambda = inputs.step_size()?;
    let eta = inputs.common_eta()?;
    if inputs.is_degenerate() {
        return Ok(vec![0.0; inputs.n()]);
    }
    if !(rho >= 0.0) || rho >= eta {
        return Err(RateError::RhoTooLarge { rho, bound: eta });
    }
    let n2 = (inputs.n() * inputs.n()) as f64;
    let tail = 1.0 + libm::sqrt((eta - rho) / eta);
    Ok(inputs
        .p
        .iter()
        .zip(inputs.sampled_smoothness())
        .map(|(p, r)| lambda * lambda / (n2 * p) / (eta - rho) * (1.0 - inputs.mu / r).max(0.0) * tail)
        .collect())
}

/// Meta-parameters `γ_i ≥ 0`, `δ > 0` of the Lyapunov terms. `δ = ∞` is the degenerate limit.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaParameters {
    pub gamma: Vec<f64>,
    pub delta: f64,
}

impl MetaParameters {
    /// `γ_i = 1/(η_i − ρ)` with the given `δ`.
    pub fn incoherent(inputs: &RateInputs, rho: f64, delta: f64) -> Self {
        MetaParameters { gamma: inputs.eta.iter().map(|e| 1.0 / (e - rho)).collect(), delta }
    }

    /// `γ_i = max(0, 1 − μ/r_i)/(η − ρ)`, `δ = √(η/(η−ρ))`; `γ = 0` when degenerate.
    pub fn coherent(inputs: &RateInputs, rho: f64) -> Self {
        let n = inputs.n();
        if inputs.is_degenerate() {
            return MetaParameters { gamma: vec![0.0; n], delta: 1.0 };
        }
        let eta = inputs.eta[0];
        let gamma = inputs
            .sampled_smoothness()
            .iter()
            .map(|r| (1.0 - inputs.mu / r).max(0.0) / (eta - rho))
            .collect();
        MetaParameters { gamma, delta: libm::sqrt(eta / (eta - rho)) }
    }

    /// `γ̂_i = γ_i (1 + 1/δ) λ²/(n² p_i)`.
    pub fn weights(&self, p: &[f64], lambda: f64) -> Vec<f64> {
        let n2 = (p.len() * p.len()) as f64;
        self.gamma
            .iter()
            .zip(p)
            .map(|(g, pi)| g * (1.0 + 1.0 / self.delta) * lambda * lambda / (n2 * pi))
            .collect()
    }
}

/// `max_i (1+1/δ) r_i η_i γ_i + (1+δ) r_i − δμ`, the constant of the primal contraction.
pub fn primal_contraction_nu(inputs: &RateInputs, meta: &MetaParameters) -> f64 {
    let mu = inputs.mu;
    let d = meta.delta;
    inputs
        .sampled_smoothness()
        .iter()
        .zip(&inputs.eta)
        .zip(&meta.gamma)
        .map(|((&r, &e), &g)| {
            if d.is_infinite() {
                let excess = if r > mu * (1.0 + DEGENERATE_TOLERANCE) { f64::INFINITY } else { 0.0 };
                r * e * g + r + excess
            } else {
                (1.0 + 1.0 / d) * r * e * g + (1.0 + d) * r - d * mu
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `ρ_P = μλ(2 − νλ)` with `ν` from [`primal_contraction_nu`].
pub fn primal_contraction(inputs: &RateInputs, meta: &MetaParameters, lambda: f64) -> f64 {
    let nu = primal_contraction_nu(inputs, meta);
    inputs.mu * lambda * (2.0 - nu * lambda)
}

/// `ρ_D = min_i η_i − 1/γ_i`; `−∞` if some `γ_i = 0`.
pub fn dual_contraction_incoherent(eta: &[f64], gamma: &[f64]) -> f64 {
    eta.iter()
        .zip(gamma)
        .map(|(e, g)| if *g > 0.0 { e - 1.0 / g } else { f64::NEG_INFINITY })
        .fold(f64::INFINITY, f64::min)
}

/// Coherent dual contraction: `η − (1 − μ/r_i)/γ_i` for `γ_i > 0`, and `1` for `γ_i = 0`
/// with `r_i ≤ μ`. Returns `−∞` when `γ_i = 0` but `r_i > μ` (the lemma does not apply).
pub fn dual_contraction_coherent(inputs: &RateInputs, gamma: &[f64]) -> f64 {
    let eta = inputs.eta[0];
    let mu = inputs.mu;
    inputs
        .sampled_smoothness()
        .iter()
        .zip(gamma)
        .map(|(&r, &g)| {
            if g > 0.0 {
                eta - (1.0 - mu / r) / g
            } else if r <= mu * (1.0 + DEGENERATE_TOLERANCE) {
                1.0
            } else {
                f64::NEG_INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitingSide {
    Primal,
    Dual,
    Balanced,
}

impl LimitingSide {
    pub fn as_str(self) -> &'static str {
        match self {
            LimitingSide::Primal => "primal",
            LimitingSide::Dual => "dual",
            LimitingSide::Balanced => "balanced",
        }
    }
}

/// A certified rate with everything needed to check it.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCertificate {
    /// Certified rate: `E[Lyapunov_k] = O((1 − rho)^k)`.
    pub rho: f64,
    /// Root of the fixed-point equation. Equals `rho` except in the incoherent degenerate
    /// branch, where `rho` sits just below it.
    pub root: f64,
    pub lambda: f64,
    pub mu: f64,
    /// `ν` at the root.
    pub nu: f64,
    pub delta_star: Option<f64>,
    pub gamma_hat: Vec<f64>,
    pub rho_primal: f64,
    pub rho_dual: f64,
    pub limiting_side: LimitingSide,
    pub coherent: bool,
    pub degenerate: bool,
}

impl RateCertificate {
    /// `root − μλ(2 − νλ)`.
    pub fn fixed_point_residual(&self) -> f64 {
        self.root - self.mu * self.lambda * (2.0 - self.nu * self.lambda)
    }
}

/// `λ_max = 2/ν(0)`: above it the fixed-point equation has no positive root.
pub fn max_step_size(inputs: &RateInputs) -> Result<f64, RateError> {
    Ok(2.0 / nu(inputs, 0.0)?.nu)
}

fn upper_bracket(inputs: &RateInputs) -> f64 {
    if inputs.coherent && inputs.is_degenerate() {
        1.0
    } else {
        let eta_min = inputs.min_eta();
        (eta_min - BRACKET_GUARD * eta_min).min(1.0)
    }
}

/// Largest point in `[0, hi]` known to satisfy `f ≤ 0`, given `f(0) < 0` and `f` increasing.
fn bisect_root(f: impl Fn(f64) -> Result<f64, RateError>, hi: f64) -> Result<f64, RateError> {
    if f(hi)? <= 0.0 {
        return Ok(hi);
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Rate for the step size in `inputs.lambda`: root of `ρ − μλ(2 − ν(ρ)λ)`.
pub fn solve_rate_fixed_step(inputs: &RateInputs) -> Result<RateCertificate, RateError> {
    let lambda = inputs.step_size()?;
    let mu = inputs.mu;
    let lambda_max = max_step_size(inputs)?;
    if lambda >= lambda_max {
        return Err(RateError::NoConvergentRate { lambda, lambda_max });
    }
    let root = if inputs.coherent && inputs.is_degenerate() {
        mu * lambda * (2.0 - mu * lambda)
    } else {
        bisect_root(|rho| Ok(rho - mu * lambda * (2.0 - nu(inputs, rho)?.nu * lambda)), upper_bracket(inputs))?
    };
    certificate(inputs, lambda, root)
}

/// Rate at the optimal step size `λ⋆ = 1/ν`: root of `ρ − μ/ν(ρ)`.
pub fn solve_optimal_rate(inputs: &RateInputs) -> Result<RateCertificate, RateError> {
    let mu = inputs.mu;
    if inputs.coherent && inputs.is_degenerate() {
        return certificate(inputs, 1.0 / mu, 1.0);
    }
    let root = bisect_root(|rho| Ok(rho - mu / nu(inputs, rho)?.nu), upper_bracket(inputs))?;
    let lambda = 1.0 / nu(inputs, root)?.nu;
    certificate(inputs, lambda, root)
}

fn certificate(inputs: &RateInputs, lambda: f64, root: f64) -> Result<RateCertificate, RateError> {
    let with_step = RateInputs { lambda: Some(lambda), ..inputs.clone() };
    let degenerate = inputs.is_degenerate();
    let value = nu(inputs, root)?;
    let (rho, meta, gamma_hat) = if inputs.coherent {
        let meta = MetaParameters::coherent(inputs, root);
        (root, meta, lyapunov_weights_coherent(&with_step, root)?)
    } else if degenerate {
        let rho = root * (1.0 - DEGENERATE_SHRINK);
        let meta = MetaParameters::incoherent(inputs, rho, f64::INFINITY);
        (rho, meta, lyapunov_weights_incoherent(&with_step, rho, f64::INFINITY)?)
    } else {
        let delta = value.delta.expect("non-degenerate branch has a minimizer");
        let meta = MetaParameters::incoherent(inputs, root, delta);
        (root, meta, lyapunov_weights_incoherent(&with_step, root, delta)?)
    };

    let rho_primal = primal_contraction(inputs, &meta, lambda);
    let rho_dual = if inputs.coherent {
        dual_contraction_coherent(inputs, &meta.gamma)
    } else {
        dual_contraction_incoherent(&inputs.eta, &meta.gamma)
    };
    let m = inputs.max_sampled_smoothness();
    let limiting_side = if !(inputs.coherent && degenerate) && rho >= LIMITING_FRACTION * inputs.min_eta() {
        LimitingSide::Dual
    } else if rho >= LIMITING_FRACTION * inputs.mu * lambda * (2.0 - m * lambda) {
        LimitingSide::Primal
    } else {
        LimitingSide::Balanced
    };
    Ok(RateCertificate {
        rho,
        root,
        lambda,
        mu: inputs.mu,
        nu: value.nu,
        delta_star: value.delta.filter(|_| !degenerate),
        gamma_hat,
        rho_primal,
        rho_dual,
        limiting_side,
        coherent: inputs.coherent,
        degenerate,
    })
}
