//! The PVRSG iteration: a stochastic proximal-gradient primal step followed by a
//! refresh of a random subset of the dual variables.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dual::{DualError, DualStorage, DualStrategy, StorageLayout, UpdateSet};
use crate::linalg;
use crate::problems::FiniteSumProblem;
use crate::sampling::PrimalDistribution;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("iterate became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("step size must be positive and finite, got {0}")]
    InvalidStepSize(f64),
    #[error("distribution has {found} outcomes but the problem has {expected} components")]
    SizeMismatch { expected: usize, found: usize },
    #[error("Lyapunov recording needs a known solution")]
    MissingSolution,
    #[error("initial point has dimension {found}, expected {expected}")]
    InitialPoint { expected: usize, found: usize },
    #[error(transparent)]
    Dual(#[from] DualError),
}

/// Everything that defines one run. The run is a pure function of this value.
#[derive(Debug, Clone)]
pub struct RunConfig<'a> {
    pub problem: &'a FiniteSumProblem,
    pub distribution: &'a PrimalDistribution,
    pub strategy: DualStrategy,
    pub layout: StorageLayout,
    pub step_size: f64,
    pub iterations: usize,
    pub seed: u64,
    /// A trace row is written every `record_every` iterations (and at the end).
    pub record_every: usize,
    /// Weights `γ̂_i` of the Lyapunov function; needs `problem.solution()`.
    pub lyapunov_weights: Option<Vec<f64>>,
    /// Defaults to the origin.
    pub initial_point: Option<Vec<f64>>,
}

impl<'a> RunConfig<'a> {
    pub fn new(
        problem: &'a FiniteSumProblem,
        distribution: &'a PrimalDistribution,
        strategy: DualStrategy,
        step_size: f64,
    ) -> Self {
        RunConfig {
            problem,
            distribution,
            strategy,
            layout: StorageLayout::FullTable,
            step_size,
            iterations: 0,
            seed: 0,
            record_every: 1,
            lyapunov_weights: None,
            initial_point: None,
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(SolverError::InvalidStepSize(self.step_size));
        }
        if self.distribution.len() != self.problem.n() {
            return Err(SolverError::SizeMismatch { expected: self.problem.n(), found: self.distribution.len() });
        }
        if let Some(w) = &self.lyapunov_weights {
            if self.problem.solution().is_none() {
                return Err(SolverError::MissingSolution);
            }
            if w.len() != self.problem.n() {
                return Err(SolverError::SizeMismatch { expected: self.problem.n(), found: w.len() });
            }
        }
        if let Some(x0) = &self.initial_point {
            if x0.len() != self.problem.dim() {
                return Err(SolverError::InitialPoint { expected: self.problem.dim(), found: x0.len() });
            }
        }
        Ok(())
    }
}

/// Primal iterate, dual storage, counters and the random stream of one run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub dual: DualStorage,
    pub k: usize,
    pub grad_evals: u64,
    rng: ChaCha8Rng,
    scratch: Scratch,
}

#[derive(Debug, Clone)]
struct Scratch {
    grad: Vec<f64>,
    dual: Vec<f64>,
    z: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Scratch { grad: vec![0.0; dim], dual: vec![0.0; dim], z: vec![0.0; dim] }
    }
}

impl SolverState {
    /// Starts at `x⁰` with every dual variable refreshed there (`n` evaluations, counted).
    pub fn new(cfg: &RunConfig<'_>) -> Result<Self, SolverError> {
        cfg.validate()?;
        let x = cfg.initial_point.clone().unwrap_or_else(|| vec![0.0; cfg.problem.dim()]);
        let (dual, evals) = DualStorage::coherent_at(cfg.problem, cfg.layout, &x);
        Ok(Self::from_parts(cfg.problem, x, dual, evals as u64, cfg.seed))
    }

    /// Assembles a state from explicit parts (used by tests and the enumeration oracle).
    pub fn from_parts(problem: &FiniteSumProblem, x: Vec<f64>, dual: DualStorage, grad_evals: u64, seed: u64) -> Self {
        SolverState {
            x,
            dual,
            k: 0,
            grad_evals,
            rng: ChaCha8Rng::seed_from_u64(seed),
            scratch: Scratch::new(problem.dim()),
        }
    }

    /// One iteration with freshly drawn `I^k` and `U^k`.
    pub fn step(&mut self, cfg: &RunConfig<'_>) -> Result<(), SolverError> {
        let n = cfg.problem.n();
        let i = cfg.distribution.draw(&mut self.rng);
        let set = cfg.strategy.draw_update_set(n, i, &mut self.rng);
        self.transition(cfg.problem, cfg.distribution, cfg.step_size, i, &set)
    }

    /// Deterministic transition for a given primal index and update set.
    ///
    /// The dual refresh uses gradients at the current iterate `x^k`, and `∇f_i(x^k)`
    /// is computed once for both the estimator and the refresh.
    pub fn transition(
        &mut self,
        problem: &FiniteSumProblem,
        distribution: &PrimalDistribution,
        step_size: f64,
        i: usize,
        set: &UpdateSet,
    ) -> Result<(), SolverError> {
        let n = problem.n() as f64;
        let s = &mut self.scratch;
        problem.gradient_component_into(i, &self.x, &mut s.grad);
        let mut evals = 1 + self.dual.read_into(problem, i, &mut s.dual);

        let weight = 1.0 / distribution.p(i);
        let sum = self.dual.sum();
        let c = step_size / n;
        for d in 0..self.x.len() {
            s.z[d] = self.x[d] - c * (weight * (s.grad[d] - s.dual[d]) + sum[d]);
        }
        problem.prox().apply_in_place(step_size, &mut s.z);

        evals += self.dual.apply_update(problem, set, &self.x, Some((i, &s.grad)))?;
        core::mem::swap(&mut self.x, &mut s.z);
        self.k += 1;
        self.grad_evals += evals as u64;
        if !linalg::all_finite(&self.x) {
            return Err(SolverError::NonFinite { iteration: self.k });
        }
        Ok(())
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }
}

/// One recorded point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub grad_evals: u64,
    /// `‖x^k − x⋆‖²` when the optimum is known.
    pub dist2: Option<f64>,
    pub lyapunov: Option<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

/// Lyapunov value `‖x − x⋆‖² + Σ γ̂_i ‖y_i − y⋆_i‖²` with the targets precomputed.
#[derive(Debug, Clone)]
pub struct LyapunovRecorder {
    x_star: Vec<f64>,
    y_star: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl LyapunovRecorder {
    pub fn new(problem: &FiniteSumProblem, weights: Vec<f64>) -> Result<Self, SolverError> {
        let x_star = problem.solution().ok_or(SolverError::MissingSolution)?.to_vec();
        let y_star = (0..problem.n())
            .map(|i| {
                let mut g = vec![0.0; problem.dim()];
                problem.gradient_component_into(i, &x_star, &mut g);
                g
            })
            .collect();
        Ok(LyapunovRecorder { x_star, y_star, weights })
    }

    pub fn value(&self, problem: &FiniteSumProblem, state: &SolverState) -> f64 {
        let mut total = linalg::dist2(&state.x, &self.x_star);
        if self.weights.iter().all(|&w| w == 0.0) {
            return total;
        }
        let mut y = vec![0.0; problem.dim()];
        for (i, w) in self.weights.iter().enumerate() {
            if *w != 0.0 {
                state.dual.read_into(problem, i, &mut y);
                total += w * linalg::dist2(&y, &self.y_star[i]);
            }
        }
        total
    }
}

fn record(
    cfg: &RunConfig<'_>,
    state: &SolverState,
    lyapunov: Option<&LyapunovRecorder>,
) -> TraceRow {
    TraceRow {
        k: state.k,
        grad_evals: state.grad_evals,
        dist2: cfg.problem.solution().map(|xs| linalg::dist2(&state.x, xs)),
        lyapunov: lyapunov.map(|l| l.value(cfg.problem, state)),
        objective: cfg.problem.objective(&state.x),
    }
}

/// Runs `cfg.iterations` steps and records a trace. Identical configs give identical traces.
pub fn run(cfg: &RunConfig<'_>) -> Result<Trace, SolverError> {
    let mut state = SolverState::new(cfg)?;
    let lyapunov = match &cfg.lyapunov_weights {
        Some(w) => Some(LyapunovRecorder::new(cfg.problem, w.clone())?),
        None => None,
    };
    let every = cfg.record_every.max(1);
    let mut rows = Vec::with_capacity(cfg.iterations / every + 2);
    rows.push(record(cfg, &state, lyapunov.as_ref()));
    for _ in 0..cfg.iterations {
        state.step(cfg)?;
        if state.k % every == 0 || state.k == cfg.iterations {
            rows.push(record(cfg, &state, lyapunov.as_ref()));
        }
    }
    Ok(Trace { rows })
}

/// `(1/(n p_i))(∇f_i(x) − y_i) + (1/n) Σ_j y_j`, the unbiased estimate of `∇F(x)`.
pub fn gradient_estimate(
    problem: &FiniteSumProblem,
    distribution: &PrimalDistribution,
    x: &[f64],
    dual: &DualStorage,
    i: usize,
) -> Vec<f64> {
    let n = problem.n() as f64;
    let dim = problem.dim();
    let mut g = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    problem.gradient_component_into(i, x, &mut g);
    dual.read_into(problem, i, &mut y);
    let w = 1.0 / (n * distribution.p(i));
    (0..dim).map(|d| w * (g[d] - y[d]) + dual.sum()[d] / n).collect()
}

/// Empirical variance `mean ‖X − mean X‖²` of the gradient estimate over `samples` fresh draws
/// of the primal index. Uses a copy of the state's random stream; the state is not advanced.
pub fn estimator_variance_probe(state: &SolverState, cfg: &RunConfig<'_>, samples: usize) -> f64 {
    let samples = samples.max(1);
    let mut rng = state.rng.clone();
    let draws: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let i = cfg.distribution.draw(&mut rng);
            gradient_estimate(cfg.problem, cfg.distribution, &state.x, &state.dual, i)
        })
        .collect();
    let dim = cfg.problem.dim();
    let mut mean = vec![0.0; dim];
    for d in &draws {
        linalg::axpy(1.0 / samples as f64, d, &mut mean);
    }
    draws.iter().map(|d| linalg::dist2(d, &mean)).sum::<f64>() / samples as f64
}
