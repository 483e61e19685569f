//! Turns a config into a problem, a sampling, a dual strategy and a step size.

use std::fs::File;
use std::io::BufReader;

use vrgrad_core::rates::corollary::{self, Method, Sampling, StepBounds};
use vrgrad_core::rates::{max_step_size, solve_optimal_rate, solve_rate_fixed_step, RateCertificate, RateInputs};
use vrgrad_core::{DualStrategy, FiniteSumProblem, PrimalDistribution, StorageLayout};

use crate::config::{ExperimentConfig, MethodName, ProblemSource, SamplingChoice, StepChoice};
use crate::data::{self, drop_zero_columns, parse_libsvm, tune_l1_for_sparsity};
use crate::error::CliError;

/// Tolerance and iteration cap used to attach `x⋆` to LibSVM problems.
pub const REFERENCE_TOL: f64 = 1e-12;
pub const REFERENCE_MAX_ITER: usize = 2_000_000;

/// Constants of an instance, plus the problem itself when one exists.
pub struct Instance {
    pub problem: Option<FiniteSumProblem>,
    pub lipschitz: Vec<f64>,
    pub mu: f64,
    /// `ξ` actually used (after tuning, if any).
    pub xi: f64,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.lipschitz.len()
    }

    pub fn require_problem(&self) -> Result<&FiniteSumProblem, CliError> {
        self.problem.as_ref().ok_or_else(|| CliError::Input("this command needs a problem, not only constants".into()))
    }

    fn from_problem(problem: FiniteSumProblem, xi: f64) -> Self {
        Instance { lipschitz: problem.lipschitz().to_vec(), mu: problem.mu(), problem: Some(problem), xi }
    }
}

/// Least squares (lasso when `xi > 0`) from a LibSVM file, with zero columns dropped and `x⋆` attached.
pub fn load_libsvm(path: &std::path::Path, xi: f64, sparsity: Option<(f64, f64)>) -> Result<Instance, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let (dataset, _) = drop_zero_columns(&parse_libsvm(BufReader::new(file))?);
    let xi = match sparsity {
        Some(band) => tune_l1_for_sparsity(&dataset.sparse_rows(), &dataset.labels, dataset.n_features, band)?.xi,
        None => xi,
    };
    let (problem, _) = data::to_problem(&dataset, xi)?.solve_and_attach(REFERENCE_TOL, REFERENCE_MAX_ITER);
    Ok(Instance::from_problem(problem, xi))
}

pub fn load_instance(cfg: &ExperimentConfig) -> Result<Instance, CliError> {
    match &cfg.problem {
        ProblemSource::Synthetic1d { n, data_seed } => {
            let (problem, _, _) = data::generate_1d_least_squares(*n, *data_seed)?;
            Ok(Instance::from_problem(problem, 0.0))
        }
        ProblemSource::Constants { n, kappa, data_seed } => {
            let (lipschitz, mu) = data::generate_constants(*n, *kappa, *data_seed);
            Ok(Instance { problem: None, lipschitz, mu, xi: 0.0 })
        }
        ProblemSource::Libsvm { path } => load_libsvm(path, cfg.xi, cfg.sparsity),
    }
}

pub fn distribution(sampling: SamplingChoice, lipschitz: &[f64], mu: f64) -> Result<PrimalDistribution, CliError> {
    Ok(match sampling {
        SamplingChoice::Uniform => PrimalDistribution::uniform(lipschitz.len())?,
        SamplingChoice::Lipschitz => PrimalDistribution::lipschitz(lipschitz)?,
        SamplingChoice::Improved => PrimalDistribution::improved_saga(lipschitz, mu)?.0,
    })
}

/// Update frequency: `eta`, else `1/n`.
pub fn frequency(cfg: &ExperimentConfig, n: usize) -> f64 {
    cfg.eta.unwrap_or(1.0 / n as f64)
}

pub fn strategy(cfg: &ExperimentConfig, n: usize) -> Result<DualStrategy, CliError> {
    let eta = frequency(cfg, n);
    Ok(match cfg.method {
        MethodName::Saga => DualStrategy::Saga,
        MethodName::Lsvrg => DualStrategy::lsvrg(eta)?,
        MethodName::Ilsvrg => DualStrategy::ilsvrg(eta)?,
        MethodName::Qsaga => match cfg.q {
            Some(q) => DualStrategy::qsaga(q, n, cfg.replacement)?,
            None => DualStrategy::qsaga_for_frequency(eta, n, cfg.replacement)?,
        },
    })
}

pub fn corollary_method(method: MethodName, layout: StorageLayout) -> Method {
    match method {
        MethodName::Saga => Method::Saga,
        MethodName::Lsvrg => Method::Lsvrg(layout),
        MethodName::Ilsvrg | MethodName::Qsaga => Method::Qsaga,
    }
}

/// Closed-form step bounds for the configured method and sampling, where a corollary covers them.
/// For improved SAGA sampling only `λ⋆` is known and `lambda_max` is reported as NaN.
pub fn corollary_bounds(
    method: MethodName,
    sampling: SamplingChoice,
    lipschitz: &[f64],
    mu: f64,
    eta: f64,
) -> Result<Option<StepBounds>, CliError> {
    let s = match sampling {
        SamplingChoice::Uniform => Sampling::Uniform,
        SamplingChoice::Lipschitz => Sampling::Lipschitz,
        SamplingChoice::Improved => {
            if method != MethodName::Saga {
                return Ok(None);
            }
            let imp = corollary::saga_improved(lipschitz, mu)?;
            return Ok(Some(StepBounds { lambda_max: f64::NAN, lambda_star: imp.lambda, rho_star: imp.rho }));
        }
    };
    Ok(Some(match method {
        MethodName::Saga => corollary::saga_bounds(lipschitz, mu, s)?,
        MethodName::Lsvrg => corollary::lsvrg_bounds(lipschitz, mu, eta, s)?,
        MethodName::Ilsvrg | MethodName::Qsaga => corollary::qsaga_bounds(lipschitz, mu, eta, s)?,
    }))
}

/// The literature row with which the tables compare (uniform sampling), if there is one.
pub fn literature_bounds(
    method: MethodName,
    lipschitz: &[f64],
    mu: f64,
    eta: f64,
) -> Result<Option<(&'static str, StepBounds)>, CliError> {
    Ok(match method {
        MethodName::Saga => Some(("hofmann-saga", corollary::reference_saga_bounds(lipschitz, mu)?)),
        MethodName::Lsvrg => Some(("hofmann-lsvrg", corollary::reference_lsvrg_bounds(lipschitz, mu, eta)?)),
        MethodName::Ilsvrg | MethodName::Qsaga => None,
    })
}

/// Everything needed to run or certify the configured method.
pub struct Plan {
    pub distribution: PrimalDistribution,
    pub strategy: DualStrategy,
    pub inputs: RateInputs,
    pub lambda: f64,
    pub lambda_max: f64,
    pub certificate: Result<RateCertificate, CliError>,
}

pub fn plan(cfg: &ExperimentConfig, instance: &Instance) -> Result<Plan, CliError> {
    let (l, mu, n) = (&instance.lipschitz, instance.mu, instance.n());
    let distribution = distribution(cfg.sampling, l, mu)?;
    let strategy = strategy(cfg, n)?;
    let inputs = RateInputs::for_strategy(l, mu, &distribution, &strategy)?;
    let lambda_max = max_step_size(&inputs)?;
    let optimal = solve_optimal_rate(&inputs)?;
    let lambda = match cfg.step {
        StepChoice::Explicit(v) => v,
        StepChoice::Star => optimal.lambda,
        StepChoice::Max => lambda_max,
        StepChoice::MultipleOfMax(f) => f * lambda_max,
        StepChoice::Corollary => {
            corollary_bounds(cfg.method, cfg.sampling, l, mu, strategy.expected_update_frequency(&distribution)[0])?
                .ok_or_else(|| {
                    CliError::Input(format!(
                        "no closed-form step for {} with {} sampling",
                        cfg.method.as_str(),
                        cfg.sampling.as_str()
                    ))
                })?
                .lambda_star
        }
    };
    let certificate = if cfg.step == StepChoice::Star {
        Ok(optimal)
    } else {
        solve_rate_fixed_step(&inputs.clone().with_step_size(lambda)).map_err(CliError::from)
    };
    Ok(Plan { distribution, strategy, inputs, lambda, lambda_max, certificate })
}
