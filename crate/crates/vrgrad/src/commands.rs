//! The `rate`, `tune` and `solve` subcommands as library functions returning their output text.

use serde::Serialize;
use vrgrad_core::rates::corollary::{self, Method};
use vrgrad_core::rates::{solve_optimal_rate, RateCertificate, RateInputs};
use vrgrad_core::solver::{RunConfig, Trace};
use vrgrad_core::{DualStrategy, PrimalDistribution, StorageLayout};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::num;
use crate::runner::{aggregate, run_seeds, Summary};
use crate::setup::{self, Instance};

#[derive(Debug, Serialize)]
pub struct CertificateJson {
    pub rho: f64,
    pub root: f64,
    pub lambda: f64,
    pub nu: f64,
    pub delta_star: Option<f64>,
    pub gamma_hat: Vec<f64>,
    pub rho_primal: f64,
    pub rho_dual: f64,
    pub limiting_side: &'static str,
    pub coherent: bool,
    pub degenerate: bool,
    pub fixed_point_residual: f64,
}

impl From<&RateCertificate> for CertificateJson {
    fn from(c: &RateCertificate) -> Self {
        CertificateJson {
            rho: c.rho,
            root: c.root,
            lambda: c.lambda,
            nu: c.nu,
            delta_star: c.delta_star,
            gamma_hat: c.gamma_hat.clone(),
            rho_primal: c.rho_primal,
            rho_dual: c.rho_dual,
            limiting_side: c.limiting_side.as_str(),
            coherent: c.coherent,
            degenerate: c.degenerate,
            fixed_point_residual: c.fixed_point_residual(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BoundsJson {
    pub source: &'static str,
    /// Null when the closed form gives no maximal step.
    pub lambda_max: Option<f64>,
    pub lambda_star: f64,
    pub rho_star: f64,
}

#[derive(Debug, Serialize)]
pub struct RateReport {
    pub method: &'static str,
    pub sampling: &'static str,
    pub n: usize,
    pub mu: f64,
    pub mean_lipschitz: f64,
    pub max_lipschitz: f64,
    pub max_sampled_smoothness: f64,
    pub min_eta: f64,
    pub lambda_max: f64,
    pub certificate: CertificateJson,
    pub corollary: Option<BoundsJson>,
    pub literature: Option<BoundsJson>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn rate_report(cfg: &ExperimentConfig, instance: &Instance) -> Result<RateReport, CliError> {
    let plan = setup::plan(cfg, instance)?;
    let certificate = plan.certificate?;
    let (l, mu, n) = (&instance.lipschitz, instance.mu, instance.n());
    let eta = plan.inputs.min_eta();
    let corollary = setup::corollary_bounds(cfg.method, cfg.sampling, l, mu, eta)?.map(|b| BoundsJson {
        source: "corollary",
        lambda_max: finite(b.lambda_max),
        lambda_star: b.lambda_star,
        rho_star: b.rho_star,
    });
    let literature = setup::literature_bounds(cfg.method, l, mu, eta)?.map(|(source, b)| BoundsJson {
        source,
        lambda_max: finite(b.lambda_max),
        lambda_star: b.lambda_star,
        rho_star: b.rho_star,
    });
    Ok(RateReport {
        method: cfg.method.as_str(),
        sampling: cfg.sampling.as_str(),
        n,
        mu,
        mean_lipschitz: l.iter().sum::<f64>() / n as f64,
        max_lipschitz: l.iter().copied().fold(0.0, f64::max),
        max_sampled_smoothness: plan.inputs.max_sampled_smoothness(),
        min_eta: eta,
        lambda_max: plan.lambda_max,
        certificate: CertificateJson::from(&certificate),
        corollary,
        literature,
    })
}

/// Certificate of the configured method next to the matching closed forms, as pretty JSON.
pub fn cmd_rate(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let instance = setup::load_instance(cfg)?;
    let mut s = serde_json::to_string_pretty(&rate_report(cfg, &instance)?)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Serialize)]
pub struct TuneRow {
    pub method: &'static str,
    pub sampling: &'static str,
    pub eta_star: Option<f64>,
    pub corollary_complexity: f64,
    pub closed_form: f64,
    pub per_iteration_cost: f64,
    pub corollary_lambda_star: f64,
    pub theorem_lambda_star: f64,
    pub theorem_nu: f64,
    pub theorem_rho: f64,
    pub theorem_complexity: f64,
}

#[derive(Debug, Serialize)]
pub struct TuneReport {
    pub n: usize,
    pub mu: f64,
    pub mean_lipschitz: f64,
    pub kappa: f64,
    pub methods: Vec<TuneRow>,
}

fn theorem_at(l: &[f64], mu: f64, dist: &PrimalDistribution, strategy: DualStrategy) -> Result<RateCertificate, CliError> {
    Ok(solve_optimal_rate(&RateInputs::for_strategy(l, mu, dist, &strategy)?)?)
}

/// Recommended parameters of every method. SAGA uses the improved sampling; the others use
/// Lipschitz sampling at their recommended update frequency.
pub fn tune_report(instance: &Instance) -> Result<TuneReport, CliError> {
    let (l, mu, n) = (&instance.lipschitz[..], instance.mu, instance.n());
    let mean = l.iter().sum::<f64>() / n as f64;
    let lip = PrimalDistribution::lipschitz(l)?;
    let mut methods = Vec::new();

    let improved = corollary::saga_improved(l, mu)?;
    let saga = corollary::saga_complexity(l, mu)?;
    let cert = theorem_at(l, mu, &improved.distribution, DualStrategy::Saga)?;
    methods.push(TuneRow {
        method: "saga",
        sampling: "improved",
        eta_star: None,
        corollary_complexity: saga.total_complexity,
        closed_form: saga.closed_form,
        per_iteration_cost: 1.0,
        corollary_lambda_star: improved.lambda,
        theorem_lambda_star: cert.lambda,
        theorem_nu: cert.nu,
        theorem_rho: cert.rho,
        theorem_complexity: 1.0 / cert.rho,
    });

    for layout in [StorageLayout::FullTable, StorageLayout::Anchor] {
        let report = corollary::lsvrg_eta_star(l, mu, layout)?;
        let bounds = corollary::lsvrg_bounds(l, mu, report.eta_star, corollary::Sampling::Lipschitz)?;
        let cert = theorem_at(l, mu, &lip, DualStrategy::lsvrg(report.eta_star)?)?;
        methods.push(TuneRow {
            method: report.method,
            sampling: "lipschitz",
            eta_star: Some(report.eta_star),
            corollary_complexity: report.total_complexity,
            closed_form: report.closed_form,
            per_iteration_cost: report.per_iteration_cost,
            corollary_lambda_star: bounds.lambda_star,
            theorem_lambda_star: cert.lambda,
            theorem_nu: cert.nu,
            theorem_rho: cert.rho,
            theorem_complexity: report.per_iteration_cost / cert.rho,
        });
    }

    let report = corollary::qsaga_eta_star(l, mu)?;
    let bounds = corollary::qsaga_bounds(l, mu, report.eta_star, corollary::Sampling::Lipschitz)?;
    let cert = theorem_at(l, mu, &lip, DualStrategy::ilsvrg(report.eta_star)?)?;
    methods.push(TuneRow {
        method: report.method,
        sampling: "lipschitz",
        eta_star: Some(report.eta_star),
        corollary_complexity: report.total_complexity,
        closed_form: report.closed_form,
        per_iteration_cost: report.per_iteration_cost,
        corollary_lambda_star: bounds.lambda_star,
        theorem_lambda_star: cert.lambda,
        theorem_nu: cert.nu,
        theorem_rho: cert.rho,
        theorem_complexity: report.per_iteration_cost / cert.rho,
    });

    Ok(TuneReport { n, mu, mean_lipschitz: mean, kappa: mean / mu, methods })
}

/// Complexity curves over a log grid of update frequencies: corollary constant and
/// theorem-based cost per iteration over the optimal rate.
pub fn complexity_curve(instance: &Instance, points: usize) -> Result<String, CliError> {
    let (l, mu, n) = (&instance.lipschitz[..], instance.mu, instance.n());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "eta", "corollary_complexity", "theorem_complexity"])?;
    for eta in corollary::log_grid(0.01 / n as f64, 1.0, points) {
        for method in [Method::Lsvrg(StorageLayout::FullTable), Method::Lsvrg(StorageLayout::Anchor), Method::Qsaga] {
            let closed = match method {
                Method::Lsvrg(layout) => corollary::lsvrg_complexity(l, mu, eta, layout)?,
                _ => corollary::qsaga_complexity(l, mu, eta)?,
            };
            let theorem = corollary::theorem_complexity(l, mu, eta, method)?;
            w.write_record([method.label().to_string(), num(eta), num(closed), num(theorem)])?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?).expect("csv output is UTF-8"))
}

/// JSON report, plus the complexity curve CSV.
pub fn cmd_tune(cfg: &ExperimentConfig) -> Result<(String, String), CliError> {
    let instance = setup::load_instance(cfg)?;
    let mut s = serde_json::to_string_pretty(&tune_report(&instance)?)?;
    s.push('\n');
    Ok((s, complexity_curve(&instance, cfg.curve_points)?))
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One row per recorded iterate: `k,grad_evals,dist2,lyapunov,objective`.
pub fn trace_csv(trace: &Trace) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "grad_evals", "dist2", "lyapunov", "objective"])?;
    for r in &trace.rows {
        w.write_record([r.k.to_string(), r.grad_evals.to_string(), opt(r.dist2), opt(r.lyapunov), num(r.objective)])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?).expect("csv output is UTF-8"))
}

fn summary_cells(s: Option<Summary>) -> [String; 3] {
    match s {
        Some(s) => [num(s.mean), num(s.p5), num(s.p95)],
        None => Default::default(),
    }
}

/// Mean and 5th/95th percentiles over runs.
pub fn aggregate_csv(traces: &[Trace]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k".to_string(), "grad_evals_mean".to_string()];
    for col in ["dist2", "lyapunov", "objective"] {
        for stat in ["mean", "p5", "p95"] {
            header.push(format!("{col}_{stat}"));
        }
    }
    w.write_record(&header)?;
    for row in aggregate(traces) {
        let mut rec = vec![row.k.to_string(), num(row.grad_evals)];
        rec.extend(summary_cells(row.dist2));
        rec.extend(summary_cells(row.lyapunov));
        rec.extend(summary_cells(Some(row.objective)));
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?).expect("csv output is UTF-8"))
}

/// Runs the configured method for every seed and returns the CSV trace.
///
/// The Lyapunov column is filled when the step size has a certificate and `x⋆` is known.
pub fn cmd_solve(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<String, CliError> {
    let instance = setup::load_instance(cfg)?;
    let problem = instance.require_problem()?;
    let plan = setup::plan(cfg, &instance)?;
    let weights = match (&plan.certificate, problem.solution()) {
        (Ok(c), Some(_)) => Some(c.gamma_hat.clone()),
        _ => None,
    };
    let mut run = RunConfig::new(problem, &plan.distribution, plan.strategy, plan.lambda);
    run.layout = cfg.layout;
    run.iterations = cfg.iterations;
    run.record_every = cfg.record_every;
    run.lyapunov_weights = weights;
    let traces = run_seeds(pool, &run, &cfg.run_seeds())?;
    if traces.len() == 1 {
        trace_csv(&traces[0])
    } else {
        aggregate_csv(&traces)
    }
}
