//! Data series behind the figures, each written with a manifest that reproduces it.

use std::fmt::Write as _;
use std::path::Path;

use vrgrad_core::rates::corollary::{self, Method, Sampling};
use vrgrad_core::rates::{solve_rate_fixed_step, RateInputs};
use vrgrad_core::solver::RunConfig;
use vrgrad_core::{DualStrategy, PrimalDistribution, StorageLayout};

use crate::config::{ExperimentConfig, MethodName, ProblemSource, SamplingChoice, StepChoice};
use crate::data;
use crate::error::CliError;
use crate::num;
use crate::runner::{aggregate, run_seeds, AggregateRow};
use crate::setup::{self, Instance};

pub const EXPERIMENTS: &[&str] =
    &["fig1", "fig2", "fig3_saga", "fig3_lsvrg", "fig3_qsaga", "fig3_ilsvrg", "libsvm_lasso"];

pub const FIG1_KAPPAS: [f64; 5] = [2.0, 5.0, 10.0, 30.0, 100.0];
pub const FIG1_NS: [usize; 2] = [50, 1000];
/// `(n, κ)` of the two complexity panels.
pub const FIG2_INSTANCES: [(usize, f64); 2] = [(10_000, 2.0), (50, 100.0)];

/// Output files by name. `manifest.txt` is a config that regenerates the rest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bundle {
    pub files: Vec<(String, String)>,
}

impl Bundle {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

/// Settings an experiment starts from before the user's config is applied.
pub fn defaults(name: &str) -> Result<ExperimentConfig, CliError> {
    let mut c = ExperimentConfig { experiment: Some(name.to_string()), ..ExperimentConfig::default() };
    match name {
        "fig1" | "fig2" => {}
        n if n.starts_with("fig3_") && EXPERIMENTS.contains(&n) => {
            c.seeds = 1000;
            c.iterations = 3000;
            c.record_every = 10;
            c.method = match n {
                "fig3_saga" => MethodName::Saga,
                "fig3_lsvrg" => MethodName::Lsvrg,
                "fig3_qsaga" => MethodName::Qsaga,
                _ => MethodName::Ilsvrg,
            };
        }
        "libsvm_lasso" => {
            c.sparsity = Some((0.15, 0.20));
            c.iterations = 100_000;
            c.record_every = 1000;
        }
        other => return Err(CliError::Input(format!("unknown experiment `{other}`; expected one of {EXPERIMENTS:?}"))),
    }
    Ok(c)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?).expect("csv output is UTF-8"))
}

fn data_seed(cfg: &ExperimentConfig) -> u64 {
    match cfg.problem {
        ProblemSource::Synthetic1d { data_seed, .. } | ProblemSource::Constants { data_seed, .. } => data_seed,
        ProblemSource::Libsvm { .. } => 0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Row {
    pub method: &'static str,
    pub sampling: &'static str,
    pub kappa: f64,
    pub n: usize,
    pub lambda: f64,
    pub rho_corollary: f64,
    pub rho_theorem: f64,
    pub relative_error: f64,
}

/// Closed-form rates against the theorem rate at the same step size, over the `(κ, n)` grid.
/// L-SVRG uses `η = 1/n`.
pub fn fig1_rows(data_seed: u64) -> Result<Vec<Fig1Row>, CliError> {
    let mut rows = Vec::new();
    for &n in &FIG1_NS {
        for &kappa in &FIG1_KAPPAS {
            let (l, mu) = data::generate_constants(n, kappa, data_seed);
            let eta = 1.0 / n as f64;
            let uniform = PrimalDistribution::uniform(n)?;
            let lipschitz = PrimalDistribution::lipschitz(&l)?;
            let improved = corollary::saga_improved(&l, mu)?;
            let lsvrg = DualStrategy::lsvrg(eta)?;
            let cases = [
                ("saga", "uniform", &uniform, DualStrategy::Saga, corollary::saga_bounds(&l, mu, Sampling::Uniform)?.lambda_star),
                ("saga", "lipschitz", &lipschitz, DualStrategy::Saga, corollary::saga_bounds(&l, mu, Sampling::Lipschitz)?.lambda_star),
                ("saga", "improved", &improved.distribution, DualStrategy::Saga, improved.lambda),
                ("lsvrg", "uniform", &uniform, lsvrg, corollary::lsvrg_bounds(&l, mu, eta, Sampling::Uniform)?.lambda_star),
                ("lsvrg", "lipschitz", &lipschitz, lsvrg, corollary::lsvrg_bounds(&l, mu, eta, Sampling::Lipschitz)?.lambda_star),
            ];
            for (method, sampling, dist, strategy, lambda) in cases {
                let inputs = RateInputs::for_strategy(&l, mu, dist, &strategy)?.with_step_size(lambda);
                let rho_theorem = solve_rate_fixed_step(&inputs)?.rho;
                let rho_corollary = mu * lambda;
                rows.push(Fig1Row {
                    method,
                    sampling,
                    kappa,
                    n,
                    lambda,
                    rho_corollary,
                    rho_theorem,
                    relative_error: (rho_theorem - rho_corollary) / rho_theorem,
                });
            }
        }
    }
    Ok(rows)
}

fn fig1(cfg: &ExperimentConfig) -> Result<Bundle, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "sampling", "kappa", "n", "lambda", "rho_corollary", "rho_theorem", "relative_error"])?;
    for r in fig1_rows(data_seed(cfg))? {
        w.write_record([
            r.method.to_string(),
            r.sampling.to_string(),
            num(r.kappa),
            r.n.to_string(),
            num(r.lambda),
            num(r.rho_corollary),
            num(r.rho_theorem),
            num(r.relative_error),
        ])?;
    }
    Ok(Bundle { files: vec![("fig1.csv".into(), csv_string(w)?), ("manifest.txt".into(), cfg.render())] })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Marker {
    pub n: usize,
    pub kappa: f64,
    pub method: &'static str,
    pub eta_star: f64,
    pub corollary_complexity: f64,
    pub theorem_complexity: f64,
    pub grid_min: f64,
    pub grid_argmin: f64,
}

impl Fig2Marker {
    /// Theorem complexity at the recommended frequency over the best grid value.
    pub fn ratio(&self) -> f64 {
        self.theorem_complexity / self.grid_min
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Fig2 {
    /// `(n, κ, method, η, corollary complexity, theorem complexity)`.
    pub curves: Vec<(usize, f64, &'static str, f64, f64, f64)>,
    pub markers: Vec<Fig2Marker>,
}

/// Complexity against update frequency on a log grid over `[0.01/n, 1]`, with the
/// recommended frequencies marked. SAGA appears as a single marker.
pub fn fig2_data(data_seed: u64, points: usize) -> Result<Fig2, CliError> {
    let mut out = Fig2::default();
    for &(n, kappa) in &FIG2_INSTANCES {
        let (l, mu) = data::generate_constants(n, kappa, data_seed);
        let grid = corollary::log_grid(0.01 / n as f64, 1.0, points);
        for method in [Method::Lsvrg(StorageLayout::FullTable), Method::Lsvrg(StorageLayout::Anchor), Method::Qsaga] {
            let mut best = (f64::INFINITY, f64::NAN);
            for &eta in &grid {
                let closed = match method {
                    Method::Lsvrg(layout) => corollary::lsvrg_complexity(&l, mu, eta, layout)?,
                    _ => corollary::qsaga_complexity(&l, mu, eta)?,
                };
                let theorem = corollary::theorem_complexity(&l, mu, eta, method)?;
                if theorem < best.0 {
                    best = (theorem, eta);
                }
                out.curves.push((n, kappa, method.label(), eta, closed, theorem));
            }
            let report = match method {
                Method::Lsvrg(layout) => corollary::lsvrg_eta_star(&l, mu, layout)?,
                _ => corollary::qsaga_eta_star(&l, mu)?,
            };
            out.markers.push(Fig2Marker {
                n,
                kappa,
                method: method.label(),
                eta_star: report.eta_star,
                corollary_complexity: report.total_complexity,
                theorem_complexity: corollary::theorem_complexity(&l, mu, report.eta_star, method)?,
                grid_min: best.0,
                grid_argmin: best.1,
            });
        }
        let saga = corollary::saga_complexity(&l, mu)?;
        let improved = corollary::saga_improved(&l, mu)?;
        let inputs = RateInputs::for_strategy(&l, mu, &improved.distribution, &DualStrategy::Saga)?;
        let theorem = 1.0 / vrgrad_core::rates::solve_optimal_rate(&inputs)?.rho;
        out.markers.push(Fig2Marker {
            n,
            kappa,
            method: "saga",
            eta_star: f64::NAN,
            corollary_complexity: saga.total_complexity,
            theorem_complexity: theorem,
            grid_min: theorem,
            grid_argmin: f64::NAN,
        });
    }
    Ok(out)
}

fn fig2(cfg: &ExperimentConfig) -> Result<Bundle, CliError> {
    let data = fig2_data(data_seed(cfg), cfg.curve_points)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "kappa", "method", "eta", "corollary_complexity", "theorem_complexity"])?;
    for (n, kappa, method, eta, closed, theorem) in &data.curves {
        w.write_record([n.to_string(), num(*kappa), method.to_string(), num(*eta), num(*closed), num(*theorem)])?;
    }
    let curves = csv_string(w)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "kappa", "method", "eta_star", "corollary_complexity", "theorem_complexity", "grid_min", "grid_argmin"])?;
    for m in &data.markers {
        let cell = |v: f64| if v.is_finite() { num(v) } else { String::new() };
        w.write_record([
            m.n.to_string(),
            num(m.kappa),
            m.method.to_string(),
            cell(m.eta_star),
            num(m.corollary_complexity),
            num(m.theorem_complexity),
            num(m.grid_min),
            cell(m.grid_argmin),
        ])?;
    }
    Ok(Bundle {
        files: vec![
            ("fig2_curves.csv".into(), curves),
            ("fig2_markers.csv".into(), csv_string(w)?),
            ("manifest.txt".into(), cfg.render()),
        ],
    })
}

/// One averaged run configuration with its certified rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub lambda: f64,
    pub rho: Option<f64>,
    pub rows: Vec<AggregateRow>,
}

impl Series {
    /// `(k, mean Lyapunov)` points.
    pub fn mean_lyapunov(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| r.lyapunov.map(|s| (r.k as f64, s.mean))).collect()
    }

    /// `initial · (1 − ρ)^k`.
    pub fn predicted(&self, k: usize) -> Option<f64> {
        let initial = self.rows.first()?.lyapunov?.mean;
        Some(initial * (1.0 - self.rho?).powi(k as i32))
    }
}

/// Runs `cfg` (method, sampling, step, frequency) on the instance over all seeds, from `x⁰ = 0`.
pub fn run_series(cfg: &ExperimentConfig, instance: &Instance, pool: &rayon::ThreadPool) -> Result<Series, CliError> {
    let problem = instance.require_problem()?;
    let plan = setup::plan(cfg, instance)?;
    let certificate = plan.certificate.ok();
    let mut run = RunConfig::new(problem, &plan.distribution, plan.strategy, plan.lambda);
    run.layout = cfg.layout;
    run.iterations = cfg.iterations;
    run.record_every = cfg.record_every;
    if problem.solution().is_some() {
        run.lyapunov_weights = certificate.as_ref().map(|c| c.gamma_hat.clone());
    }
    let traces = run_seeds(pool, &run, &cfg.run_seeds())?;
    let label = format!("{}/{}/{}", cfg.method.as_str(), cfg.sampling.as_str(), step_label(cfg.step));
    Ok(Series { label, lambda: plan.lambda, rho: certificate.map(|c| c.rho), rows: aggregate(&traces) })
}

fn step_label(step: StepChoice) -> String {
    match step {
        StepChoice::Explicit(v) => num(v),
        StepChoice::Star => "star".into(),
        StepChoice::Corollary => "corollary".into(),
        StepChoice::Max => "max".into(),
        StepChoice::MultipleOfMax(f) => format!("{f}max"),
    }
}

/// Series of a one-dimensional panel: samplings × step choices.
pub fn fig3_choices(method: MethodName) -> Vec<(SamplingChoice, StepChoice)> {
    let mut v = Vec::new();
    if method == MethodName::Saga {
        v.push((SamplingChoice::Improved, StepChoice::Corollary));
    }
    for sampling in [SamplingChoice::Improved, SamplingChoice::Lipschitz] {
        v.push((sampling, StepChoice::Star));
        v.push((sampling, StepChoice::MultipleOfMax(0.9)));
    }
    v
}

fn series_csv(series: &[Series], w: &mut csv::Writer<Vec<u8>>, prefix: &[String]) -> Result<(), CliError> {
    for s in series {
        for r in &s.rows {
            let (mean, p5, p95) = r.lyapunov.map_or((String::new(), String::new(), String::new()), |l| {
                (num(l.mean), num(l.p5), num(l.p95))
            });
            let (d_mean, d_p5, d_p95) = r.dist2.map_or((String::new(), String::new(), String::new()), |l| {
                (num(l.mean), num(l.p5), num(l.p95))
            });
            let mut rec: Vec<String> = prefix.to_vec();
            rec.extend([
                s.label.clone(),
                num(s.lambda),
                s.rho.map(num).unwrap_or_default(),
                r.k.to_string(),
                num(r.grad_evals),
                mean,
                p5,
                p95,
                s.predicted(r.k).map(num).unwrap_or_default(),
                d_mean,
                d_p5,
                d_p95,
                num(r.objective.mean),
            ]);
            w.write_record(&rec)?;
        }
    }
    Ok(())
}

const SERIES_HEADER: [&str; 13] = [
    "series", "lambda", "rho", "k", "grad_evals_mean", "lyapunov_mean", "lyapunov_p5", "lyapunov_p95", "predicted",
    "dist2_mean", "dist2_p5", "dist2_p95", "objective_mean",
];

fn manifest(cfg: &ExperimentConfig, series: &[Series]) -> String {
    let mut s = cfg.render();
    for x in series {
        let rho = x.rho.map(num).unwrap_or_else(|| "none".into());
        writeln!(s, "# series {} lambda {} rho {}", x.label, x.lambda, rho).expect("writing to a String");
    }
    s
}

fn fig3(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Bundle, CliError> {
    let instance = setup::load_instance(cfg)?;
    let mut series = Vec::new();
    for (sampling, step) in fig3_choices(cfg.method) {
        let c = ExperimentConfig { sampling, step, ..cfg.clone() };
        series.push(run_series(&c, &instance, pool)?);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SERIES_HEADER)?;
    series_csv(&series, &mut w, &[])?;
    let name = cfg.experiment.clone().unwrap_or_else(|| format!("fig3_{}", cfg.method.as_str()));
    Ok(Bundle { files: vec![(format!("{name}.csv"), csv_string(w)?), ("manifest.txt".into(), manifest(cfg, &series))] })
}

/// Methods of the LibSVM comparison with closed-form steps: SAGA under three samplings and
/// L-SVRG/q-SAGA at several update frequencies.
fn lasso_choices(instance: &Instance) -> Result<Vec<ExperimentConfig>, CliError> {
    let (l, mu, n) = (&instance.lipschitz, instance.mu, instance.n());
    let base = ExperimentConfig { step: StepChoice::Corollary, sampling: SamplingChoice::Lipschitz, ..Default::default() };
    let lsvrg_star = corollary::lsvrg_eta_star(l, mu, StorageLayout::FullTable)?.eta_star;
    let qsaga_star = corollary::qsaga_eta_star(l, mu)?.eta_star;
    let mut v = Vec::new();
    for sampling in [SamplingChoice::Uniform, SamplingChoice::Lipschitz, SamplingChoice::Improved] {
        v.push(ExperimentConfig { method: MethodName::Saga, sampling, ..base.clone() });
    }
    for eta in [1.0 / n as f64, lsvrg_star, (5.0 * lsvrg_star).min(1.0)] {
        v.push(ExperimentConfig { method: MethodName::Lsvrg, eta: Some(eta), ..base.clone() });
    }
    v.push(ExperimentConfig { method: MethodName::Qsaga, eta: Some(qsaga_star), ..base.clone() });
    Ok(v)
}

fn libsvm_lasso(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Bundle, CliError> {
    if cfg.datasets.is_empty() {
        return Err(CliError::MissingDataset("libsvm_lasso".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["dataset", "xi", "eta"];
    header.extend(SERIES_HEADER);
    w.write_record(&header)?;
    let mut all = Vec::new();
    for path in &cfg.datasets {
        let instance = setup::load_libsvm(path, cfg.xi, cfg.sparsity)?;
        for choice in lasso_choices(&instance)? {
            let c = ExperimentConfig {
                seeds: cfg.seeds,
                seed: cfg.seed,
                iterations: cfg.iterations,
                record_every: cfg.record_every,
                replacement: cfg.replacement,
                ..choice
            };
            let mut s = run_series(&c, &instance, pool)?;
            let eta = setup::frequency(&c, instance.n());
            if c.method != MethodName::Saga {
                s.label = format!("{}/eta={eta}", s.label);
            }
            let prefix = [path.display().to_string(), num(instance.xi), num(eta)];
            series_csv(std::slice::from_ref(&s), &mut w, &prefix)?;
            s.label = format!("{}:{}", path.display(), s.label);
            all.push(s);
        }
    }
    Ok(Bundle { files: vec![("libsvm_lasso.csv".into(), csv_string(w)?), ("manifest.txt".into(), manifest(cfg, &all))] })
}

/// Runs the named experiment. `cfg` should come from [`defaults`] with the user's settings applied.
pub fn reproduce(name: &str, cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Bundle, CliError> {
    let cfg = ExperimentConfig { experiment: Some(name.to_string()), ..cfg.clone() };
    match name {
        "fig1" => fig1(&cfg),
        "fig2" => fig2(&cfg),
        "fig3_saga" | "fig3_lsvrg" | "fig3_qsaga" | "fig3_ilsvrg" => fig3(&cfg, pool),
        "libsvm_lasso" => libsvm_lasso(&cfg, pool),
        other => Err(CliError::Input(format!("unknown experiment `{other}`; expected one of {EXPERIMENTS:?}"))),
    }
}
