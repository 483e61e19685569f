//! Acceptance criteria A1–A9. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vrgrad::config::{MethodName, ProblemSource, SamplingChoice, StepChoice};
use vrgrad::data::{drop_zero_columns, generate_1d_least_squares, parse_libsvm, to_problem, tune_l1_for_sparsity, write_libsvm};
use vrgrad::experiments::{fig1_rows, fig2_data, run_series, FIG1_KAPPAS, FIG1_NS, FIG2_INSTANCES};
use vrgrad::runner::{log_slope, thread_pool, window_slope};
use vrgrad::setup::{self, Instance};
use vrgrad::ExperimentConfig;
use vrgrad_core::linalg::{dist2, dot, norm2_sq};
use vrgrad_core::problems::{build_least_squares_dense, FiniteSumProblem, ProxOperator};
use vrgrad_core::rates::corollary::{self, Method, Sampling};
use vrgrad_core::rates::{
    dual_contraction_coherent, dual_contraction_incoherent, lyapunov_terms, max_step_size, nu_coherent, nu_incoherent,
    one_step_contraction_oracle, primal_contraction, primal_contraction_nu, solve_rate_fixed_step, MetaParameters,
    RateInputs,
};
use vrgrad_core::solver::{estimator_variance_probe, RunConfig, SolverState};
use vrgrad_core::{DualStrategy, PrimalDistribution, Replacement, StorageLayout};

use common::{gaussian_instance, CRAFTED_LIBSVM, ZERO_COLUMN_LIBSVM};

type Outcome = Result<String, String>;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn one_dimensional() -> Instance {
    let (problem, _, _) = generate_1d_least_squares(100, 0).expect("1-D instance");
    Instance { lipschitz: problem.lipschitz().to_vec(), mu: problem.mu(), problem: Some(problem), xi: 0.0 }
}

fn series_config(method: MethodName, sampling: SamplingChoice, step: StepChoice, seeds: usize, iterations: usize) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSource::Synthetic1d { n: 100, data_seed: 0 },
        method,
        sampling,
        step,
        seeds,
        iterations,
        record_every: 10,
        ..ExperimentConfig::default()
    }
}

/// Random least squares (lasso half the time) with `n ≤ 4`, `dim ≤ 3` and `x⋆` attached.
fn random_problem(rng: &mut ChaCha8Rng) -> Option<FiniteSumProblem> {
    let n = rng.random_range(1..=4);
    let dim = rng.random_range(1..=3);
    let a: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| normal(rng)).collect()).collect();
    let b: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let xi = if rng.random_bool(0.5) { rng.random_range(0.0..0.5) } else { 0.0 };
    let p = build_least_squares_dense(&a, &b, xi).ok()?;
    if p.mu() < 1e-2 * p.mean_lipschitz() {
        return None;
    }
    Some(p.solve_and_attach(1e-15, 2_000_000).0)
}

fn random_distribution(rng: &mut ChaCha8Rng, problem: &FiniteSumProblem) -> PrimalDistribution {
    match rng.random_range(0..3) {
        0 => PrimalDistribution::uniform(problem.n()).unwrap(),
        1 => PrimalDistribution::lipschitz(problem.lipschitz()).unwrap(),
        _ => {
            let w: Vec<f64> = (0..problem.n()).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            PrimalDistribution::custom(&w.iter().map(|v| v / s).collect::<Vec<_>>()).unwrap()
        }
    }
}

fn a1_one_step_contraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let kinds = ["saga", "lsvrg", "ilsvrg", "qsaga-without", "qsaga-with"];
    let mut worst = f64::NEG_INFINITY;
    let mut report = Vec::new();
    for kind in kinds {
        let mut done = 0;
        let mut kind_worst = f64::NEG_INFINITY;
        while done < 200 {
            let Some(problem) = random_problem(&mut rng) else { continue };
            let n = problem.n();
            let dist = random_distribution(&mut rng, &problem);
            let strategy = match kind {
                "saga" => DualStrategy::Saga,
                "lsvrg" => DualStrategy::lsvrg(rng.random_range(0.05..=1.0)).unwrap(),
                "ilsvrg" => DualStrategy::ilsvrg(rng.random_range(0.05..=1.0)).unwrap(),
                "qsaga-without" => DualStrategy::qsaga(rng.random_range(1..=n), n, Replacement::Without).unwrap(),
                _ => DualStrategy::qsaga(rng.random_range(1..=n), n, Replacement::With).unwrap(),
            };
            let inputs = RateInputs::for_problem(&problem, &dist, &strategy).unwrap();
            let lambda = 0.9 * max_step_size(&inputs).unwrap() * (1.0 - rng.random::<f64>());
            let cert = solve_rate_fixed_step(&inputs.with_step_size(lambda)).unwrap();
            let x_star = problem.solution().unwrap().to_vec();
            let scale = 10f64.powf(rng.random_range(-3.0..1.0));
            let x: Vec<f64> = x_star.iter().map(|v| v + scale * normal(&mut rng)).collect();
            let y: Vec<Vec<f64>> = if strategy.is_coherent() {
                let anchor: Vec<f64> = x_star.iter().map(|v| v + scale * normal(&mut rng)).collect();
                (0..n).map(|i| problem.gradient_component(i, &anchor).unwrap()).collect()
            } else {
                (0..n)
                    .map(|i| {
                        let g = problem.gradient_component(i, &x_star).unwrap();
                        g.iter().map(|v| v + scale * normal(&mut rng)).collect()
                    })
                    .collect()
            };
            let out = one_step_contraction_oracle(&problem, &dist, &strategy, lambda, &x, &y, &cert).unwrap();
            let excess = out.expected_next - out.contracted;
            kind_worst = kind_worst.max(excess);
            done += 1;
        }
        worst = worst.max(kind_worst);
        report.push(format!("{kind}:{kind_worst:.1e}"));
    }
    ensure(worst <= 1e-10, format!("200 instances per strategy, max excess {worst:.1e} ({})", report.join(" ")))
}

/// `λ = 2/(K + m + √(K² + m²))`, written out here as an independent check of the tables.
fn closed_form_step(k: f64, m: f64) -> f64 {
    2.0 / (k + m + (k * k + m * m).sqrt())
}

fn a2_corollary_tightness() -> Outcome {
    let rows = fig1_rows(0).map_err(|e| e.to_string())?;
    if rows.len() != FIG1_KAPPAS.len() * FIG1_NS.len() * 5 {
        return Err(format!("{} rows", rows.len()));
    }
    let mut worst: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for r in &rows {
        let (l, mu) = vrgrad::data::generate_constants(r.n, r.kappa, 0);
        let n = r.n as f64;
        let l_max = l.iter().copied().fold(0.0, f64::max);
        let l_bar = l.iter().sum::<f64>() / n;
        let p_min = l.iter().copied().fold(f64::INFINITY, f64::min) / (n * l_bar);
        let c = |big: f64| 2.0 + 2.0 * (1.0 - mu / big).sqrt();
        let d = |big: f64| 4.0 - 3.0 * mu / big;
        let expected = match (r.method, r.sampling) {
            ("saga", "uniform") => closed_form_step(c(l_max) * l_max, n * mu),
            ("saga", "lipschitz") => closed_form_step(c(l_bar) * l_bar, mu / p_min),
            ("saga", "improved") => {
                let s = l.iter().map(|li| 4.0 * li + n * mu + ((4.0 * li).powi(2) + (n * mu).powi(2)).sqrt()).sum::<f64>() / n;
                2.0 / s
            }
            ("lsvrg", "uniform") => closed_form_step(d(l_max) * l_max, mu * n),
            ("lsvrg", "lipschitz") => closed_form_step(d(l_bar) * l_bar, mu * n),
            other => return Err(format!("unexpected row {other:?}")),
        };
        if (r.lambda - expected).abs() > 1e-12 * expected {
            return Err(format!("{} {} κ={} n={}: λ {} vs {}", r.method, r.sampling, r.kappa, r.n, r.lambda, expected));
        }
        let gap = (r.rho_theorem - mu * expected) / r.rho_theorem;
        worst = worst.max(gap);
        min_gap = min_gap.min(gap);
    }
    ensure(
        min_gap >= 0.0 && worst <= 0.10,
        format!("{} rows, relative gap in [{min_gap:.2e}, {worst:.4}]", rows.len()),
    )
}

/// Windowed slope of the mean Lyapunov value over its theoretical value `ln(1 − ρ)`.
fn slope_ratio(instance: &Instance, seeds: usize, iterations: usize) -> Result<(f64, Option<(f64, usize)>), String> {
    let cfg = series_config(MethodName::Saga, SamplingChoice::Improved, StepChoice::Corollary, seeds, iterations);
    let s = run_series(&cfg, instance, &thread_pool(None)).map_err(|e| e.to_string())?;
    let rho = s.rho.ok_or("no certificate")?;
    let points = s.mean_lyapunov();
    let window = window_slope(&points, points[0].1, 1e-10, 1e-2);
    Ok((rho, window.map(|(slope, count)| (slope / (1.0 - rho).ln(), count))))
}

fn describe(w: Option<(f64, usize)>) -> String {
    match w {
        Some((ratio, count)) => format!("ratio {ratio:.3} over {count} points"),
        None => "window empty".into(),
    }
}

fn a3_saga_rate() -> Outcome {
    let instance = one_dimensional();
    let (rho, stated) = slope_ratio(&instance, 1000, 200)?;
    // longer runs, for the record
    let (_, long) = slope_ratio(&instance, 1000, 3000)?;
    let (_, ten_thousand) = slope_ratio(&instance, 10_000, 3000)?;
    let ok = matches!(stated, Some((r, _)) if (0.8..=1.2).contains(&r));
    ensure(
        ok,
        format!(
            "rho {rho:.5}; 1000 runs x 200 it: {}; 1000 x 3000: {}; 10000 x 3000: {}",
            describe(stated),
            describe(long),
            describe(ten_thousand)
        ),
    )
}

fn a4_exact_estimator() -> Outcome {
    let instance = one_dimensional();
    let problem = instance.problem.as_ref().unwrap();
    let cfg = series_config(MethodName::Lsvrg, SamplingChoice::Lipschitz, StepChoice::Star, 100, 50);
    let plan = setup::plan(&cfg, &instance).map_err(|e| e.to_string())?;
    let lambda = plan.lambda;
    if (lambda * problem.mu() - 1.0).abs() > 1e-12 {
        return Err(format!("λ* = {lambda}, 1/μ = {}", 1.0 / problem.mu()));
    }
    let run = RunConfig::new(problem, &plan.distribution, plan.strategy, lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_var: f64 = 0.0;
    let mut worst_step: f64 = 0.0;
    for trial in 0..50 {
        let anchor = 3.0 * normal(&mut rng);
        let mut cfg_t = RunConfig::new(problem, &plan.distribution, plan.strategy, lambda);
        cfg_t.initial_point = Some(vec![anchor]);
        cfg_t.seed = trial;
        let mut state = SolverState::new(&cfg_t).map_err(|e| e.to_string())?;
        // move x away from the dual anchor
        state.x = vec![3.0 * normal(&mut rng)];
        worst_var = worst_var.max(estimator_variance_probe(&state, &run, 200));
        let x = state.x.clone();
        let pg = x[0] - lambda * problem.full_gradient(&x)[0];
        state.step(&cfg_t).map_err(|e| e.to_string())?;
        worst_step = worst_step.max((state.x[0] - pg).abs() / (1.0 + pg.abs()));
    }
    let series = run_series(&cfg, &instance, &thread_pool(None)).map_err(|e| e.to_string())?;
    let initial = series.rows[0].lyapunov.ok_or("no Lyapunov column")?.mean;
    let band = series.rows.iter().filter_map(|r| r.lyapunov).map(|l| l.band_width()).fold(0.0, f64::max);
    ensure(
        worst_var <= 1e-24 && worst_step <= 1e-12 && band <= 1e-24 * initial,
        format!(
            "variance {worst_var:.1e}, step vs prox-gradient {worst_step:.1e}, 5-95 band {band:.1e} (initial {initial:.3e})"
        ),
    )
}

fn a5_eta_star() -> Outcome {
    let fig2 = fig2_data(0, 50).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (n, kappa) in FIG2_INSTANCES {
        let (l, mu) = vrgrad::data::generate_constants(n, kappa, 0);
        let (lo, hi) = ((0.01 / n as f64).ln(), 0.0f64);
        let grid: Vec<f64> = (0..50).map(|k| (lo + (hi - lo) * k as f64 / 49.0).exp()).collect();
        for marker in fig2.markers.iter().filter(|m| m.n == n && m.method != "saga") {
            let method = match marker.method {
                "lsvrg" => Method::Lsvrg(StorageLayout::FullTable),
                "lsvrg-anchor" => Method::Lsvrg(StorageLayout::Anchor),
                _ => Method::Qsaga,
            };
            let min = grid
                .iter()
                .map(|&eta| corollary::theorem_complexity(&l, mu, eta, method).unwrap())
                .fold(f64::INFINITY, f64::min);
            let at_star = corollary::theorem_complexity(&l, mu, marker.eta_star, method).unwrap();
            let ratio = at_star / min;
            worst = worst.max(ratio);
            lines.push(format!("n={n} {}:{ratio:.4}", marker.method));
        }
    }
    ensure(lines.len() >= 4 && worst <= 1.10, format!("complexity(η*)/grid min: {}", lines.join(" ")))
}

fn a6_step_ordering() -> Outcome {
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..200 {
        let n = rng.random_range(1..50);
        let l: Vec<f64> = if case % 2 == 0 {
            vec![rng.random_range(0.1..5.0); n]
        } else {
            (0..n).map(|_| rng.random_range(0.1..5.0)).collect()
        };
        let l_max = l.iter().copied().fold(0.0, f64::max);
        let l_bar = l.iter().sum::<f64>() / n as f64;
        for t in 1..=20 {
            let mu = (l_bar * t as f64 / 20.0).min(l_bar);
            let eta = rng.random_range(0.01..=1.0);
            let saga = corollary::saga_bounds(&l, mu, Sampling::Uniform).map_err(|e| e.to_string())?.lambda_max;
            let c_u = 2.0 + 2.0 * (1.0 - mu / l_max).sqrt();
            let expected = 2.0 / (c_u * l_max);
            if (saga - expected).abs() > 1e-12 * expected || saga <= 1.0 / (4.0 * l_max) {
                return Err(format!("SAGA μ={mu} L_max={l_max}: {saga} vs {expected}"));
            }
            let lsvrg = corollary::lsvrg_bounds(&l, mu, eta, Sampling::Uniform).map_err(|e| e.to_string())?.lambda_max;
            let expected = 2.0 / ((4.0 - 3.0 * mu / l_max) * l_max);
            if (lsvrg - expected).abs() > 1e-12 * expected || lsvrg < 1.0 / (2.0 * l_max) * (1.0 - 1e-12) {
                return Err(format!("L-SVRG μ={mu} L_max={l_max}: {lsvrg} vs {expected}"));
            }
            let reference = corollary::reference_saga_bounds(&l, mu).map_err(|e| e.to_string())?.lambda_max;
            if (reference - 1.0 / (4.0 * l_max)).abs() > 1e-12 * reference {
                return Err(format!("reference row {reference}"));
            }
            checked += 1;
        }
    }
    ensure(true, format!("{checked} (L, μ) pairs, μ up to L̄ (= L_max for equal constants)"))
}

fn a7_qsaga_vs_ilsvrg() -> Outcome {
    let instance = one_dimensional();
    let n = instance.n();
    let dist = PrimalDistribution::uniform(n).unwrap();
    let q = DualStrategy::qsaga(1, n, Replacement::Without).unwrap();
    let il = DualStrategy::ilsvrg(1.0 / n as f64).unwrap();
    let (iq, ii) = (
        RateInputs::for_strategy(&instance.lipschitz, instance.mu, &dist, &q).unwrap(),
        RateInputs::for_strategy(&instance.lipschitz, instance.mu, &dist, &il).unwrap(),
    );
    let cq = vrgrad_core::rates::solve_optimal_rate(&iq).unwrap();
    let ci = vrgrad_core::rates::solve_optimal_rate(&ii).unwrap();
    if iq != ii || cq != ci {
        return Err(format!("certificates differ: {cq:?} vs {ci:?}"));
    }
    let pool = thread_pool(None);
    let mut slopes = Vec::new();
    for method in [MethodName::Qsaga, MethodName::Ilsvrg] {
        let cfg = series_config(method, SamplingChoice::Uniform, StepChoice::Star, 500, 3000);
        let s = run_series(&cfg, &instance, &pool).map_err(|e| e.to_string())?;
        let points = s.mean_lyapunov();
        let initial = points[0].1;
        let slope = match window_slope(&points, initial, 1e-10, 1e-2) {
            Some((s, c)) if c >= 10 => s,
            _ => log_slope(&points).ok_or("no slope")?,
        };
        slopes.push(slope);
    }
    let rel = (slopes[0] - slopes[1]).abs() / slopes[0].abs().max(slopes[1].abs());
    ensure(
        rel <= 0.15,
        format!(
            "identical certificates (rho {:.5}); 500-seed slopes q-SAGA {:.5}, IL-SVRG {:.5}, relative difference {rel:.3}",
            cq.rho, slopes[0], slopes[1]
        ),
    )
}

fn a8_parser_and_plumbing() -> Outcome {
    let d = parse_libsvm(CRAFTED_LIBSVM.as_bytes()).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    write_libsvm(&d, &mut out).map_err(|e| e.to_string())?;
    if out != CRAFTED_LIBSVM.as_bytes() {
        return Err(format!("round trip differs: {:?}", String::from_utf8_lossy(&out)));
    }
    let z = parse_libsvm(ZERO_COLUMN_LIBSVM.as_bytes()).map_err(|e| e.to_string())?;
    if to_problem(&z, 0.0).is_ok() {
        return Err("zero column instance was accepted before the drop".into());
    }
    let (kept, dropped) = drop_zero_columns(&z);
    let mu = to_problem(&kept, 0.0).map_err(|e| e.to_string())?.mu();
    let g = gaussian_instance(50, 10, 11);
    let t = tune_l1_for_sparsity(&g.sparse_rows(), &g.labels, 10, (0.15, 0.20)).map_err(|e| e.to_string())?;
    ensure(
        mu > 0.0 && dropped == vec![2] && (0.15..=0.30).contains(&t.sparsity),
        format!("round trip exact; dropped {dropped:?}, mu {mu:.4}; xi {:.4} gives sparsity {}", t.xi, t.sparsity),
    )
}

fn a9_lemmas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut cases = 0;
    let fail = |what: &str, detail: String| -> Outcome { Err(format!("{what}: {detail}")) };
    while cases < 500 {
        let Some(problem) = random_problem(&mut rng) else { continue };
        let (n, dim) = (problem.n(), problem.dim());
        let x_star = problem.solution().unwrap().to_vec();
        let pt = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| 2.0 * normal(rng)).collect() };
        let (x, z) = (pt(&mut rng), pt(&mut rng));
        let d: Vec<f64> = x.iter().zip(&z).map(|(u, v)| u - v).collect();

        for i in 0..n {
            let g: Vec<f64> = problem.gradient_component(i, &x).unwrap().iter()
                .zip(problem.gradient_component(i, &z).unwrap()).map(|(u, v)| u - v).collect();
            let (lhs, rhs) = (dot(&g, &d), norm2_sq(&g) / problem.lipschitz()[i]);
            if lhs < rhs - 1e-9 * lhs.abs().max(1e-12) {
                return fail("cocoercivity", format!("{lhs} < {rhs}"));
            }
        }
        let gd: Vec<f64> = problem.full_gradient(&x).iter().zip(problem.full_gradient(&z)).map(|(u, v)| u - v).collect();
        if dot(&gd, &d) < problem.mu() * norm2_sq(&d) * (1.0 - 1e-9) {
            return fail("strong monotonicity", format!("{} < {}", dot(&gd, &d), problem.mu() * norm2_sq(&d)));
        }
        let op = ProxOperator::l1(rng.random_range(0.0..2.0));
        let step = rng.random_range(0.0..2.0);
        if dist2(&op.apply(step, &x), &op.apply(step, &z)).sqrt() > dist2(&x, &z).sqrt() + 1e-12 {
            return fail("prox non-expansiveness", format!("{x:?} {z:?}"));
        }

        let dist = random_distribution(&mut rng, &problem);
        let p = dist.probabilities().to_vec();
        let eta: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let inputs = RateInputs::new(problem.lipschitz().to_vec(), problem.mu(), p.clone(), eta.clone(), false).unwrap();
        if inputs.max_sampled_smoothness() < problem.mu() * (1.0 - 1e-12) {
            return fail("sampled smoothness", format!("{} < {}", inputs.max_sampled_smoothness(), problem.mu()));
        }
        let eq = eta[0];
        let coherent = RateInputs::new(problem.lipschitz().to_vec(), problem.mu(), p.clone(), vec![eq; n], true).unwrap();
        let (mut last_i, mut last_c) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for k in 0..30 {
            let rho = inputs.min_eta() * k as f64 / 30.0;
            let v = nu_incoherent(&inputs, rho).unwrap().nu;
            let c = nu_coherent(&coherent, eq * k as f64 / 30.0).unwrap();
            if v < last_i * (1.0 - 1e-9) || c < last_c * (1.0 - 1e-9) {
                return fail("nu monotonicity", format!("rho {rho}: {v} after {last_i}, {c} after {last_c}"));
            }
            (last_i, last_c) = (v, c);
        }

        let gamma: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..20.0)).collect();
        let delta = rng.random_range(0.05..20.0);
        let meta = MetaParameters { gamma: gamma.clone(), delta };
        let nu = primal_contraction_nu(&inputs, &meta);
        let lambda = rng.random::<f64>() * 2.0 / nu;
        let y: Vec<Vec<f64>> = (0..n).map(|_| pt(&mut rng)).collect();
        let terms = lyapunov_terms(&problem, &p, &eta, &gamma, delta, lambda, &x, &y).unwrap();
        let d2 = dist2(&x, &x_star);
        let bound = (1.0 - primal_contraction(&inputs, &meta, lambda)) * d2;
        if terms.primal > bound + 1e-10 * (1.0 + d2) {
            return fail("primal lemma", format!("{} > {bound}", terms.primal));
        }
        let y_star: Vec<Vec<f64>> = (0..n).map(|i| problem.gradient_component(i, &x_star).unwrap()).collect();
        let hat = meta.weights(&p, lambda);
        let weighted = |y: &[Vec<f64>], hat: &[f64]| -> f64 {
            y.iter().zip(&y_star).zip(hat).map(|((u, v), w)| w * dist2(u, v)).sum()
        };
        let w = weighted(&y, &hat);
        let bound = (1.0 - dual_contraction_incoherent(&eta, &gamma)) * w;
        if terms.dual > bound + 1e-10 * (1.0 + w) {
            return fail("dual lemma", format!("{} > {bound}", terms.dual));
        }

        let anchor = pt(&mut rng);
        let yc: Vec<Vec<f64>> = (0..n).map(|i| problem.gradient_component(i, &anchor).unwrap()).collect();
        let gamma_c: Vec<f64> = gamma
            .iter()
            .zip(coherent.sampled_smoothness())
            .map(|(g, r)| if r <= problem.mu() && rng.random_bool(0.5) { 0.0 } else { *g })
            .collect();
        let terms = lyapunov_terms(&problem, &p, &vec![eq; n], &gamma_c, delta, lambda, &anchor, &yc).unwrap();
        let hat = MetaParameters { gamma: gamma_c.clone(), delta }.weights(&p, lambda);
        let w = weighted(&yc, &hat);
        let bound = (1.0 - dual_contraction_coherent(&coherent, &gamma_c)) * w;
        if terms.dual > bound + 1e-10 * (1.0 + w) {
            return fail("coherent dual lemma", format!("{} > {bound}", terms.dual));
        }
        cases += 1;
    }
    Ok(format!("{cases} random instances: cocoercivity, monotonicity, prox, sampled smoothness, nu monotone, three lemmas"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("A1", a1_one_step_contraction),
        ("A2", a2_corollary_tightness),
        ("A3", a3_saga_rate),
        ("A4", a4_exact_estimator),
        ("A5", a5_eta_star),
        ("A6", a6_step_ordering),
        ("A7", a7_qsaga_vs_ilsvrg),
        ("A8", a8_parser_and_plumbing),
        ("A9", a9_lemmas),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s) {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
