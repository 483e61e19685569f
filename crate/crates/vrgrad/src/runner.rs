//! Multi-seed runs, aggregation and slope fits.

use rayon::prelude::*;
use vrgrad_core::solver::{run, RunConfig, SolverError, Trace};

pub const THREADS_ENV: &str = "VRGRAD_THREADS";

/// Thread count from the flag, else from `VRGRAD_THREADS`, else rayon's default.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    if let Some(t) = flag {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            v.trim().parse().map(Some).map_err(|_| format!("{THREADS_ENV} must be a number, got `{v}`"))
        }
        _ => Ok(None),
    }
}

pub fn thread_pool(threads: Option<usize>) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("building the worker pool")
}

/// Runs `cfg` once per seed. Results are in seed order; on failure the error of the first
/// failing seed is returned, whatever order the workers finished in.
pub fn run_seeds(pool: &rayon::ThreadPool, cfg: &RunConfig<'_>, seeds: &[u64]) -> Result<Vec<Trace>, SolverError> {
    let results: Vec<Result<Trace, SolverError>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let mut c = cfg.clone();
                c.seed = seed;
                run(&c)
            })
            .collect()
    });
    results.into_iter().collect()
}

/// Percentile with linear interpolation between order statistics (`q` in `[0, 1]`).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub p5: f64,
    pub p95: f64,
}

impl Summary {
    /// Values are summed in the given order so the mean does not depend on scheduling.
    pub fn of(values: &[f64]) -> Summary {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Summary { mean, p5: percentile(&sorted, 0.05), p95: percentile(&sorted, 0.95) }
    }

    pub fn band_width(&self) -> f64 {
        self.p95 - self.p5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub k: usize,
    pub grad_evals: f64,
    pub dist2: Option<Summary>,
    pub lyapunov: Option<Summary>,
    pub objective: Summary,
}

/// Row-wise summaries of traces recorded on the same schedule.
pub fn aggregate(traces: &[Trace]) -> Vec<AggregateRow> {
    let Some(first) = traces.first() else { return Vec::new() };
    (0..first.rows.len())
        .map(|r| {
            let col = |f: &dyn Fn(&vrgrad_core::TraceRow) -> Option<f64>| -> Option<Vec<f64>> {
                traces.iter().map(|t| f(&t.rows[r])).collect()
            };
            AggregateRow {
                k: first.rows[r].k,
                grad_evals: traces.iter().map(|t| t.rows[r].grad_evals as f64).sum::<f64>() / traces.len() as f64,
                dist2: col(&|row| row.dist2).map(|v| Summary::of(&v)),
                lyapunov: col(&|row| row.lyapunov).map(|v| Summary::of(&v)),
                objective: Summary::of(&col(&|row| Some(row.objective)).expect("objective is always recorded")),
            }
        })
        .collect()
}

/// Least-squares slope of `ln(value)` against `k`. Needs two distinct `k` with positive values.
pub fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, v)| *v > 0.0).map(|&(k, v)| (k, v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let kbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - kbar) * (p.0 - kbar)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - kbar) * (p.1 - ybar)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// [`log_slope`] over the points whose value lies in `[lo, hi]·initial`.
pub fn window_slope(points: &[(f64, f64)], initial: f64, lo: f64, hi: f64) -> Option<(f64, usize)> {
    let window: Vec<(f64, f64)> =
        points.iter().copied().filter(|&(_, v)| v >= lo * initial && v <= hi * initial).collect();
    log_slope(&window).map(|s| (s, window.len()))
}
