//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use vrgrad_core::{Replacement, StorageLayout};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("invalid value `{value}` for `{key}`")]
    Value { key: String, value: String },
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    /// 1-D least squares with standard normal data.
    Synthetic1d { n: usize, data_seed: u64 },
    /// Only constants: `L_i ~ U(0, 2)` and `μ = L̄/κ`. Enough for `rate` and `tune`.
    Constants { n: usize, kappa: f64, data_seed: u64 },
    Libsvm { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodName {
    Saga,
    Lsvrg,
    Ilsvrg,
    Qsaga,
}

impl MethodName {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Saga => "saga",
            MethodName::Lsvrg => "lsvrg",
            MethodName::Ilsvrg => "ilsvrg",
            MethodName::Qsaga => "qsaga",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingChoice {
    Uniform,
    Lipschitz,
    Improved,
}

impl SamplingChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplingChoice::Uniform => "uniform",
            SamplingChoice::Lipschitz => "lipschitz",
            SamplingChoice::Improved => "improved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepChoice {
    Explicit(f64),
    /// Maximizer of the certified rate.
    Star,
    /// The closed-form step of the matching corollary.
    Corollary,
    Max,
    MultipleOfMax(f64),
}

impl StepChoice {
    fn render(self) -> String {
        match self {
            StepChoice::Explicit(v) => format!("{v}"),
            StepChoice::Star => "star".into(),
            StepChoice::Corollary => "corollary".into(),
            StepChoice::Max => "max".into(),
            StepChoice::MultipleOfMax(f) => format!("{f}*max"),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "star" => Some(StepChoice::Star),
            "corollary" => Some(StepChoice::Corollary),
            "max" => Some(StepChoice::Max),
            _ => {
                if let Some(f) = s.strip_suffix("max") {
                    let f = f.trim().trim_end_matches(['*', 'x']).trim();
                    let f: f64 = f.parse().ok()?;
                    return (f > 0.0 && f.is_finite()).then_some(StepChoice::MultipleOfMax(f));
                }
                let v: f64 = s.parse().ok()?;
                (v > 0.0 && v.is_finite()).then_some(StepChoice::Explicit(v))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Figure name for `reproduce`.
    pub experiment: Option<String>,
    pub problem: ProblemSource,
    /// `ℓ₁` weight for LibSVM problems; ignored when `sparsity` is set.
    pub xi: f64,
    /// Target sparsity band for tuning `xi`.
    pub sparsity: Option<(f64, f64)>,
    pub method: MethodName,
    pub sampling: SamplingChoice,
    pub step: StepChoice,
    /// Update frequency; defaults to `1/n`.
    pub eta: Option<f64>,
    /// q-SAGA batch size; overrides `eta`.
    pub q: Option<usize>,
    pub replacement: Replacement,
    pub layout: StorageLayout,
    pub seeds: usize,
    /// Seed of the first run; run `r` uses `seed + r`.
    pub seed: u64,
    pub iterations: usize,
    pub record_every: usize,
    pub datasets: Vec<PathBuf>,
    pub curve_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            problem: ProblemSource::Synthetic1d { n: 100, data_seed: 0 },
            xi: 0.0,
            sparsity: None,
            method: MethodName::Saga,
            sampling: SamplingChoice::Uniform,
            step: StepChoice::Star,
            eta: None,
            q: None,
            replacement: Replacement::Without,
            layout: StorageLayout::FullTable,
            seeds: 1,
            seed: 0,
            iterations: 1000,
            record_every: 1,
            datasets: Vec::new(),
            curve_points: 50,
        }
    }
}

const KEYS: &[&str] = &[
    "experiment", "problem", "n", "kappa", "data_seed", "path", "xi", "sparsity", "method", "sampling", "step",
    "eta", "q", "replacement", "layout", "seeds", "seed", "iterations", "record_every", "datasets", "curve_points",
];

fn value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError::Value { key: key.into(), value: raw.into() })
}

/// The problem source after applying the problem keys of `map` to `base`.
fn problem_source(map: &BTreeMap<String, String>, base: &ProblemSource) -> Result<ProblemSource, ConfigError> {
    let get = |k: &str| map.get(k).map(String::as_str);
    let bad = |k: &str, v: &str| ConfigError::Value { key: k.into(), value: v.into() };
    let (base_n, base_seed, base_kappa, base_path, base_source) = match base {
        ProblemSource::Synthetic1d { n, data_seed } => (*n, *data_seed, None, None, "synthetic"),
        ProblemSource::Constants { n, kappa, data_seed } => (*n, *data_seed, Some(*kappa), None, "constants"),
        ProblemSource::Libsvm { path } => (100, 0, None, Some(path.clone()), "libsvm"),
    };
    let n = get("n").map(|v| value::<usize>("n", v)).transpose()?.unwrap_or(base_n);
    if n == 0 {
        return Err(bad("n", "0"));
    }
    let data_seed = get("data_seed").map(|v| value("data_seed", v)).transpose()?.unwrap_or(base_seed);
    let kappa = get("kappa").map(|v| value::<f64>("kappa", v)).transpose()?;
    let path = get("path").map(PathBuf::from);
    let source = match get("problem") {
        Some(s) => s,
        None if path.is_some() => "libsvm",
        None if kappa.is_some() => "constants",
        None => base_source,
    };
    if path.is_some() && source != "libsvm" {
        return Err(ConfigError::Inconsistent("path is only valid with problem = libsvm".into()));
    }
    if kappa.is_some() && source != "constants" {
        return Err(ConfigError::Inconsistent("kappa is only valid with problem = constants".into()));
    }
    Ok(match source {
        "synthetic" => ProblemSource::Synthetic1d { n, data_seed },
        "constants" => {
            let kappa = kappa
                .or(base_kappa)
                .ok_or_else(|| ConfigError::Inconsistent("problem = constants needs kappa".into()))?;
            if !(kappa >= 1.0) || !kappa.is_finite() {
                return Err(bad("kappa", &kappa.to_string()));
            }
            ProblemSource::Constants { n, kappa, data_seed }
        }
        "libsvm" => ProblemSource::Libsvm {
            path: path
                .or(base_path)
                .ok_or_else(|| ConfigError::Inconsistent("problem = libsvm needs path".into()))?,
        },
        other => return Err(bad("problem", other)),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_over(text, ExperimentConfig::default())
    }

    /// Parses `text` on top of `base`: keys that are absent keep their value from `base`.
    pub fn parse_over(text: &str, base: ExperimentConfig) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, raw) = content.split_once('=').ok_or(ConfigError::Syntax { line: k + 1 })?;
            let (key, raw) = (key.trim(), raw.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.into()));
            }
            if map.insert(key.to_string(), raw.to_string()).is_some() {
                return Err(ConfigError::Duplicate(key.into()));
            }
        }
        Self::from_map(&map, base)
    }

    fn from_map(map: &BTreeMap<String, String>, base: ExperimentConfig) -> Result<Self, ConfigError> {
        let mut c = base;
        let get = |k: &str| map.get(k).map(String::as_str);
        let bad = |k: &str, v: &str| ConfigError::Value { key: k.into(), value: v.into() };

        if let Some(e) = get("experiment") {
            c.experiment = Some(e.to_string());
        }
        let touched = ["problem", "n", "kappa", "data_seed", "path"].iter().any(|k| map.contains_key(*k));
        if touched {
            c.problem = problem_source(map, &c.problem)?;
        }

        if let Some(v) = get("xi") {
            c.xi = value("xi", v)?;
            if !(c.xi >= 0.0) || !c.xi.is_finite() {
                return Err(bad("xi", v));
            }
        }
        if get("sparsity") == Some("none") {
            c.sparsity = None;
        } else if let Some(v) = get("sparsity") {
            let (lo, hi) = v.split_once(',').ok_or_else(|| bad("sparsity", v))?;
            let (lo, hi): (f64, f64) = (value("sparsity", lo.trim())?, value("sparsity", hi.trim())?);
            if !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
                return Err(bad("sparsity", v));
            }
            c.sparsity = Some((lo, hi));
        }
        if let Some(v) = get("method") {
            c.method = match v {
                "saga" => MethodName::Saga,
                "lsvrg" => MethodName::Lsvrg,
                "ilsvrg" => MethodName::Ilsvrg,
                "qsaga" => MethodName::Qsaga,
                _ => return Err(bad("method", v)),
            };
        }
        if let Some(v) = get("sampling") {
            c.sampling = match v {
                "uniform" => SamplingChoice::Uniform,
                "lipschitz" => SamplingChoice::Lipschitz,
                "improved" => SamplingChoice::Improved,
                _ => return Err(bad("sampling", v)),
            };
        }
        if let Some(v) = get("step") {
            c.step = StepChoice::parse(v).ok_or_else(|| bad("step", v))?;
        }
        if let Some(v) = get("eta") {
            let eta: f64 = value("eta", v)?;
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(bad("eta", v));
            }
            c.eta = Some(eta);
        }
        if let Some(v) = get("q") {
            let q: usize = value("q", v)?;
            if q == 0 {
                return Err(bad("q", v));
            }
            c.q = Some(q);
        }
        if let Some(v) = get("replacement") {
            c.replacement = match v {
                "without" => Replacement::Without,
                "with" => Replacement::With,
                _ => return Err(bad("replacement", v)),
            };
        }
        if let Some(v) = get("layout") {
            c.layout = match v {
                "table" => StorageLayout::FullTable,
                "anchor" => StorageLayout::Anchor,
                _ => return Err(bad("layout", v)),
            };
        }
        if let Some(v) = get("seeds") {
            c.seeds = value("seeds", v)?;
            if c.seeds == 0 {
                return Err(bad("seeds", v));
            }
        }
        if let Some(v) = get("seed") {
            c.seed = value("seed", v)?;
        }
        if let Some(v) = get("iterations") {
            c.iterations = value("iterations", v)?;
        }
        if let Some(v) = get("record_every") {
            c.record_every = value("record_every", v)?;
            if c.record_every == 0 {
                return Err(bad("record_every", v));
            }
        }
        if let Some(v) = get("datasets") {
            c.datasets = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from).collect();
        }
        if let Some(v) = get("curve_points") {
            c.curve_points = value("curve_points", v)?;
            if c.curve_points < 2 {
                return Err(bad("curve_points", v));
            }
        }
        Ok(c)
    }

    /// Canonical text form. `parse(render())` gives back the same config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            writeln!(s, "{k} = {v}").expect("writing to a String");
        };
        if let Some(e) = &self.experiment {
            put("experiment", e.clone());
        }
        match &self.problem {
            ProblemSource::Synthetic1d { n, data_seed } => {
                put("problem", "synthetic".into());
                put("n", n.to_string());
                put("data_seed", data_seed.to_string());
            }
            ProblemSource::Constants { n, kappa, data_seed } => {
                put("problem", "constants".into());
                put("n", n.to_string());
                put("kappa", format!("{kappa}"));
                put("data_seed", data_seed.to_string());
            }
            ProblemSource::Libsvm { path } => {
                put("problem", "libsvm".into());
                put("path", path.display().to_string());
            }
        }
        put("xi", format!("{}", self.xi));
        match self.sparsity {
            Some((lo, hi)) => put("sparsity", format!("{lo},{hi}")),
            None => put("sparsity", "none".into()),
        }
        put("method", self.method.as_str().into());
        put("sampling", self.sampling.as_str().into());
        put("step", self.step.render());
        if let Some(eta) = self.eta {
            put("eta", format!("{eta}"));
        }
        if let Some(q) = self.q {
            put("q", q.to_string());
        }
        put(
            "replacement",
            match self.replacement {
                Replacement::Without => "without",
                Replacement::With => "with",
            }
            .into(),
        );
        put(
            "layout",
            match self.layout {
                StorageLayout::FullTable => "table",
                StorageLayout::Anchor => "anchor",
            }
            .into(),
        );
        put("seeds", self.seeds.to_string());
        put("seed", self.seed.to_string());
        put("iterations", self.iterations.to_string());
        put("record_every", self.record_every.to_string());
        if !self.datasets.is_empty() {
            let list: Vec<String> = self.datasets.iter().map(|p| p.display().to_string()).collect();
            put("datasets", list.join(","));
        }
        put("curve_points", self.curve_points.to_string());
        s
    }

    /// Seeds of the individual runs.
    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|r| self.seed.wrapping_add(r)).collect()
    }
}
