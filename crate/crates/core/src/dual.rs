//! Dual-update strategies and the storage of the dual variables `y_1..y_n`.
//!
//! A strategy decides which dual variables are refreshed with the current
//! component gradients at every iteration. Its per-index expected update
//! frequency `η_i` is what the rate theory consumes.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::linalg;
use crate::problems::FiniteSumProblem;
use crate::sampling::PrimalDistribution;

/// Number of dual updates between from-scratch recomputations of the running sum.
pub const SUM_REFRESH_PERIOD: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DualError {
    #[error("update probability q = {0} must lie in (0, 1]")]
    InvalidProbability(f64),
    #[error("q-SAGA batch q = {q} must lie in 1..={n}")]
    InvalidBatch { q: usize, n: usize },
    #[error("anchor storage only accepts empty or full update sets")]
    IncoherentUpdate,
    #[error("expected {expected} dual variables, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// How q-SAGA draws its `q` indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Replacement {
    /// Exactly `q` distinct indices; `η_i = q/n`.
    #[default]
    Without,
    /// `q` independent uniform draws; `η_i = 1 − (1 − 1/n)^q`.
    With,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualStrategy {
    /// Refresh exactly the sampled index.
    Saga,
    /// Refresh every index together with probability `q`.
    Lsvrg { q: f64 },
    /// Refresh each index independently with probability `q`.
    Ilsvrg { q: f64 },
    /// Refresh the indices hit by `q` uniform draws.
    Qsaga { q: usize, replacement: Replacement },
}

impl DualStrategy {
    pub fn lsvrg(q: f64) -> Result<Self, DualError> {
        check_probability(q)?;
        Ok(DualStrategy::Lsvrg { q })
    }

    pub fn ilsvrg(q: f64) -> Result<Self, DualError> {
        check_probability(q)?;
        Ok(DualStrategy::Ilsvrg { q })
    }

    pub fn qsaga(q: usize, n: usize, replacement: Replacement) -> Result<Self, DualError> {
        if q == 0 || q > n {
            return Err(DualError::InvalidBatch { q, n });
        }
        Ok(DualStrategy::Qsaga { q, replacement })
    }

    /// q-SAGA with `q` the nearest non-zero integer to `η·n` (capped at `n`).
    pub fn qsaga_for_frequency(eta: f64, n: usize, replacement: Replacement) -> Result<Self, DualError> {
        Self::qsaga(batch_for_frequency(eta, n), n, replacement)
    }

    /// Only L-SVRG keeps every dual variable a gradient at one common anchor point.
    pub fn is_coherent(&self) -> bool {
        matches!(self, DualStrategy::Lsvrg { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            DualStrategy::Saga => "saga",
            DualStrategy::Lsvrg { .. } => "lsvrg",
            DualStrategy::Ilsvrg { .. } => "ilsvrg",
            DualStrategy::Qsaga { .. } => "qsaga",
        }
    }

    /// `η_i = E[U_i^k]` for each index.
    pub fn expected_update_frequency(&self, p: &PrimalDistribution) -> Vec<f64> {
        let n = p.len();
        match *self {
            DualStrategy::Saga => p.probabilities().to_vec(),
            DualStrategy::Lsvrg { q } | DualStrategy::Ilsvrg { q } => vec![q; n],
            DualStrategy::Qsaga { q, replacement } => vec![qsaga_frequency(q, n, replacement); n],
        }
    }

    /// Draws the set of dual indices to refresh this iteration.
    ///
    /// Only SAGA looks at `primal_index`; the other strategies draw independently of it.
    pub fn draw_update_set<R: Rng + ?Sized>(&self, n: usize, primal_index: usize, rng: &mut R) -> UpdateSet {
        match *self {
            DualStrategy::Saga => UpdateSet::Single(primal_index),
            DualStrategy::Lsvrg { q } => {
                if q >= 1.0 || rng.random::<f64>() < q {
                    UpdateSet::All
                } else {
                    UpdateSet::Empty
                }
            }
            DualStrategy::Ilsvrg { q } => {
                let picked: Vec<usize> = (0..n).filter(|_| q >= 1.0 || rng.random::<f64>() < q).collect();
                UpdateSet::from_sorted(picked, n)
            }
            DualStrategy::Qsaga { q, replacement: Replacement::Without } => {
                let mut picked = rand::seq::index::sample(rng, n, q).into_vec();
                picked.sort_unstable();
                UpdateSet::from_sorted(picked, n)
            }
            DualStrategy::Qsaga { q, replacement: Replacement::With } => {
                let mut picked: Vec<usize> = (0..q).map(|_| rng.random_range(0..n)).collect();
                picked.sort_unstable();
                picked.dedup();
                UpdateSet::from_sorted(picked, n)
            }
        }
    }
}

fn check_probability(q: f64) -> Result<(), DualError> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(DualError::InvalidProbability(q))
    }
}

/// Nearest non-zero integer to `η·n`, capped at `n`.
pub fn batch_for_frequency(eta: f64, n: usize) -> usize {
    let q = (eta * n as f64).round();
    if q < 1.0 {
        1
    } else {
        (q as usize).min(n)
    }
}

/// Inclusion probability of one index under q-SAGA.
pub fn qsaga_frequency(q: usize, n: usize, replacement: Replacement) -> f64 {
    match replacement {
        Replacement::Without => q as f64 / n as f64,
        Replacement::With => 1.0 - (1.0 - 1.0 / n as f64).powi(q as i32),
    }
}

/// The indices `{i : U_i^k = 1}` of one iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdateSet {
    Empty,
    Single(usize),
    All,
    /// Sorted, distinct, and neither empty nor complete.
    Some(Vec<usize>),
}

impl UpdateSet {
    /// Canonicalizes a sorted list of distinct indices.
    pub fn from_sorted(indices: Vec<usize>, n: usize) -> Self {
        match indices.len() {
            0 => UpdateSet::Empty,
            len if len == n => UpdateSet::All,
            1 => UpdateSet::Single(indices[0]),
            _ => UpdateSet::Some(indices),
        }
    }

    pub fn len(&self, n: usize) -> usize {
        match self {
            UpdateSet::Empty => 0,
            UpdateSet::Single(_) => 1,
            UpdateSet::All => n,
            UpdateSet::Some(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, UpdateSet::Empty)
    }

    pub fn contains(&self, i: usize) -> bool {
        match self {
            UpdateSet::Empty => false,
            UpdateSet::Single(j) => *j == i,
            UpdateSet::All => true,
            UpdateSet::Some(v) => v.binary_search(&i).is_ok(),
        }
    }

    /// Materializes the indices for a problem with `n` components.
    pub fn to_vec(&self, n: usize) -> Vec<usize> {
        match self {
            UpdateSet::Empty => Vec::new(),
            UpdateSet::Single(i) => vec![*i],
            UpdateSet::All => (0..n).collect(),
            UpdateSet::Some(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StorageLayout {
    /// Every `y_i` stored explicitly.
    #[default]
    FullTable,
    /// Only the anchor `x̂` with `y_i = ∇f_i(x̂)`; requires coherent updates.
    Anchor,
}

#[derive(Debug, Clone)]
enum Slots {
    /// Row-major `n × dim`.
    Table(Vec<f64>),
    Anchor(Vec<f64>),
}

/// Dual variables together with their running sum `Σ_i y_i`.
#[derive(Debug, Clone)]
pub struct DualStorage {
    slots: Slots,
    sum: Vec<f64>,
    dim: usize,
    updates_since_refresh: usize,
}

impl DualStorage {
    /// `y_i = ∇f_i(x)` for all `i`. Returns the storage and the `n` evaluations spent.
    pub fn coherent_at(problem: &FiniteSumProblem, layout: StorageLayout, x: &[f64]) -> (Self, usize) {
        let (n, dim) = (problem.n(), problem.dim());
        let storage = match layout {
            StorageLayout::FullTable => {
                let mut table = vec![0.0; n * dim];
                for (i, row) in table.chunks_exact_mut(dim).enumerate() {
                    problem.gradient_component_into(i, x, row);
                }
                let sum = column_sum(&table, dim);
                DualStorage { slots: Slots::Table(table), sum, dim, updates_since_refresh: 0 }
            }
            StorageLayout::Anchor => {
                let mut sum = vec![0.0; dim];
                problem.gradient_sum_into(x, &mut sum);
                DualStorage { slots: Slots::Anchor(x.to_vec()), sum, dim, updates_since_refresh: 0 }
            }
        };
        (storage, n)
    }

    /// Full table from explicit values `y[i]`.
    pub fn from_table(y: &[Vec<f64>], dim: usize) -> Result<Self, DualError> {
        let mut table = Vec::with_capacity(y.len() * dim);
        for yi in y {
            if yi.len() != dim {
                return Err(DualError::DimensionMismatch { expected: dim, found: yi.len() });
            }
            table.extend_from_slice(yi);
        }
        let sum = column_sum(&table, dim);
        Ok(DualStorage { slots: Slots::Table(table), sum, dim, updates_since_refresh: 0 })
    }

    pub fn layout(&self) -> StorageLayout {
        match self.slots {
            Slots::Table(_) => StorageLayout::FullTable,
            Slots::Anchor(_) => StorageLayout::Anchor,
        }
    }

    /// The maintained running sum `Σ_i y_i`.
    pub fn sum(&self) -> &[f64] {
        &self.sum
    }

    pub fn anchor(&self) -> Option<&[f64]> {
        match &self.slots {
            Slots::Anchor(a) => Some(a),
            Slots::Table(_) => None,
        }
    }

    /// Writes `y_i` into `out` and returns the gradient evaluations spent (1 for the anchor layout).
    #[inline]
    pub fn read_into(&self, problem: &FiniteSumProblem, i: usize, out: &mut [f64]) -> usize {
        match &self.slots {
            Slots::Table(t) => {
                out.copy_from_slice(&t[i * self.dim..(i + 1) * self.dim]);
                0
            }
            Slots::Anchor(a) => {
                problem.gradient_component_into(i, a, out);
                1
            }
        }
    }

    /// Materializes every `y_i` (diagnostic; not counted as evaluations).
    pub fn values(&self, problem: &FiniteSumProblem) -> Vec<Vec<f64>> {
        match &self.slots {
            Slots::Table(t) => t.chunks_exact(self.dim).map(|c| c.to_vec()).collect(),
            Slots::Anchor(a) => (0..problem.n())
                .map(|i| {
                    let mut g = vec![0.0; self.dim];
                    problem.gradient_component_into(i, a, &mut g);
                    g
                })
                .collect(),
        }
    }

    /// Sets `y_i = ∇f_i(x)` for every `i` in `set` and returns the gradient evaluations spent.
    ///
    /// `reuse` carries an already computed `(i, ∇f_i(x))`; for the full table it saves one
    /// evaluation when `i` is in the set. The anchor layout always pays `n` for a refresh.
    pub fn apply_update(
        &mut self,
        problem: &FiniteSumProblem,
        set: &UpdateSet,
        x: &[f64],
        reuse: Option<(usize, &[f64])>,
    ) -> Result<usize, DualError> {
        let n = problem.n();
        let dim = self.dim;
        let evals = match &mut self.slots {
            Slots::Anchor(anchor) => match set {
                UpdateSet::Empty => return Ok(0),
                UpdateSet::All => {
                    anchor.copy_from_slice(x);
                    problem.gradient_sum_into(x, &mut self.sum);
                    n
                }
                _ => return Err(DualError::IncoherentUpdate),
            },
            Slots::Table(table) => {
                let mut evals = 0;
                let mut write = |i: usize, table: &mut [f64], sum: &mut [f64]| {
                    let slot = &mut table[i * dim..(i + 1) * dim];
                    linalg::axpy(-1.0, slot, sum);
                    match reuse {
                        Some((j, g)) if j == i => slot.copy_from_slice(g),
                        _ => {
                            problem.gradient_component_into(i, x, slot);
                            evals += 1;
                        }
                    }
                    linalg::axpy(1.0, slot, sum);
                };
                match set {
                    UpdateSet::Empty => return Ok(0),
                    UpdateSet::Single(i) => write(*i, table, &mut self.sum),
                    UpdateSet::All => (0..n).for_each(|i| write(i, table, &mut self.sum)),
                    UpdateSet::Some(v) => v.iter().for_each(|&i| write(i, table, &mut self.sum)),
                }
                evals
            }
        };
        self.updates_since_refresh += 1;
        if self.updates_since_refresh >= SUM_REFRESH_PERIOD {
            self.refresh_sum();
        }
        Ok(evals)
    }

    /// Recomputes the running sum of a full table from scratch.
    pub fn refresh_sum(&mut self) {
        if let Slots::Table(t) = &self.slots {
            self.sum = column_sum(t, self.dim);
        }
        self.updates_since_refresh = 0;
    }

    /// Largest coordinate gap between the running sum and a from-scratch sum.
    pub fn sum_drift(&self, problem: &FiniteSumProblem) -> f64 {
        let fresh = match &self.slots {
            Slots::Table(t) => column_sum(t, self.dim),
            Slots::Anchor(a) => {
                let mut s = vec![0.0; self.dim];
                problem.gradient_sum_into(a, &mut s);
                s
            }
        };
        fresh.iter().zip(&self.sum).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn column_sum(table: &[f64], dim: usize) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    for row in table.chunks_exact(dim) {
        linalg::axpy(1.0, row, &mut sum);
    }
    sum
}

/// Free-function form of [`DualStorage::read_into`].
pub fn dual_read(st: &DualStorage, problem: &FiniteSumProblem, i: usize) -> (Vec<f64>, usize) {
    let mut out = vec![0.0; problem.dim()];
    let evals = st.read_into(problem, i, &mut out);
    (out, evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::build_least_squares_dense;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn problem() -> FiniteSumProblem {
        let a = vec![vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, 0.7], vec![1.5, -1.0]];
        build_least_squares_dense(&a, &[1.0, -2.0, 0.3, 0.0], 0.0).unwrap()
    }

    #[test]
    fn frequencies_per_strategy() {
        let p = PrimalDistribution::custom(&[0.25, 0.75]).unwrap();
        assert_eq!(DualStrategy::Saga.expected_update_frequency(&p), vec![0.25, 0.75]);
        let p5 = PrimalDistribution::uniform(5).unwrap();
        assert_eq!(DualStrategy::lsvrg(0.1).unwrap().expected_update_frequency(&p5), vec![0.1; 5]);
        assert_eq!(DualStrategy::ilsvrg(0.1).unwrap().expected_update_frequency(&p5), vec![0.1; 5]);
        let p4 = PrimalDistribution::uniform(4).unwrap();
        let with = DualStrategy::qsaga(2, 4, Replacement::With).unwrap();
        assert_abs_diff_eq!(with.expected_update_frequency(&p4)[0], 0.4375, epsilon = 1e-15);
        let without = DualStrategy::qsaga(2, 4, Replacement::Without).unwrap();
        assert_eq!(without.expected_update_frequency(&p4), vec![0.5; 4]);
    }

    #[test]
    fn with_replacement_frequency_by_enumeration() {
        // all 16 ordered pairs from {0..3}; count those containing index 0
        let hits = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).filter(|&(a, b)| a == 0 || b == 0).count();
        assert_abs_diff_eq!(hits as f64 / 16.0, qsaga_frequency(2, 4, Replacement::With), epsilon = 1e-15);
    }

    #[test]
    fn coherence_flag() {
        assert!(DualStrategy::lsvrg(0.5).unwrap().is_coherent());
        assert!(!DualStrategy::Saga.is_coherent());
        assert!(!DualStrategy::ilsvrg(0.5).unwrap().is_coherent());
        assert!(!DualStrategy::qsaga(1, 3, Replacement::Without).unwrap().is_coherent());
    }

    #[test]
    fn parameter_validation() {
        assert_eq!(DualStrategy::lsvrg(0.0), Err(DualError::InvalidProbability(0.0)));
        assert_eq!(DualStrategy::ilsvrg(1.5), Err(DualError::InvalidProbability(1.5)));
        assert_eq!(DualStrategy::qsaga(0, 3, Replacement::With), Err(DualError::InvalidBatch { q: 0, n: 3 }));
        assert_eq!(DualStrategy::qsaga(4, 3, Replacement::With), Err(DualError::InvalidBatch { q: 4, n: 3 }));
    }

    #[test]
    fn batch_rounding() {
        assert_eq!(batch_for_frequency(2.4 / 100.0, 100), 2);
        assert_eq!(batch_for_frequency(2.6 / 100.0, 100), 3);
        assert_eq!(batch_for_frequency(0.001, 100), 1);
        assert_eq!(batch_for_frequency(1.0, 7), 7);
    }

    #[test]
    fn saga_refreshes_the_primal_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(DualStrategy::Saga.draw_update_set(5, 3, &mut rng), UpdateSet::Single(3));
        }
    }

    #[test]
    fn lsvrg_certain_coin_refreshes_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = DualStrategy::lsvrg(1.0).unwrap();
        assert!((0..100).all(|_| s.draw_update_set(6, 0, &mut rng) == UpdateSet::All));
    }

    #[test]
    fn lsvrg_sets_are_all_or_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = DualStrategy::lsvrg(0.3).unwrap();
        for _ in 0..10_000 {
            let set = s.draw_update_set(4, 1, &mut rng);
            assert!(set == UpdateSet::All || set == UpdateSet::Empty);
        }
    }

    #[test]
    fn ilsvrg_indices_are_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = DualStrategy::ilsvrg(0.5).unwrap();
        let iters = 1_000_000;
        let (mut c1, mut c2, mut c12) = (0.0, 0.0, 0.0);
        for _ in 0..iters {
            let set = s.draw_update_set(2, 0, &mut rng);
            let (a, b) = (set.contains(0) as u8 as f64, set.contains(1) as u8 as f64);
            c1 += a;
            c2 += b;
            c12 += a * b;
        }
        let m = iters as f64;
        let (f1, f2) = (c1 / m, c2 / m);
        let sigma = (0.25 / m).sqrt();
        assert!((f1 - 0.5).abs() < 3.0 * sigma);
        assert!((f2 - 0.5).abs() < 3.0 * sigma);
        let cov = c12 / m - f1 * f2;
        let corr = cov / (f1 * (1.0 - f1) * f2 * (1.0 - f2)).sqrt();
        assert!(corr.abs() < 0.005, "correlation {corr}");
    }

    #[test]
    fn empirical_frequencies_match_eta() {
        let n = 5;
        let p = PrimalDistribution::custom(&[0.1, 0.2, 0.3, 0.25, 0.15]).unwrap();
        let strategies = [
            DualStrategy::Saga,
            DualStrategy::lsvrg(0.2).unwrap(),
            DualStrategy::ilsvrg(0.35).unwrap(),
            DualStrategy::qsaga(2, n, Replacement::Without).unwrap(),
            DualStrategy::qsaga(3, n, Replacement::With).unwrap(),
        ];
        let iters = 100_000;
        for (k, s) in strategies.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
            let mut counts = vec![0usize; n];
            for _ in 0..iters {
                let i = p.draw(&mut rng);
                for j in s.draw_update_set(n, i, &mut rng).to_vec(n) {
                    counts[j] += 1;
                }
            }
            for (j, eta) in s.expected_update_frequency(&p).iter().enumerate() {
                let f = counts[j] as f64 / iters as f64;
                let sigma = (eta * (1.0 - eta) / iters as f64).sqrt().max(1e-12);
                assert!((f - eta).abs() <= 3.0 * sigma + 1e-12, "{s:?} index {j}: {f} vs {eta}");
            }
        }
    }

    #[test]
    fn empty_update_is_free_and_inert() {
        let p = problem();
        let (mut st, evals) = DualStorage::coherent_at(&p, StorageLayout::FullTable, &[0.1, 0.2]);
        assert_eq!(evals, 4);
        let before = st.values(&p);
        assert_eq!(st.apply_update(&p, &UpdateSet::Empty, &[5.0, 5.0], None).unwrap(), 0);
        assert_eq!(st.values(&p), before);
        let (mut an, _) = DualStorage::coherent_at(&p, StorageLayout::Anchor, &[0.1, 0.2]);
        assert_eq!(an.apply_update(&p, &UpdateSet::Empty, &[5.0, 5.0], None).unwrap(), 0);
        assert_eq!(an.anchor().unwrap(), &[0.1, 0.2]);
    }

    #[test]
    fn single_update_replaces_slot_and_shifts_sum() {
        let p = problem();
        let (mut st, _) = DualStorage::coherent_at(&p, StorageLayout::FullTable, &[0.0, 0.0]);
        let old_sum = st.sum().to_vec();
        let old_y2 = dual_read(&st, &p, 2).0;
        let x = [1.0, -1.0];
        assert_eq!(st.apply_update(&p, &UpdateSet::Single(2), &x, None).unwrap(), 1);
        let g = p.gradient_component(2, &x).unwrap();
        assert_eq!(dual_read(&st, &p, 2).0, g);
        for d in 0..2 {
            assert_abs_diff_eq!(st.sum()[d] - old_sum[d], g[d] - old_y2[d], epsilon = 1e-14);
        }
    }

    #[test]
    fn reused_gradient_costs_nothing() {
        let p = problem();
        let (mut st, _) = DualStorage::coherent_at(&p, StorageLayout::FullTable, &[0.0, 0.0]);
        let x = [0.4, 0.4];
        let g = p.gradient_component(1, &x).unwrap();
        assert_eq!(st.apply_update(&p, &UpdateSet::Single(1), &x, Some((1, &g))).unwrap(), 0);
        assert_eq!(st.apply_update(&p, &UpdateSet::All, &x, Some((1, &g))).unwrap(), 3);
    }

    #[test]
    fn full_update_sum_matches_full_gradient() {
        let p = problem();
        let x = [0.3, -0.8];
        for layout in [StorageLayout::FullTable, StorageLayout::Anchor] {
            let (mut st, _) = DualStorage::coherent_at(&p, layout, &[0.0, 0.0]);
            let evals = st.apply_update(&p, &UpdateSet::All, &x, None).unwrap();
            assert_eq!(evals, 4);
            let grad = p.full_gradient(&x);
            for d in 0..2 {
                assert_abs_diff_eq!(st.sum()[d], 4.0 * grad[d], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn anchor_rejects_partial_sets() {
        let p = problem();
        let (mut st, _) = DualStorage::coherent_at(&p, StorageLayout::Anchor, &[0.0, 0.0]);
        assert_eq!(
            st.apply_update(&p, &UpdateSet::Single(0), &[1.0, 1.0], None),
            Err(DualError::IncoherentUpdate)
        );
        assert_eq!(
            st.apply_update(&p, &UpdateSet::Some(vec![0, 2]), &[1.0, 1.0], None),
            Err(DualError::IncoherentUpdate)
        );
    }

    #[test]
    fn reads_agree_across_layouts() {
        let p = problem();
        let anchor = [0.25, -1.5];
        let (table, _) = DualStorage::coherent_at(&p, StorageLayout::FullTable, &anchor);
        let (an, _) = DualStorage::coherent_at(&p, StorageLayout::Anchor, &anchor);
        for i in 0..p.n() {
            let (a, ea) = dual_read(&table, &p, i);
            let (b, eb) = dual_read(&an, &p, i);
            assert_eq!((ea, eb), (0, 1));
            assert_eq!(a, p.gradient_component(i, &anchor).unwrap());
            for d in 0..2 {
                assert_abs_diff_eq!(a[d], b[d], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn running_sum_drift_stays_small() {
        let p = problem();
        let (mut st, _) = DualStorage::coherent_at(&p, StorageLayout::FullTable, &[0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = DualStrategy::ilsvrg(0.4).unwrap();
        for _ in 0..(SUM_REFRESH_PERIOD - 1) {
            let x = [rng.random::<f64>() * 10.0 - 5.0, rng.random::<f64>() * 10.0 - 5.0];
            let set = s.draw_update_set(4, 0, &mut rng);
            st.apply_update(&p, &set, &x, None).unwrap();
        }
        assert!(st.sum_drift(&p) < 1e-8);
    }
}
