//! Primal sampling distributions over component indices.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

/// Tolerance on `Σp_i = 1` for user-supplied probabilities.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("constant at index {0} is not positive and finite")]
    NonPositiveConstant(usize),
    #[error("distribution must have at least one outcome")]
    Empty,
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("alias table construction failed")]
    AliasTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingLabel {
    Uniform,
    Lipschitz,
    ImprovedSaga,
    Custom,
}

/// Probabilities `p_1..p_n > 0` with an alias table for O(1) draws.
#[derive(Debug, Clone)]
pub struct PrimalDistribution {
    probabilities: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
    label: SamplingLabel,
}

impl PrimalDistribution {
    /// Normalizes positive weights into a distribution.
    pub fn from_weights(weights: &[f64], label: SamplingLabel) -> Result<Self, SamplingError> {
        if weights.is_empty() {
            return Err(SamplingError::Empty);
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(SamplingError::NonPositiveConstant(i));
        }
        // factor out the largest weight before summing
        let wmax = weights.iter().fold(0.0, |m: f64, &w| m.max(w));
        let scaled: Vec<f64> = weights.iter().map(|w| w / wmax).collect();
        let total: f64 = scaled.iter().sum();
        let probabilities: Vec<f64> = scaled.iter().map(|w| w / total).collect();
        let alias =
            WeightedAliasIndex::new(probabilities.clone()).map_err(|_| SamplingError::AliasTable)?;
        Ok(PrimalDistribution { probabilities, alias, label })
    }

    /// Uses `p` as given after checking `Σp_i = 1` to [`NORMALIZATION_TOLERANCE`].
    pub fn custom(p: &[f64]) -> Result<Self, SamplingError> {
        if p.is_empty() {
            return Err(SamplingError::Empty);
        }
        if let Some(i) = p.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(SamplingError::NonPositiveConstant(i));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(SamplingError::NotNormalized(total));
        }
        Self::from_weights(p, SamplingLabel::Custom)
    }

    pub fn uniform(n: usize) -> Result<Self, SamplingError> {
        if n == 0 {
            return Err(SamplingError::Empty);
        }
        let p = 1.0 / n as f64;
        let probabilities = alloc::vec![p; n];
        let alias =
            WeightedAliasIndex::new(probabilities.clone()).map_err(|_| SamplingError::AliasTable)?;
        Ok(PrimalDistribution { probabilities, alias, label: SamplingLabel::Uniform })
    }

    /// `p_i = L_i / Σ L_j`.
    pub fn lipschitz(lipschitz: &[f64]) -> Result<Self, SamplingError> {
        Self::from_weights(lipschitz, SamplingLabel::Lipschitz)
    }

    /// `p_i ∝ 4L_i + nμ + √((4L_i)² + (nμ)²)`; also returns `S`, the mean weight.
    pub fn improved_saga(lipschitz: &[f64], mu: f64) -> Result<(Self, f64), SamplingError> {
        if let Some(i) = lipschitz.iter().position(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(SamplingError::NonPositiveConstant(i));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(SamplingError::NonPositiveConstant(lipschitz.len()));
        }
        let weights = improved_saga_weights(lipschitz, mu);
        let s = weights.iter().sum::<f64>() / weights.len().max(1) as f64;
        let dist = if weights.iter().all(|&w| w == weights[0]) {
            let mut d = Self::uniform(weights.len())?;
            d.label = SamplingLabel::ImprovedSaga;
            d
        } else {
            Self::from_weights(&weights, SamplingLabel::ImprovedSaga)?
        };
        Ok((dist, s))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn p(&self, i: usize) -> f64 {
        self.probabilities[i]
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn label(&self) -> SamplingLabel {
        self.label
    }

    pub fn min_probability(&self) -> f64 {
        self.probabilities.iter().fold(f64::INFINITY, |m, &p| m.min(p))
    }

    /// Draws an index with probability `p_i`.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.probabilities.len() == 1 {
            return 0;
        }
        self.alias.sample(rng)
    }
}

/// Unnormalized weights `4L_i + nμ + √((4L_i)² + (nμ)²)`.
pub fn improved_saga_weights(lipschitz: &[f64], mu: f64) -> Vec<f64> {
    let nmu = lipschitz.len() as f64 * mu;
    lipschitz
        .iter()
        .map(|&l| 4.0 * l + nmu + libm::hypot(4.0 * l, nmu))
        .collect()
}
