//! Relative distribution of an observed sample with respect to a reference.
//!
//! Each observed score is replaced by its rank `R = F0(Y)` in the reference.
//! The CDF of the ranks is `G(r) = F(Q0(r))`, and identical distributions give
//! uniform ranks with `G(r) = r`.

use crate::empirical::{DensityEstimate, EmpiricalDistribution};
use crate::error::{Error, Result};

/// Ranks of observed students in the reference distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeSample {
    ranks: Vec<f64>,
    weights: Option<Vec<f64>>,
    reference_id: Option<String>,
}

impl RelativeSample {
    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    pub fn reference_id(&self) -> Option<&str> {
        self.reference_id.as_deref()
    }

    pub fn with_reference_id(mut self, id: impl Into<String>) -> Self {
        self.reference_id = Some(id.into());
        self
    }

    /// Mean rank, weighted by the observed sample's weights when present.
    pub fn mean_rank(&self) -> f64 {
        match &self.weights {
            None => self.ranks.iter().sum::<f64>() / self.ranks.len() as f64,
            Some(w) => self.ranks.iter().zip(w).map(|(r, w)| r * w).sum(),
        }
    }
}

pub fn relative_ranks(
    obs: &EmpiricalDistribution,
    reference: &EmpiricalDistribution,
) -> RelativeSample {
    RelativeSample {
        ranks: obs.values().iter().map(|&y| reference.ecdf(y)).collect(),
        weights: obs.weights().map(<[f64]>::to_vec),
        reference_id: None,
    }
}

/// `G(r) = F(Q0(r))`.
pub fn relative_cdf(
    obs: &EmpiricalDistribution,
    reference: &EmpiricalDistribution,
    r: f64,
) -> Result<f64> {
    Ok(obs.ecdf(reference.quantile(r)?))
}

/// `G` sampled at `points` evenly spaced ranks from 0 to 1 inclusive.
pub fn relative_cdf_curve(
    obs: &EmpiricalDistribution,
    reference: &EmpiricalDistribution,
    points: usize,
) -> Vec<(f64, f64)> {
    let last = points.max(2) - 1;
    (0..=last)
        .map(|k| {
            let r = k as f64 / last as f64;
            (r, obs.ecdf(reference.quantile_unchecked(r)))
        })
        .collect()
}

/// Relative density `g(r) = f(Q0(r)) / f0(Q0(r))`.
pub fn relative_density(
    obs_density: &DensityEstimate,
    ref_density: &DensityEstimate,
    reference: &EmpiricalDistribution,
    r: f64,
) -> Result<f64> {
    if !obs_density.same_grid(ref_density) {
        return Err(Error::GridMismatch);
    }
    let y = reference.quantile(r)?;
    Ok(obs_density.evaluate(y) / ref_density.evaluate(y))
}

/// Area between `G(r)` and the diagonal, `1/2 - E[R]`.
///
/// Positive when the observed group sits below the reference; the range is
/// `[-1/2, 1/2]`. Equals the integral of `G(r) - r` over `[0, 1]` when no
/// observed value coincides with a reference value.
pub fn rank_area(obs: &EmpiricalDistribution, reference: &EmpiricalDistribution) -> f64 {
    0.5 - relative_ranks(obs, reference).mean_rank()
}
