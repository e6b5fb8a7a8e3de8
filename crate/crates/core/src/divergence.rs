//! Distances between score distributions.
//!
//! All logarithms are natural, so divergences are in nats.

use serde::{Deserialize, Serialize};

use crate::empirical::{shared_densities, DensityConfig, DensityEstimate, EmpiricalDistribution};
use crate::error::{Error, Result};
use crate::reldist::rank_area;

const DISCRETE_SUM_TOLERANCE: f64 = 1e-9;

/// KL magnitude with the direction of the observed group relative to its
/// reference: negative when the group sits below the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedKL {
    magnitude: f64,
    sign: i8,
}

impl SignedKL {
    pub fn new(magnitude: f64, sign: i8) -> Result<Self> {
        if !(magnitude >= 0.0) || magnitude.is_infinite() {
            return Err(Error::InvalidParameter(format!(
                "KL magnitude must be finite and nonnegative, got {magnitude}"
            )));
        }
        if !(-1..=1).contains(&sign) {
            return Err(Error::InvalidParameter(format!("sign must be -1, 0 or 1, got {sign}")));
        }
        Ok(Self { magnitude, sign })
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn value(&self) -> f64 {
        f64::from(self.sign) * self.magnitude
    }
}

/// Probabilities of a finite set of outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probabilities: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        if let Some(i) = probabilities.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "probability at position {i} is {}",
                probabilities[i]
            )));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > DISCRETE_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probabilities })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        Ok(Self {
            probabilities: vec![1.0 / n as f64; n],
        })
    }

    /// Shares `x_i / sum(x)` of a vector of positive amounts.
    pub fn shares(amounts: &[f64]) -> Result<Self> {
        validate_incomes(amounts)?;
        let total: f64 = amounts.iter().sum();
        Self::new(amounts.iter().map(|x| x / total).collect())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// Result of a discrete divergence, which is infinite when `p` puts mass
/// where `q` has none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn is_finite(&self) -> bool {
        matches!(self, Divergence::Finite(_))
    }

    /// Numeric value, `f64::INFINITY` for the infinite case.
    pub fn value(&self) -> f64 {
        match *self {
            Divergence::Finite(v) => v,
            Divergence::Infinite => f64::INFINITY,
        }
    }
}

fn kl_integrand(f: &DensityEstimate, f0: &DensityEstimate) -> Result<Vec<f64>> {
    if !f.same_grid(f0) {
        return Err(Error::GridMismatch);
    }
    Ok(f.density()
        .iter()
        .zip(f0.density())
        .map(|(&p, &q)| p * (p / q).ln())
        .collect())
}

/// `∫ f log(f / f0) dy` by the trapezoid rule over the shared grid.
pub fn kl_divergence(f: &DensityEstimate, f0: &DensityEstimate) -> Result<f64> {
    let integrand = kl_integrand(f, f0)?;
    let kl = crate::empirical::trapezoid_rule(f.grid(), &integrand);
    // Gibbs' inequality holds for the trapezoid weights; only rounding goes below zero
    Ok(kl.max(0.0))
}

/// The same divergence computed in the rank domain as `∫ g(r) log g(r) dr`
/// with the midpoint rule on `points` cells, `g` being the relative density.
///
/// Only the part of the observed density inside the reference support
/// contributes, so this agrees with [`kl_divergence`] when the observed
/// sample has negligible mass outside the reference range.
pub fn kl_rank_domain(
    f: &DensityEstimate,
    f0: &DensityEstimate,
    reference: &EmpiricalDistribution,
    points: usize,
) -> Result<f64> {
    if !f.same_grid(f0) {
        return Err(Error::GridMismatch);
    }
    if points == 0 {
        return Err(Error::InvalidParameter("rank grid needs at least one cell".into()));
    }
    let total: f64 = (0..points)
        .map(|k| {
            let y = reference.quantile_unchecked((k as f64 + 0.5) / points as f64);
            let g = f.evaluate(y) / f0.evaluate(y);
            if g > 0.0 {
                g * g.ln()
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / points as f64)
}

/// `Σ p_i log(p_i / q_i)` with `0 log(0 / q) = 0`.
pub fn kl_discrete(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<Divergence> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut total = 0.0;
    for (&pi, &qi) in p.probabilities().iter().zip(q.probabilities()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(Divergence::Infinite);
        }
        total += pi * (pi / qi).ln();
    }
    Ok(Divergence::Finite(total.max(0.0)))
}

/// KL of `obs` from `reference` on a shared grid, signed by the rank area.
pub fn signed_kl(
    obs: &EmpiricalDistribution,
    reference: &EmpiricalDistribution,
    config: &DensityConfig,
) -> Result<SignedKL> {
    let (f, f0) = shared_densities(obs, reference, config)?;
    let magnitude = kl_divergence(&f, &f0)?;
    let area = rank_area(obs, reference);
    // below the reference means positive rank area and a negative value
    let sign = if area > 0.0 {
        -1
    } else if area < 0.0 {
        1
    } else {
        0
    };
    SignedKL::new(magnitude, sign)
}

/// Area between the two CDFs, which is the difference of means.
pub fn mean_gap_area(obs: &EmpiricalDistribution, reference: &EmpiricalDistribution) -> f64 {
    obs.mean() - reference.mean()
}

/// Shannon entropy `-Σ p_i log p_i`.
pub fn entropy(p: &DiscreteDistribution) -> f64 {
    -p.probabilities()
        .iter()
        .filter(|&&pi| pi > 0.0)
        .map(|&pi| pi * pi.ln())
        .sum::<f64>()
}

/// Maximum entropy minus observed entropy.
pub fn redundancy(p: &DiscreteDistribution) -> f64 {
    (p.len() as f64).ln() - entropy(p)
}

fn validate_incomes(incomes: &[f64]) -> Result<()> {
    if incomes.is_empty() {
        return Err(Error::InvalidParameter("no incomes".into()));
    }
    if let Some(i) = incomes.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::NonPositiveIncome {
            index: i,
            value: incomes[i],
        });
    }
    Ok(())
}

/// Theil index `Σ s_i log(n s_i)` over income shares `s_i`, i.e. the KL
/// divergence of the shares from the uniform distribution.
pub fn theil_index(incomes: &[f64]) -> Result<f64> {
    validate_incomes(incomes)?;
    let n = incomes.len() as f64;
    let total: f64 = incomes.iter().sum();
    let t: f64 = incomes
        .iter()
        .map(|x| {
            let share = x / total;
            share * (share / (1.0 / n)).ln()
        })
        .sum();
    Ok(t.max(0.0))
}

/// Expected likelihood-ratio statistic `E[2 log(f / f0)]` under `f`.
pub fn expected_lr(f: &DensityEstimate, f0: &DensityEstimate) -> Result<f64> {
    Ok(2.0 * kl_divergence(f, f0)?)
}
