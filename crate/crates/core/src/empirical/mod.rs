//! Empirical score distributions.
//!
//! [`EmpiricalDistribution`] keeps its values sorted so that the ECDF,
//! quantiles and binned masses are all binary searches. Quantiles follow the
//! inf definition `Q(p) = inf { y : F(y) >= p }` without interpolation, which
//! keeps the relative-distribution identities exact.

mod density;

pub use density::{
    estimate_density, estimate_density_on, shared_densities, DensityConfig, DensityEstimate,
    Estimator,
};
pub(crate) use density::trapezoid as trapezoid_rule;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total of user-supplied weights after normalization.
const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A sorted sample of scores with optional normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
    /// Normalized weights aligned with `values`; `None` means uniform.
    weights: Option<Vec<f64>>,
    /// Running sum of `weights`, last entry forced to exactly 1.
    cumulative: Option<Vec<f64>>,
}

impl EmpiricalDistribution {
    /// Builds an equally weighted distribution. Values are sorted.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self {
            values,
            weights: None,
            cumulative: None,
        })
    }

    /// Builds a weighted distribution. Weights must be nonnegative with a
    /// positive total; they are normalized to sum to one.
    pub fn weighted(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: weights.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weight at position {i} is {}",
                weights[i]
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidWeights("weights sum to zero".into()));
        }

        let mut pairs: Vec<(f64, f64)> = values.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (values, weights): (Vec<f64>, Vec<f64>) =
            pairs.into_iter().map(|(v, w)| (v, w / total)).unzip();

        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        let sum = acc;
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "normalized weights sum to {sum}"
            )));
        }
        for c in cumulative.iter_mut() {
            *c = c.min(1.0);
        }
        *cumulative.last_mut().expect("nonempty") = 1.0;

        Ok(Self {
            values,
            weights: Some(weights),
            cumulative: Some(cumulative),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; construction rejects empty samples.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// True when every value is the same.
    pub fn is_degenerate(&self) -> bool {
        self.min() == self.max()
    }

    pub fn mean(&self) -> f64 {
        match &self.weights {
            None => self.values.iter().sum::<f64>() / self.values.len() as f64,
            Some(w) => self.values.iter().zip(w).map(|(v, w)| v * w).sum(),
        }
    }

    /// Population (weighted) standard deviation.
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let var = match &self.weights {
            None => {
                self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / self.values.len() as f64
            }
            Some(w) => self
                .values
                .iter()
                .zip(w)
                .map(|(v, w)| w * (v - mean).powi(2))
                .sum(),
        };
        var.sqrt()
    }

    /// Probability mass of the first `k` sorted values.
    fn mass_of_first(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match &self.cumulative {
            None => k as f64 / self.values.len() as f64,
            Some(cum) => cum[k - 1],
        }
    }

    /// Right-continuous ECDF: weighted proportion of values `<= y`.
    pub fn ecdf(&self, y: f64) -> f64 {
        self.mass_of_first(self.values.partition_point(|&v| v <= y))
    }

    /// Weighted proportion of values strictly below `y`.
    pub fn mass_below(&self, y: f64) -> f64 {
        self.mass_of_first(self.values.partition_point(|&v| v < y))
    }

    /// Inf-quantile `inf { y in values : ecdf(y) >= p }`; `p = 0` gives the minimum.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let n = self.values.len();
        if p <= 0.0 {
            return self.values[0];
        }
        let k = match &self.cumulative {
            Some(cum) => cum.partition_point(|&c| c < p) + 1,
            None => {
                // smallest k in 1..=n with k/n >= p
                let (mut lo, mut hi) = (1usize, n);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if (mid as f64 / n as f64) >= p {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                lo
            }
        };
        self.values[k.min(n) - 1]
    }

    /// Table of the 101 inf-quantiles at `r / 100`.
    pub fn percentile_table(&self) -> PercentileTable {
        let entries = (0..=100)
            .map(|r| self.quantile_unchecked(r as f64 / 100.0))
            .collect();
        PercentileTable { entries }
    }

    /// Applies `f` to every value, keeping weights. `f` should be monotone
    /// for the weights to stay attached to the intended values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        match &self.weights {
            None => Self::new(values),
            Some(w) => Self::weighted(values, w.clone()),
        }
    }
}

/// Distribution described by its percentiles `r = 0..=100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PercentileTable {
    entries: Vec<f64>,
}

impl PercentileTable {
    pub const LEN: usize = 101;

    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() != Self::LEN {
            return Err(Error::TableLength(entries.len()));
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let decreasing: Vec<usize> = (1..Self::LEN)
            .filter(|&r| entries[r] < entries[r - 1])
            .collect();
        if !decreasing.is_empty() {
            return Err(Error::NonMonotoneTable(decreasing));
        }
        Ok(Self { entries })
    }

    pub fn from_fn(f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((0..Self::LEN).map(f).collect())
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, r: usize) -> f64 {
        self.entries[r]
    }
}

impl TryFrom<Vec<f64>> for PercentileTable {
    type Error = Error;

    fn try_from(entries: Vec<f64>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<PercentileTable> for Vec<f64> {
    fn from(table: PercentileTable) -> Self {
        table.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ecdf_examples() {
        let d = dist(&[1.0, 2.0, 3.0]);
        assert_eq!(d.ecdf(0.5), 0.0);
        assert_eq!(d.ecdf(3.0), 1.0);
        // two of three values are <= 2
        assert_eq!(d.ecdf(2.0), 2.0 / 3.0);
        assert_eq!(d.ecdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn quantile_examples() {
        let d = dist(&[3.0, 1.0, 2.0]);
        assert_eq!(d.quantile(0.5).unwrap(), 2.0);
        assert_eq!(d.quantile(1.0).unwrap(), 3.0);
        assert_eq!(d.quantile(0.0).unwrap(), 1.0);
        let c = dist(&[5.0, 5.0, 5.0]);
        for p in [1e-9, 0.3, 0.9, 1.0] {
            assert_eq!(c.quantile(p).unwrap(), 5.0);
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        let d = dist(&[1.0, 2.0]);
        assert!(matches!(d.quantile(-0.1), Err(Error::ProbabilityOutOfRange(_))));
        assert!(matches!(d.quantile(1.5), Err(Error::ProbabilityOutOfRange(_))));
        assert!(d.quantile(f64::NAN).is_err());
    }

    #[test]
    fn percentile_table_of_uniform_grid_is_identity() {
        let d = EmpiricalDistribution::new((0..=100).map(f64::from).collect()).unwrap();
        let t = d.percentile_table();
        for r in 0..=100 {
            assert_eq!(t.get(r), r as f64, "r = {r}");
        }
    }

    #[test]
    fn percentile_table_of_constant_sample() {
        let t = dist(&[7.5; 13]).percentile_table();
        assert!(t.entries().iter().all(|&v| v == 7.5));
    }

    #[test]
    fn weighted_ecdf_and_quantile() {
        let d = EmpiricalDistribution::weighted(vec![3.0, 1.0, 2.0], vec![2.0, 1.0, 1.0]).unwrap();
        assert_eq!(d.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(d.ecdf(1.0), 0.25);
        assert_eq!(d.ecdf(2.0), 0.5);
        assert_eq!(d.ecdf(3.0), 1.0);
        assert_eq!(d.quantile(0.5).unwrap(), 2.0);
        assert_eq!(d.quantile(0.51).unwrap(), 3.0);
        assert!((d.mean() - 2.25).abs() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(EmpiricalDistribution::new(vec![]), Err(Error::EmptySample)));
        assert!(matches!(
            EmpiricalDistribution::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
        assert!(EmpiricalDistribution::weighted(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(EmpiricalDistribution::weighted(vec![1.0, 2.0], vec![1.0, -1.0]).is_err());
        assert!(EmpiricalDistribution::weighted(vec![1.0, 2.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn percentile_table_validation() {
        assert!(matches!(PercentileTable::new(vec![0.0; 100]), Err(Error::TableLength(100))));
        let mut e: Vec<f64> = (0..=100).map(f64::from).collect();
        e[40] = 10.0;
        match PercentileTable::new(e) {
            Err(Error::NonMonotoneTable(rs)) => assert_eq!(rs, vec![40]),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn sample_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50.0f64..50.0, 1..60).prop_map(|mut v| {
            // coarse rounding produces ties
            for x in v.iter_mut() {
                *x = (*x * 2.0).round() / 2.0;
            }
            v
        })
    }

    proptest! {
        #[test]
        fn ecdf_and_quantile_are_monotone(v in sample_strategy(), a in -60.0f64..60.0, b in -60.0f64..60.0,
                                          p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
            let d = EmpiricalDistribution::new(v).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(d.ecdf(lo) <= d.ecdf(hi));
            let (plo, phi) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(d.quantile(plo).unwrap() <= d.quantile(phi).unwrap());
        }

        #[test]
        fn galois_consistency(v in sample_strategy(), p in 0.0f64..=1.0) {
            let d = EmpiricalDistribution::new(v).unwrap();
            for &y in d.values() {
                prop_assert!(d.quantile(d.ecdf(y)).unwrap() <= y);
            }
            if p > 0.0 {
                prop_assert!(d.ecdf(d.quantile(p).unwrap()) >= p);
            }
        }

        #[test]
        fn weighted_galois_consistency(v in prop::collection::vec((-50.0f64..50.0, 0.01f64..5.0), 1..40),
                                       p in 0.0f64..=1.0) {
            let (values, weights): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let d = EmpiricalDistribution::weighted(values, weights).unwrap();
            for &y in d.values() {
                prop_assert!(d.quantile(d.ecdf(y)).unwrap() <= y);
            }
            if p > 0.0 {
                prop_assert!(d.ecdf(d.quantile(p).unwrap()) >= p);
            }
        }

        #[test]
        fn percentile_tables_are_nondecreasing(v in sample_strategy()) {
            let t = EmpiricalDistribution::new(v).unwrap().percentile_table();
            prop_assert!(t.entries().windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
