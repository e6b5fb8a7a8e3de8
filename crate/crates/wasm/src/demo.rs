//! Plain Rust versions of the demo operations, usable without a browser.

use edukl::divergence::signed_kl;
use edukl::empirical::{DensityConfig, EmpiricalDistribution, PercentileTable};
use edukl::levels::{classify_kl, CutPoints, KLLevel};
use edukl::reference::{fit_translation_scale, sample_from_percentiles, translate_percentiles, TRANSLATION_ROWS};
use edukl::reldist::{rank_area, relative_cdf_curve};
use edukl::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const CURVE_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `G(r)` at `CURVE_POINTS` evenly spaced ranks.
    pub curve: Vec<f64>,
    pub signed_kl: f64,
    pub rank_area: f64,
    pub label: KLLevel,
}

fn normal_sample(mean: f64, sd: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<EmpiricalDistribution> {
    let d = Normal::new(mean, sd)
        .map_err(|e| edukl::Error::InvalidParameter(format!("normal({mean}, {sd}): {e}")))?;
    EmpiricalDistribution::new((0..n).map(|_| d.sample(rng)).collect())
}

/// Compares `N(shift, scale^2)` against a standard normal reference, `n` draws each.
pub fn compare_normal(shift: f64, scale: f64, n: usize, seed: u64) -> Result<Comparison> {
    if !(scale > 0.0 && shift.is_finite()) {
        return Err(edukl::Error::InvalidParameter(format!("shift {shift}, scale {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = normal_sample(0.0, 1.0, n, &mut rng)?;
    let obs = normal_sample(shift, scale, n, &mut rng)?;
    let kl = signed_kl(&obs, &reference, &DensityConfig::kde())?;
    Ok(Comparison {
        curve: relative_cdf_curve(&obs, &reference, CURVE_POINTS).into_iter().map(|(_, g)| g).collect(),
        signed_kl: kl.value(),
        rank_area: rank_area(&obs, &reference),
        label: classify_kl(kl.value(), &CutPoints::TABLE2),
    })
}

/// Base percentiles and shifts through the published ninth-year rows, linear
/// in between and extended with the end slopes and end shifts.
pub fn published_tables() -> ([f64; 101], [f64; 101]) {
    let rows = &TRANSLATION_ROWS;
    let mut base = [0.0; 101];
    let mut delta = [0.0; 101];
    for p in 0..=100 {
        let i = rows.partition_point(|r| r.percentile < p).clamp(1, rows.len() - 1);
        let (a, b) = (&rows[i - 1], &rows[i]);
        let w = (p as f64 - a.percentile as f64) / (b.percentile - a.percentile) as f64;
        base[p] = a.base + (b.base - a.base) * w;
        delta[p] = (a.delta + (b.delta - a.delta) * w.clamp(0.0, 1.0)).max(0.0);
    }
    (base, delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDemo {
    /// Translated percentiles 0..=100.
    pub table: Vec<f64>,
    /// Translated values at the published rows, in row order.
    pub rows: Vec<f64>,
    /// Percentiles 0..=100 of the drawn sample.
    pub sample_table: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

/// Translates the published tables with scale `s` and samples `n` draws.
pub fn reference_demo(s: f64, n: usize, seed: u64) -> Result<ReferenceDemo> {
    let (base, delta) = published_tables();
    let base = PercentileTable::new(base.to_vec())?;
    let table = translate_percentiles(&base, &delta, s)?;
    let sample = sample_from_percentiles(&table, n, seed)?;
    Ok(ReferenceDemo {
        rows: TRANSLATION_ROWS.iter().map(|r| table.get(r.percentile)).collect(),
        table: table.entries().to_vec(),
        sample_table: sample.percentile_table().entries().to_vec(),
        mean: sample.mean(),
        sd: sample.std_dev(),
    })
}

pub fn fitted_scale() -> f64 {
    fit_translation_scale(&TRANSLATION_ROWS).expect("published rows have nonzero shifts")
}

/// Band for `value` under the given thresholds.
pub fn classify(value: f64, thresholds: [f64; 4]) -> Result<KLLevel> {
    Ok(classify_kl(value, &CutPoints::new(thresholds)?))
}
