//! Per-municipality level and gap indicators.

use std::collections::BTreeMap;

use serde::Serialize;

use super::config::PipelineConfig;
use super::eligibility::{eligible_for_gap, eligible_for_level, response_rate, Eligibility};
use super::records::StudentRecord;
use super::ses::{national_ses_boundaries, split_ses_groups, SesBoundaries};
use super::Dataset;
use crate::divergence::{signed_kl, SignedKL};
use crate::empirical::EmpiricalDistribution;
use crate::levels::{level_profile, CutPoints, KLLevel, LevelProfile};
use crate::reldist::relative_cdf_curve;

/// Points of the relative CDF kept per municipality.
pub const CURVE_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MunicipalityIndicator {
    pub municipality_id: String,
    pub n_students: usize,
    pub response_rate: f64,
    pub n_low_ses: usize,
    pub n_high_ses: usize,
    pub level: Eligibility,
    pub level_kl: Option<SignedKL>,
    pub level_label: Option<KLLevel>,
    /// Level KL per cycle, when requested.
    pub level_by_year: Vec<(i32, SignedKL)>,
    pub gap: Eligibility,
    pub gap_kl: Option<SignedKL>,
    pub gap_label: Option<KLLevel>,
    /// `G(r)` against the reference on an even grid of [`CURVE_POINTS`] ranks.
    #[serde(skip)]
    pub relative_cdf: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub indicators: Vec<MunicipalityIndicator>,
    pub ses_boundaries: BTreeMap<i32, SesBoundaries>,
}

fn ineligible(reason: String) -> Eligibility {
    Eligibility {
        ok: false,
        reasons: vec![reason],
    }
}

fn municipality_indicator(
    id: &str,
    records: &[StudentRecord],
    reference: &EmpiricalDistribution,
    cutpoints: &CutPoints,
    bounds: &BTreeMap<i32, SesBoundaries>,
    config: &PipelineConfig,
) -> MunicipalityIndicator {
    let groups = split_ses_groups(records, bounds);
    let mut ind = MunicipalityIndicator {
        municipality_id: id.to_string(),
        n_students: records.len(),
        response_rate: response_rate(records),
        n_low_ses: groups.low.len(),
        n_high_ses: groups.high.len(),
        level: eligible_for_level(records, &config.cycles, &config.eligibility),
        level_kl: None,
        level_label: None,
        level_by_year: Vec::new(),
        gap: eligible_for_gap(records, &groups, &config.eligibility),
        gap_kl: None,
        gap_label: None,
        relative_cdf: None,
    };

    if ind.level.ok {
        let scores = EmpiricalDistribution::new(records.iter().map(|r| r.score).collect());
        match scores.and_then(|obs| Ok((signed_kl(&obs, reference, &config.density)?, obs))) {
            Ok((kl, obs)) => {
                ind.level_kl = Some(kl);
                ind.level_label = Some(cutpoints.classify(kl.value()));
                ind.relative_cdf = Some(
                    relative_cdf_curve(&obs, reference, CURVE_POINTS)
                        .into_iter()
                        .map(|(_, g)| g)
                        .collect(),
                );
            }
            Err(e) => ind.level = ineligible(format!("level KL not computable: {e}")),
        }
        if ind.level.ok && config.per_year_level {
            for &year in &config.cycles {
                let scores = records.iter().filter(|r| r.year == year).map(|r| r.score).collect();
                if let Ok(kl) = EmpiricalDistribution::new(scores)
                    .and_then(|obs| signed_kl(&obs, reference, &config.density))
                {
                    ind.level_by_year.push((year, kl));
                }
            }
        }
    }

    if groups.low.is_empty() && groups.high.is_empty() && groups.unsplit > 0 {
        ind.gap.ok = false;
        ind.gap.reasons.insert(0, "degenerate SES split".into());
    }
    if ind.gap.ok {
        let low = EmpiricalDistribution::new(groups.low);
        let high = EmpiricalDistribution::new(groups.high);
        match low.and_then(|l| Ok((l, high?))).and_then(|(l, h)| signed_kl(&l, &h, &config.density)) {
            Ok(kl) => {
                ind.gap_kl = Some(kl);
                ind.gap_label = Some(cutpoints.classify(kl.value()));
            }
            Err(e) => ind.gap = ineligible(format!("gap KL not computable: {e}")),
        }
    }
    ind
}

/// Indicators for every municipality in `data`, in id order.
pub fn compute_indicators(
    data: &Dataset,
    reference: &EmpiricalDistribution,
    cutpoints: &CutPoints,
    config: &PipelineConfig,
) -> Analysis {
    let bounds = national_ses_boundaries(data.records(), &config.ses);
    let one = |(id, records): (&String, &Vec<StudentRecord>)| {
        municipality_indicator(id, records, reference, cutpoints, &bounds, config)
    };
    #[cfg(feature = "parallel")]
    let indicators = {
        use rayon::prelude::*;
        let items: Vec<_> = data.municipalities.iter().collect();
        items.into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let indicators = data.municipalities.iter().map(one).collect();
    Analysis {
        indicators,
        ses_boundaries: bounds,
    }
}

/// Clustering units for cut-point derivation: one per (municipality, year)
/// for level-eligible municipalities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CutpointUnits {
    pub profiles: Vec<LevelProfile>,
    pub kls: Vec<f64>,
    /// Units whose KL could not be computed.
    pub skipped: usize,
}

pub fn cutpoint_units(
    data: &Dataset,
    reference: &EmpiricalDistribution,
    config: &PipelineConfig,
) -> CutpointUnits {
    let eligible: Vec<&Vec<StudentRecord>> = data
        .municipalities
        .values()
        .filter(|records| eligible_for_level(records, &config.cycles, &config.eligibility).ok)
        .collect();
    let per_unit = |(records, year): (&Vec<StudentRecord>, i32)| {
        let scores: Vec<f64> = records.iter().filter(|r| r.year == year).map(|r| r.score).collect();
        let obs = EmpiricalDistribution::new(scores).ok()?;
        let kl = signed_kl(&obs, reference, &config.density).ok()?;
        Some((level_profile(&obs, &config.levels.cut_scores), kl.value()))
    };
    let units: Vec<_> = eligible
        .iter()
        .flat_map(|records| config.cycles.iter().map(move |&y| (*records, y)))
        .collect();
    #[cfg(feature = "parallel")]
    let results: Vec<Option<(LevelProfile, f64)>> = {
        use rayon::prelude::*;
        units.into_par_iter().map(per_unit).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Option<(LevelProfile, f64)>> = units.into_iter().map(per_unit).collect();

    let mut out = CutpointUnits::default();
    for r in results {
        match r {
            Some((p, kl)) => {
                out.profiles.push(p);
                out.kls.push(kl);
            }
            None => out.skipped += 1,
        }
    }
    out
}
