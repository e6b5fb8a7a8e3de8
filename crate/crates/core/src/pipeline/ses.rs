//! Low- and high-SES groups.

use std::collections::BTreeMap;

use serde::Serialize;

use super::config::SesSplit;
use super::records::StudentRecord;
use crate::empirical::EmpiricalDistribution;

/// Low group is `ses <= lower`, high group is `ses > upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SesBoundaries {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SesGroup {
    Low,
    High,
}

impl SesBoundaries {
    pub fn group(&self, ses: f64) -> Option<SesGroup> {
        if ses <= self.lower {
            Some(SesGroup::Low)
        } else if ses > self.upper {
            Some(SesGroup::High)
        } else {
            None
        }
    }
}

/// Boundaries for one set of SES values. Quantile rules use inf-quantiles
/// and give `None` when the values are missing or all equal.
pub fn ses_boundaries(values: &[f64], rule: &SesSplit) -> Option<SesBoundaries> {
    let (p_low, p_high) = match *rule {
        SesSplit::Fixed { lower, upper } => return Some(SesBoundaries { lower, upper }),
        SesSplit::Terciles => (1.0 / 3.0, 2.0 / 3.0),
        SesSplit::Quartiles => (0.25, 0.75),
    };
    let dist = EmpiricalDistribution::new(values.to_vec()).ok()?;
    if dist.is_degenerate() {
        return None;
    }
    Some(SesBoundaries {
        lower: dist.quantile(p_low).ok()?,
        upper: dist.quantile(p_high).ok()?,
    })
}

/// National boundaries per year, from every record with an SES value.
/// Years without a usable split are absent.
pub fn national_ses_boundaries<'a>(
    records: impl IntoIterator<Item = &'a StudentRecord>,
    rule: &SesSplit,
) -> BTreeMap<i32, SesBoundaries> {
    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(s) = r.ses {
            by_year.entry(r.year).or_default().push(s);
        }
    }
    by_year
        .into_iter()
        .filter_map(|(year, values)| ses_boundaries(&values, rule).map(|b| (year, b)))
        .collect()
}

/// Scores of the low- and high-SES students.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SesGroups {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    /// Students with SES whose year has no usable boundaries.
    pub unsplit: usize,
}

pub fn split_ses_groups<'a>(
    records: impl IntoIterator<Item = &'a StudentRecord>,
    bounds: &BTreeMap<i32, SesBoundaries>,
) -> SesGroups {
    let mut groups = SesGroups::default();
    for r in records {
        let Some(ses) = r.ses else { continue };
        match bounds.get(&r.year) {
            None => groups.unsplit += 1,
            Some(b) => match b.group(ses) {
                Some(SesGroup::Low) => groups.low.push(r.score),
                Some(SesGroup::High) => groups.high.push(r.score),
                None => {}
            },
        }
    }
    groups
}
