//! Inclusion rules for the level and gap indicators.

use serde::Serialize;

use super::config::EligibilityConfig;
use super::records::StudentRecord;
use super::ses::SesGroups;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Eligibility {
    pub ok: bool,
    pub reasons: Vec<String>,
}

impl Eligibility {
    fn from_reasons(reasons: Vec<String>) -> Self {
        Self {
            ok: reasons.is_empty(),
            reasons,
        }
    }

    pub fn reason(&self) -> Option<String> {
        (!self.reasons.is_empty()).then(|| self.reasons.join("; "))
    }
}

/// More than `min_students_per_cycle` scored students in every cycle year.
pub fn eligible_for_level(
    records: &[StudentRecord],
    cycles: &[i32],
    config: &EligibilityConfig,
) -> Eligibility {
    if records.is_empty() {
        return Eligibility::from_reasons(vec!["no records".into()]);
    }
    let reasons = cycles
        .iter()
        .filter_map(|&year| {
            let n = records.iter().filter(|r| r.year == year).count();
            (n <= config.min_students_per_cycle).then(|| {
                format!(
                    "{n} students in {year}, needs more than {}",
                    config.min_students_per_cycle
                )
            })
        })
        .collect();
    Eligibility::from_reasons(reasons)
}

/// Share of students who answered the questionnaire and have an SES value.
pub fn response_rate(records: &[StudentRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let answered = records
        .iter()
        .filter(|r| r.answered_questionnaire && r.ses.is_some())
        .count();
    answered as f64 / records.len() as f64
}

/// Response rate strictly above the minimum and both SES groups at least
/// `min_group_size` strong.
pub fn eligible_for_gap(
    records: &[StudentRecord],
    groups: &SesGroups,
    config: &EligibilityConfig,
) -> Eligibility {
    if records.is_empty() {
        return Eligibility::from_reasons(vec!["no records".into()]);
    }
    let mut reasons = Vec::new();
    let rate = response_rate(records);
    if rate <= config.min_response_rate {
        reasons.push(format!(
            "questionnaire response rate {rate:.3} not above {}",
            config.min_response_rate
        ));
    }
    if groups.low.len() < config.min_group_size {
        reasons.push(format!("low-SES group below {}", config.min_group_size));
    }
    if groups.high.len() < config.min_group_size {
        reasons.push(format!("high-SES group below {}", config.min_group_size));
    }
    Eligibility::from_reasons(reasons)
}
