//! Batch pipeline from student records to municipality indicators and report
//! files.
//!
//! One run covers a single (grade, subject) pair. Level KL compares each
//! municipality's pooled scores with the reference; gap KL compares its
//! low-SES students with its high-SES students, the latter as reference.

pub mod config;
pub mod eligibility;
pub mod indicators;
pub mod records;
pub mod report;
pub mod ses;

use std::collections::BTreeMap;

pub use config::{EligibilityConfig, LevelsConfig, PipelineConfig, SesSplit};
pub use eligibility::{eligible_for_gap, eligible_for_level, Eligibility};
pub use indicators::{compute_indicators, cutpoint_units, Analysis, CutpointUnits, MunicipalityIndicator};
pub use records::{ingest, ingest_path, Grade, Ingested, Reject, StudentRecord, Subject};
pub use report::{write_plot_files, write_reports, IndicatorRow};
pub use ses::{national_ses_boundaries, split_ses_groups, SesBoundaries, SesGroups};

/// Records in scope for a run, grouped by municipality.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    /// Every municipality seen in the input, including those with no record
    /// in scope.
    pub municipalities: BTreeMap<String, Vec<StudentRecord>>,
    /// Records dropped for another grade, subject or year.
    pub out_of_scope: usize,
}

impl Dataset {
    pub fn new(records: Vec<StudentRecord>, config: &PipelineConfig) -> Self {
        let mut data = Dataset::default();
        for r in records {
            let entry = data.municipalities.entry(r.municipality_id.clone()).or_default();
            if r.grade == config.grade && r.subject == config.subject && config.cycles.contains(&r.year) {
                entry.push(r);
            } else {
                data.out_of_scope += 1;
            }
        }
        data
    }

    pub fn records(&self) -> impl Iterator<Item = &StudentRecord> {
        self.municipalities.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.municipalities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.municipalities.is_empty()
    }
}
