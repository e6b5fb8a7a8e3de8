//! Run configuration, read from TOML.
//!
//! ```toml
//! grade = "year5"
//! subject = "mathematics"
//! cycles = [2007, 2009, 2011, 2013, 2015]
//! per_year_level = false
//! seed = 1
//!
//! [density]
//! estimator = "kde"         # or "histogram", with bins = 100
//! epsilon = 1e-12
//!
//! [ses]
//! rule = "terciles"         # "quartiles", or "fixed" with lower/upper
//!
//! [levels]
//! cut_scores = [175.0, 225.0, 275.0]
//!
//! [eligibility]
//! min_students_per_cycle = 100
//! min_response_rate = 0.5
//! min_group_size = 20
//! ```
//!
//! Every key is optional. Without a `[density]` table the kernel estimator
//! is used: municipal samples of a few hundred students leave many empty
//! histogram bins, which dominate the divergence.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::{Grade, Subject};
use crate::empirical::DensityConfig;
use crate::error::{Error, Result};
use crate::levels::{CutScores, KMeansConfig};

pub const DEFAULT_CYCLES: [i32; 5] = [2007, 2009, 2011, 2013, 2015];

/// How students are split into low- and high-SES groups. Boundaries are
/// national, per year: low is `ses <= lower`, high is `ses > upper`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase", deny_unknown_fields)]
pub enum SesSplit {
    /// Bottom and top thirds.
    #[default]
    Terciles,
    /// Bottom and top quarters.
    Quartiles,
    Fixed { lower: f64, upper: f64 },
}

impl SesSplit {
    pub fn name(&self) -> &'static str {
        match self {
            SesSplit::Terciles => "terciles",
            SesSplit::Quartiles => "quartiles",
            SesSplit::Fixed { .. } => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelsConfig {
    pub cut_scores: CutScores,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EligibilityConfig {
    /// A municipality needs strictly more scored students than this in every cycle.
    pub min_students_per_cycle: usize,
    /// The questionnaire response rate must be strictly above this.
    pub min_response_rate: f64,
    /// Both SES groups need at least this many students.
    pub min_group_size: usize,
}

impl Default for EligibilityConfig {
    fn default() -> Self {
        Self {
            min_students_per_cycle: 100,
            min_response_rate: 0.5,
            min_group_size: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub grade: Grade,
    pub subject: Subject,
    pub cycles: Vec<i32>,
    /// Also compute level KL separately for every cycle.
    pub per_year_level: bool,
    /// Default k-means seed for `derive-cutpoints`.
    pub seed: u64,
    pub density: DensityConfig,
    pub ses: SesSplit,
    pub levels: LevelsConfig,
    pub eligibility: EligibilityConfig,
    pub kmeans: KMeansConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grade: Grade::default(),
            subject: Subject::default(),
            cycles: DEFAULT_CYCLES.to_vec(),
            per_year_level: false,
            seed: 0,
            density: DensityConfig::kde(),
            ses: SesSplit::default(),
            levels: LevelsConfig::default(),
            eligibility: EligibilityConfig::default(),
            kmeans: KMeansConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.cycles.is_empty() {
            return fail("cycles must not be empty".into());
        }
        let mut sorted = self.cycles.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.cycles.len() {
            return fail(format!("cycles contain duplicates: {:?}", self.cycles));
        }
        if let Err(e) = self.density.validate() {
            return fail(format!("density: {e}"));
        }
        if let SesSplit::Fixed { lower, upper } = self.ses {
            if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
                return fail(format!("ses: need finite lower <= upper, got {lower} and {upper}"));
            }
        }
        let rate = self.eligibility.min_response_rate;
        if !(0.0..1.0).contains(&rate) {
            return fail(format!("eligibility: min_response_rate must be in [0, 1), got {rate}"));
        }
        if let Err(e) = self.kmeans.validate() {
            return fail(format!("kmeans: {e}"));
        }
        if self.kmeans.k != 5 {
            return fail(format!("kmeans: five KL bands need k = 5, got {}", self.kmeans.k));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::Estimator;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(PipelineConfig::from_toml("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn full_file() {
        let text = r#"
            grade = "year9"
            subject = "reading"
            cycles = [2011, 2013]
            per_year_level = true
            seed = 17

            [density]
            estimator = "kde"
            bins = 256
            bandwidth = 4.0

            [ses]
            rule = "fixed"
            lower = -0.5
            upper = 0.5

            [levels]
            cut_scores = [200.0, 250.0, 300.0]

            [eligibility]
            min_students_per_cycle = 30
            min_response_rate = 0.6
            min_group_size = 10

            [kmeans]
            restarts = 5
        "#;
        let c = PipelineConfig::from_toml(text).unwrap();
        assert_eq!(c.grade, Grade::Year9);
        assert_eq!(c.subject, Subject::Reading);
        assert_eq!(c.cycles, vec![2011, 2013]);
        assert!(c.per_year_level);
        assert_eq!(c.density.estimator, Estimator::Kde);
        assert_eq!(c.density.bandwidth, Some(4.0));
        assert_eq!(c.ses, SesSplit::Fixed { lower: -0.5, upper: 0.5 });
        assert_eq!(c.levels.cut_scores.scores(), [200.0, 250.0, 300.0]);
        assert_eq!(c.eligibility.min_group_size, 10);
        assert_eq!(c.kmeans.restarts, 5);
        assert_eq!(c.kmeans.max_iter, 300);
    }

    #[test]
    fn bad_files_are_config_errors() {
        for text in [
            "unknown_key = 1",
            "cycles = []",
            "cycles = [2007, 2007]",
            "[density]\nbins = 2",
            "[ses]\nrule = \"deciles\"",
            "[ses]\nrule = \"fixed\"\nlower = 1.0\nupper = 0.0",
            "[levels]\ncut_scores = [300.0, 200.0, 250.0]",
            "[eligibility]\nmin_response_rate = 1.5",
            "[kmeans]\nk = 4",
            "grade = \"year7\"",
        ] {
            assert!(
                matches!(PipelineConfig::from_toml(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }
}
