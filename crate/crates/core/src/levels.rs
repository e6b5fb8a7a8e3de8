//! Learning-level profiles, interpretive KL bands and their data-driven
//! cut-points.
//!
//! Cut-points come from clustering municipalities by their learning-level
//! profile into five groups, ordering the groups by mean signed KL, and taking
//! the 95th percentile of signed KL inside each of the four lowest groups.

pub mod kmeans;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::empirical::EmpiricalDistribution;
use crate::error::{Error, Result};
pub use kmeans::{kmeans, KMeansConfig, KMeansFit};

/// Score boundaries between Below Basic, Basic, Appropriate and Advanced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct CutScores([f64; 3]);

impl CutScores {
    /// Repo convention for fifth-year mathematics on the 0-500 scale.
    pub const DEFAULT: CutScores = CutScores([175.0, 225.0, 275.0]);

    pub fn new(scores: [f64; 3]) -> Result<Self> {
        let finite = scores.iter().all(|v| v.is_finite());
        if !finite || !(scores[0] < scores[1] && scores[1] < scores[2]) {
            return Err(Error::InvalidParameter(format!(
                "cut scores must be finite and strictly increasing, got {scores:?}"
            )));
        }
        Ok(Self(scores))
    }

    pub fn scores(&self) -> [f64; 3] {
        self.0
    }
}

impl Default for CutScores {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<[f64; 3]> for CutScores {
    type Error = Error;

    fn try_from(scores: [f64; 3]) -> Result<Self> {
        Self::new(scores)
    }
}

impl From<CutScores> for [f64; 3] {
    fn from(c: CutScores) -> Self {
        c.0
    }
}

/// Shares of students Below Basic, Basic, Appropriate and Advanced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct LevelProfile([f64; 4]);

impl LevelProfile {
    pub const LABELS: [&'static str; 4] = ["Below Basic", "Basic", "Appropriate", "Advanced"];

    pub fn new(proportions: [f64; 4]) -> Result<Self> {
        if proportions.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter(format!(
                "level proportions must lie in [0, 1], got {proportions:?}"
            )));
        }
        let sum: f64 = proportions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "level proportions must sum to 1, got {sum}"
            )));
        }
        Ok(Self(proportions))
    }

    pub fn proportions(&self) -> [f64; 4] {
        self.0
    }
}

impl TryFrom<[f64; 4]> for LevelProfile {
    type Error = Error;

    fn try_from(p: [f64; 4]) -> Result<Self> {
        Self::new(p)
    }
}

impl From<LevelProfile> for [f64; 4] {
    fn from(p: LevelProfile) -> Self {
        p.0
    }
}

/// Shares of `dist` in `(-inf, c1)`, `[c1, c2)`, `[c2, c3)` and `[c3, inf)`.
pub fn level_profile(dist: &EmpiricalDistribution, cuts: &CutScores) -> LevelProfile {
    let [c1, c2, c3] = cuts.0;
    let below = [dist.mass_below(c1), dist.mass_below(c2), dist.mass_below(c3)];
    let p = [
        below[0],
        (below[1] - below[0]).max(0.0),
        (below[2] - below[1]).max(0.0),
        (1.0 - below[2]).max(0.0),
    ];
    LevelProfile(p)
}

/// Interpretive band of a signed KL value, ordered from farthest below the
/// reference to closest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KLLevel {
    Low,
    #[serde(rename = "Medium-Low")]
    MediumLow,
    Medium,
    #[serde(rename = "Medium-High")]
    MediumHigh,
    High,
}

impl KLLevel {
    pub const ALL: [KLLevel; 5] = [
        KLLevel::Low,
        KLLevel::MediumLow,
        KLLevel::Medium,
        KLLevel::MediumHigh,
        KLLevel::High,
    ];

    pub fn label(self) -> &'static str {
        match self {
            KLLevel::Low => "Low",
            KLLevel::MediumLow => "Medium-Low",
            KLLevel::Medium => "Medium",
            KLLevel::MediumHigh => "Medium-High",
            KLLevel::High => "High",
        }
    }
}

impl fmt::Display for KLLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for KLLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KLLevel::ALL
            .into_iter()
            .find(|l| l.label() == s)
            .ok_or_else(|| Error::Input(format!("unknown KL level {s:?}")))
    }
}

/// Four strictly increasing thresholds splitting signed KL into five bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct CutPoints([f64; 4]);

impl CutPoints {
    /// Published thresholds from the national municipal data.
    pub const TABLE2: CutPoints = CutPoints([-1.7, -1.1, -0.7, -0.4]);

    pub fn new(thresholds: [f64; 4]) -> Result<Self> {
        let ok = thresholds.iter().all(|t| t.is_finite())
            && thresholds.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::NonMonotoneCutPoints(thresholds.to_vec()));
        }
        Ok(Self(thresholds))
    }

    pub fn thresholds(&self) -> [f64; 4] {
        self.0
    }

    /// Bands are left-open and right-closed: `value <= t1` is Low and
    /// `value > t4` is High.
    pub fn classify(&self, value: f64) -> KLLevel {
        let band = self.0.iter().filter(|&&t| value > t).count();
        KLLevel::ALL[band]
    }
}

impl Default for CutPoints {
    fn default() -> Self {
        Self::TABLE2
    }
}

impl TryFrom<[f64; 4]> for CutPoints {
    type Error = Error;

    fn try_from(t: [f64; 4]) -> Result<Self> {
        Self::new(t)
    }
}

impl From<CutPoints> for [f64; 4] {
    fn from(c: CutPoints) -> Self {
        c.0
    }
}

pub fn classify_kl(value: f64, cuts: &CutPoints) -> KLLevel {
    cuts.classify(value)
}

/// Summary of one k-means group, in mean-KL order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub size: usize,
    pub mean_kl: f64,
    pub p95_kl: f64,
    pub centroid: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutPointDerivation {
    pub cutpoints: CutPoints,
    pub groups: Vec<GroupSummary>,
    pub inertia: f64,
    pub restart: usize,
    /// SHA-256 of the canonicalized input units.
    pub fingerprint: String,
}

pub fn derive_cutpoints(profiles: &[LevelProfile], kls: &[f64], seed: u64) -> Result<CutPoints> {
    derive_cutpoints_with(profiles, kls, seed, &KMeansConfig::default()).map(|d| d.cutpoints)
}

/// Full k-means cut-point derivation; `config.k` must be 5.
pub fn derive_cutpoints_with(
    profiles: &[LevelProfile],
    kls: &[f64],
    seed: u64,
    config: &KMeansConfig,
) -> Result<CutPointDerivation> {
    if profiles.len() != kls.len() {
        return Err(Error::LengthMismatch {
            left: profiles.len(),
            right: kls.len(),
        });
    }
    if config.k != 5 {
        return Err(Error::InvalidParameter(format!(
            "five KL bands need k = 5, got {}",
            config.k
        )));
    }
    if let Some(i) = kls.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }

    let mut units: Vec<([f64; 4], f64)> = profiles.iter().map(|p| p.0).zip(kls.iter().copied()).collect();
    units.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.total_cmp(&b.1))
    });
    let points: Vec<[f64; 4]> = units.iter().map(|u| u.0).collect();
    let mut distinct = points.clone();
    distinct.dedup();
    if distinct.len() < config.k {
        return Err(Error::Clustering(format!(
            "{} distinct profiles cannot form {} groups",
            distinct.len(),
            config.k
        )));
    }

    let fit = kmeans(&points, config, seed)?;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); config.k];
    for (u, &a) in units.iter().zip(&fit.assignments) {
        members[a].push(u.1);
    }
    let mut groups = members
        .iter()
        .zip(&fit.centroids)
        .map(|(kl, centroid)| {
            let dist = EmpiricalDistribution::new(kl.clone())?;
            Ok(GroupSummary {
                size: kl.len(),
                mean_kl: dist.mean(),
                p95_kl: dist.quantile(0.95)?,
                centroid: *centroid,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    groups.sort_by(|a, b| a.mean_kl.total_cmp(&b.mean_kl));

    let thresholds = [
        groups[0].p95_kl,
        groups[1].p95_kl,
        groups[2].p95_kl,
        groups[3].p95_kl,
    ];
    Ok(CutPointDerivation {
        cutpoints: CutPoints::new(thresholds)?,
        groups,
        inertia: fit.inertia,
        restart: fit.restart,
        fingerprint: fingerprint(&units),
    })
}

fn fingerprint(units: &[([f64; 4], f64)]) -> String {
    let mut hasher = Sha256::new();
    for (profile, kl) in units {
        for v in profile.iter().chain(std::iter::once(kl)) {
            hasher.update(v.to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

/// Cut-points with the provenance of their derivation, as written by
/// `derive-cutpoints`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutPointsFile {
    pub thresholds: CutPoints,
    pub seed: Option<u64>,
    pub kmeans: Option<KMeansConfig>,
    pub units: Option<usize>,
    pub groups: Option<Vec<GroupSummary>>,
    pub fingerprint: Option<String>,
}

impl CutPointsFile {
    pub fn from_derivation(d: &CutPointDerivation, seed: u64, config: &KMeansConfig) -> Self {
        Self {
            thresholds: d.cutpoints,
            seed: Some(seed),
            kmeans: Some(*config),
            units: Some(d.groups.iter().map(|g| g.size).sum()),
            groups: Some(d.groups.clone()),
            fingerprint: Some(d.fingerprint.clone()),
        }
    }

    /// A file holding only thresholds, e.g. the published defaults.
    pub fn fixed(cuts: CutPoints) -> Self {
        Self {
            thresholds: cuts,
            seed: None,
            kmeans: None,
            units: None,
            groups: None,
            fingerprint: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }
}
