//! Report and plot-data files.
//!
//! | file | content |
//! |---|---|
//! | `indicators.csv` | one row per municipality, absent values left empty |
//! | `crosstab.csv` | level label by gap label counts, High to Low, with totals |
//! | `scatter.csv` | (gap KL, level KL) for municipalities with both |
//! | `bands.csv` | band thresholds and the mean level KL |
//! | `relative_cdf.csv` | `G(r)` per level-eligible municipality |
//! | `densities.csv` | national observed and reference densities per year |
//! | `level_by_year.csv` | level KL per cycle, when configured |
//! | `rejects.csv` | input rows that failed validation |
//! | `metadata.json` | configuration, seeds, boundaries and counts |

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::indicators::{Analysis, MunicipalityIndicator, CURVE_POINTS};
use super::records::Reject;
use super::ses::SesBoundaries;
use super::Dataset;
use crate::empirical::{shared_densities, EmpiricalDistribution};
use crate::error::{Error, Result};
use crate::levels::{CutPoints, CutPointsFile, KLLevel};
use crate::reference::ReferenceFile;

/// Row of `indicators.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRow {
    pub municipality_id: String,
    pub n_students: usize,
    pub response_rate: f64,
    pub n_low_ses: usize,
    pub n_high_ses: usize,
    pub level_ok: bool,
    pub level_kl: Option<f64>,
    pub level_label: Option<KLLevel>,
    pub level_reason: Option<String>,
    pub gap_ok: bool,
    pub gap_kl: Option<f64>,
    pub gap_label: Option<KLLevel>,
    pub gap_reason: Option<String>,
}

impl From<&MunicipalityIndicator> for IndicatorRow {
    fn from(m: &MunicipalityIndicator) -> Self {
        Self {
            municipality_id: m.municipality_id.clone(),
            n_students: m.n_students,
            response_rate: m.response_rate,
            n_low_ses: m.n_low_ses,
            n_high_ses: m.n_high_ses,
            level_ok: m.level.ok,
            level_kl: m.level_kl.map(|k| k.value()),
            level_label: m.level_label,
            level_reason: m.level.reason(),
            gap_ok: m.gap.ok,
            gap_kl: m.gap_kl.map(|k| k.value()),
            gap_label: m.gap_label,
            gap_reason: m.gap.reason(),
        }
    }
}

pub fn write_indicators_csv(path: &Path, rows: &[IndicatorRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        // serde writes the header with the first row only
        w.write_record([
            "municipality_id",
            "n_students",
            "response_rate",
            "n_low_ses",
            "n_high_ses",
            "level_ok",
            "level_kl",
            "level_label",
            "level_reason",
            "gap_ok",
            "gap_kl",
            "gap_label",
            "gap_reason",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_indicators_csv(path: &Path) -> Result<Vec<IndicatorRow>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Input(format!("{}: {e}", path.display()))))
        .collect()
}

/// Counts by level label (rows) and gap label (columns), both ordered High to
/// Low, over municipalities that have both labels. The last row and column
/// hold totals.
pub fn crosstab(rows: &[IndicatorRow]) -> [[usize; 6]; 6] {
    let mut t = [[0usize; 6]; 6];
    let pos = |l: KLLevel| 4 - l as usize;
    for row in rows {
        if let (Some(level), Some(gap)) = (row.level_label, row.gap_label) {
            let (i, j) = (pos(level), pos(gap));
            t[i][j] += 1;
            t[i][5] += 1;
            t[5][j] += 1;
            t[5][5] += 1;
        }
    }
    t
}

/// Replaces the labels with those given by `cuts`.
pub fn relabel(rows: &mut [IndicatorRow], cuts: &CutPoints) {
    for row in rows {
        row.level_label = row.level_kl.map(|v| cuts.classify(v));
        row.gap_label = row.gap_kl.map(|v| cuts.classify(v));
    }
}

/// `crosstab.csv`, `scatter.csv` and `bands.csv`.
pub fn write_plot_files(out_dir: &Path, rows: &[IndicatorRow], cuts: &CutPoints) -> Result<()> {
    fs::create_dir_all(out_dir)?;

    let order: Vec<&str> = KLLevel::ALL.iter().rev().map(|l| l.label()).collect();
    let table = crosstab(rows);
    let mut w = csv::Writer::from_path(out_dir.join("crosstab.csv"))?;
    let mut header = vec!["level"];
    header.extend(&order);
    header.push("Total");
    w.write_record(&header)?;
    for (i, counts) in table.iter().enumerate() {
        let name = order.get(i).copied().unwrap_or("Total");
        let mut rec = vec![name.to_string()];
        rec.extend(counts.iter().map(usize::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out_dir.join("scatter.csv"))?;
    w.write_record(["municipality_id", "gap_kl", "level_kl", "level_label", "gap_label"])?;
    for row in rows {
        if let (Some(gap), Some(level)) = (row.gap_kl, row.level_kl) {
            w.write_record([
                row.municipality_id.clone(),
                gap.to_string(),
                level.to_string(),
                row.level_label.map_or(String::new(), |l| l.to_string()),
                row.gap_label.map_or(String::new(), |l| l.to_string()),
            ])?;
        }
    }
    w.flush()?;

    let levels: Vec<f64> = rows.iter().filter_map(|r| r.level_kl).collect();
    let mut w = csv::Writer::from_path(out_dir.join("bands.csv"))?;
    w.write_record(["line", "value"])?;
    for (k, t) in cuts.thresholds().iter().enumerate() {
        w.write_record([format!("cut_{}", k + 1), t.to_string()])?;
    }
    let mean = if levels.is_empty() {
        String::new()
    } else {
        (levels.iter().sum::<f64>() / levels.len() as f64).to_string()
    };
    w.write_record(["mean_level_kl".to_string(), mean])?;
    w.flush()?;
    Ok(())
}

/// Everything a report run is built from.
pub struct RunInputs<'a> {
    pub config: &'a PipelineConfig,
    pub reference: &'a ReferenceFile,
    pub reference_dist: &'a EmpiricalDistribution,
    pub cutpoints: &'a CutPointsFile,
    pub dataset: &'a Dataset,
    pub rejects: &'a [Reject],
    pub n_records: usize,
}

#[derive(Debug, Serialize)]
struct ReferenceInfo<'a> {
    generator: &'a str,
    seed: u64,
    n: usize,
}

#[derive(Debug, Serialize)]
struct Counts {
    records: usize,
    rejects: usize,
    out_of_scope: usize,
    municipalities: usize,
    level_eligible: usize,
    gap_eligible: usize,
}

#[derive(Debug, Serialize)]
struct RunMetadata<'a> {
    tool: &'static str,
    version: &'static str,
    /// Seconds since the Unix epoch; the only field that varies between runs.
    timestamp: u64,
    config: &'a PipelineConfig,
    density: String,
    ses_rule: &'static str,
    ses_boundaries: &'a BTreeMap<i32, SesBoundaries>,
    cut_scores: [f64; 3],
    cutpoints: &'a CutPointsFile,
    reference: ReferenceInfo<'a>,
    counts: Counts,
}

pub fn write_reports(out_dir: &Path, inputs: &RunInputs<'_>, analysis: &Analysis) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let rows: Vec<IndicatorRow> = analysis.indicators.iter().map(IndicatorRow::from).collect();
    write_indicators_csv(&out_dir.join("indicators.csv"), &rows)?;
    write_plot_files(out_dir, &rows, &inputs.cutpoints.thresholds)?;

    let mut w = csv::Writer::from_path(out_dir.join("relative_cdf.csv"))?;
    w.write_record(["municipality_id", "r", "g"])?;
    for ind in &analysis.indicators {
        if let Some(curve) = &ind.relative_cdf {
            for (k, g) in curve.iter().enumerate() {
                let r = k as f64 / (CURVE_POINTS - 1) as f64;
                w.write_record([ind.municipality_id.clone(), r.to_string(), g.to_string()])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out_dir.join("densities.csv"))?;
    w.write_record(["year", "score", "observed", "reference"])?;
    for &year in &inputs.config.cycles {
        let scores: Vec<f64> = inputs.dataset.records().filter(|r| r.year == year).map(|r| r.score).collect();
        let Ok(obs) = EmpiricalDistribution::new(scores) else { continue };
        let Ok((f, f0)) = shared_densities(&obs, inputs.reference_dist, &inputs.config.density) else {
            continue;
        };
        for ((x, a), b) in f.grid().iter().zip(f.density()).zip(f0.density()) {
            w.write_record([year.to_string(), x.to_string(), a.to_string(), b.to_string()])?;
        }
    }
    w.flush()?;

    if inputs.config.per_year_level {
        let mut w = csv::Writer::from_path(out_dir.join("level_by_year.csv"))?;
        w.write_record(["municipality_id", "year", "level_kl", "level_label"])?;
        for ind in &analysis.indicators {
            for (year, kl) in &ind.level_by_year {
                w.write_record([
                    ind.municipality_id.clone(),
                    year.to_string(),
                    kl.value().to_string(),
                    inputs.cutpoints.thresholds.classify(kl.value()).to_string(),
                ])?;
            }
        }
        w.flush()?;
    }

    let mut w = csv::Writer::from_path(out_dir.join("rejects.csv"))?;
    w.write_record(["line", "reason"])?;
    for r in inputs.rejects {
        w.write_record([r.line.to_string(), r.reason.clone()])?;
    }
    w.flush()?;

    let metadata = RunMetadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        config: inputs.config,
        density: inputs.config.density.describe(),
        ses_rule: inputs.config.ses.name(),
        ses_boundaries: &analysis.ses_boundaries,
        cut_scores: inputs.config.levels.cut_scores.scores(),
        cutpoints: inputs.cutpoints,
        reference: ReferenceInfo {
            generator: &inputs.reference.generator,
            seed: inputs.reference.seed,
            n: inputs.reference.n,
        },
        counts: Counts {
            records: inputs.n_records,
            rejects: inputs.rejects.len(),
            out_of_scope: inputs.dataset.out_of_scope,
            municipalities: analysis.indicators.len(),
            level_eligible: analysis.indicators.iter().filter(|i| i.level.ok).count(),
            gap_eligible: analysis.indicators.iter().filter(|i| i.gap.ok).count(),
        },
    };
    let mut text = serde_json::to_string_pretty(&metadata)?;
    text.push('\n');
    fs::write(out_dir.join("metadata.json"), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, level: Option<f64>, gap: Option<f64>) -> IndicatorRow {
        IndicatorRow {
            municipality_id: id.into(),
            n_students: 10,
            response_rate: 0.75,
            n_low_ses: 3,
            n_high_ses: 3,
            level_ok: level.is_some(),
            level_kl: level,
            level_label: level.map(|v| CutPoints::TABLE2.classify(v)),
            level_reason: level.is_none().then(|| "no records".to_string()),
            gap_ok: gap.is_some(),
            gap_kl: gap,
            gap_label: gap.map(|v| CutPoints::TABLE2.classify(v)),
            gap_reason: None,
        }
    }

    #[test]
    fn crosstab_layout_and_marginals() {
        let rows = vec![
            row("a", Some(-0.1), Some(-2.0)),
            row("b", Some(-2.0), Some(-2.0)),
            row("c", Some(-0.9), None),
            row("d", None, None),
        ];
        let t = crosstab(&rows);
        assert_eq!(t[0][4], 1); // High level, Low gap
        assert_eq!(t[4][4], 1); // Low level, Low gap
        assert_eq!(t[5][5], 2);
        assert_eq!(t[5][4], 2);
        assert_eq!(t[0][5] + t[4][5], 2);
    }

    #[test]
    fn indicator_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("indicators.csv");
        let rows = vec![row("a", Some(-0.123456789), Some(-1.5)), row("b", None, None)];
        write_indicators_csv(&path, &rows).unwrap();
        assert_eq!(read_indicators_csv(&path).unwrap(), rows);

        write_indicators_csv(&path, &[]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("municipality_id,n_students,"));
        assert!(read_indicators_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn plot_files() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row("a", Some(-0.5), Some(-1.2)), row("b", Some(-1.5), None)];
        write_plot_files(dir.path(), &rows, &CutPoints::TABLE2).unwrap();
        let scatter = fs::read_to_string(dir.path().join("scatter.csv")).unwrap();
        assert_eq!(
            scatter,
            "municipality_id,gap_kl,level_kl,level_label,gap_label\na,-1.2,-0.5,Medium-High,Medium-Low\n"
        );
        let bands = fs::read_to_string(dir.path().join("bands.csv")).unwrap();
        assert_eq!(
            bands,
            "line,value\ncut_1,-1.7\ncut_2,-1.1\ncut_3,-0.7\ncut_4,-0.4\nmean_level_kl,-1\n"
        );
        let crosstab = fs::read_to_string(dir.path().join("crosstab.csv")).unwrap();
        let lines: Vec<&str> = crosstab.lines().collect();
        assert_eq!(lines[0], "level,High,Medium-High,Medium,Medium-Low,Low,Total");
        assert_eq!(lines[2], "Medium-High,0,0,0,1,0,1");
        assert_eq!(lines[6], "Total,0,0,0,1,0,1");
    }

    #[test]
    fn relabel_uses_new_cuts() {
        let mut rows = vec![row("a", Some(-0.5), Some(-1.2))];
        relabel(&mut rows, &CutPoints::new([-3.0, -2.0, -1.0, 0.0]).unwrap());
        assert_eq!(rows[0].level_label, Some(KLLevel::MediumHigh));
        assert_eq!(rows[0].gap_label, Some(KLLevel::Medium));
    }
}
