//! Reference distribution built from percentile tables.
//!
//! The reference is the score distribution a group would have if each of its
//! percentiles moved by the gap, in standard deviations, between a "typical
//! country" and Brazil on an international test:
//!
//! ```text
//! Z_r      = mean over countries of their r-th percentile
//! delta_r  = (Z_r - X_r) / sigma          X: Brazil, sigma: its SD
//! Y_r      = Y'_r + delta_r * s           Y': base table, s: base SD
//! ```
//!
//! Samples are then drawn from `Y` by picking a percentile interval uniformly
//! at random and a point uniformly inside it.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::empirical::{EmpiricalDistribution, PercentileTable};
use crate::error::{Error, Result};

/// Name of the generator behind [`sample_from_percentiles`], recorded in outputs.
pub const GENERATOR: &str = "ChaCha8Rng";

/// One illustrative row of the ninth-year mathematics reference construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationRow {
    pub percentile: usize,
    /// Base-year percentile value before translation.
    pub base: f64,
    /// Translation in standard deviations.
    pub delta: f64,
    /// Published translated percentile.
    pub translated: f64,
}

/// Published rows relating base percentiles, shifts and reference percentiles.
pub const TRANSLATION_ROWS: [TranslationRow; 7] = [
    TranslationRow { percentile: 5, base: 173.0, delta: 1.55, translated: 240.0 },
    TranslationRow { percentile: 15, base: 197.0, delta: 1.64, translated: 268.0 },
    TranslationRow { percentile: 30, base: 220.0, delta: 1.72, translated: 295.0 },
    TranslationRow { percentile: 50, base: 248.0, delta: 1.75, translated: 324.0 },
    TranslationRow { percentile: 75, base: 283.0, delta: 1.69, translated: 356.0 },
    TranslationRow { percentile: 90, base: 317.0, delta: 1.53, translated: 383.0 },
    TranslationRow { percentile: 95, base: 338.0, delta: 1.35, translated: 396.0 },
];

/// Least-squares `s` for `translated = base + delta * s`.
pub fn fit_translation_scale(rows: &[TranslationRow]) -> Result<f64> {
    let (num, den) = rows.iter().fold((0.0, 0.0), |(num, den), row| {
        (
            num + row.delta * (row.translated - row.base),
            den + row.delta * row.delta,
        )
    });
    if !(den > 0.0) {
        return Err(Error::InvalidParameter(
            "translation rows need at least one nonzero shift".into(),
        ));
    }
    Ok(num / den)
}

/// Base-scale standard deviation used when a reference spec does not set one,
/// fitted to [`TRANSLATION_ROWS`].
pub fn default_base_sd() -> f64 {
    fit_translation_scale(&TRANSLATION_ROWS).expect("published rows have nonzero shifts")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpec {
    pub country_tables: Vec<PercentileTable>,
    /// Brazilian percentiles on the international scale.
    pub brazil_pisa: PercentileTable,
    /// Brazilian standard deviation on the international scale.
    pub brazil_pisa_sd: f64,
    /// Base-year percentiles on the national scale for the target grade.
    pub base_table: PercentileTable,
    /// Base-year standard deviation on the national scale.
    pub base_sd: f64,
}

impl ReferenceSpec {
    pub fn new(
        country_tables: Vec<PercentileTable>,
        brazil_pisa: PercentileTable,
        brazil_pisa_sd: f64,
        base_table: PercentileTable,
        base_sd: f64,
    ) -> Result<Self> {
        if country_tables.is_empty() {
            return Err(Error::InvalidParameter("at least one country table is required".into()));
        }
        for (name, sd) in [("brazil_pisa_sd", brazil_pisa_sd), ("base_sd", base_sd)] {
            if !(sd.is_finite() && sd > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {sd}")));
            }
        }
        Ok(Self {
            country_tables,
            brazil_pisa,
            brazil_pisa_sd,
            base_table,
            base_sd,
        })
    }

    /// Loads a TOML spec; table paths are relative to the spec file.
    ///
    /// ```toml
    /// country_tables = ["country_a.csv", "country_b.csv"]
    /// brazil_pisa_table = "brazil_pisa.csv"
    /// brazil_pisa_sd = 90.0
    /// base_table = "base_year9.csv"
    /// base_sd = 43.3   # optional, fitted default otherwise
    /// ```
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: ReferenceSpecFile = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let read = |p: &PathBuf| read_percentile_csv_path(&dir.join(p));
        let countries = file.country_tables.iter().map(read).collect::<Result<Vec<_>>>()?;
        let spec = Self::new(
            countries,
            read(&file.brazil_pisa_table)?,
            file.brazil_pisa_sd,
            read(&file.base_table)?,
            file.base_sd.unwrap_or_else(default_base_sd),
        );
        spec.map_err(|e| match e {
            Error::InvalidParameter(msg) => Error::Config(msg),
            other => other,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceSpecFile {
    country_tables: Vec<PathBuf>,
    brazil_pisa_table: PathBuf,
    brazil_pisa_sd: f64,
    base_table: PathBuf,
    base_sd: Option<f64>,
}

/// Pointwise mean of the country tables.
pub fn typical_country_percentiles(tables: &[PercentileTable]) -> Result<PercentileTable> {
    if tables.is_empty() {
        return Err(Error::InvalidParameter("no country tables".into()));
    }
    let n = tables.len() as f64;
    PercentileTable::from_fn(|r| tables.iter().map(|t| t.get(r)).sum::<f64>() / n)
}

/// `(Z_r - X_r) / sigma` for every percentile.
pub fn delta_shifts(
    typical: &PercentileTable,
    home: &PercentileTable,
    sigma: f64,
) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    Ok(typical
        .entries()
        .iter()
        .zip(home.entries())
        .map(|(z, x)| (z - x) / sigma)
        .collect())
}

/// `Y'_r + delta_r * s`. A translated table that decreases anywhere is an
/// error naming the offending percentiles.
pub fn translate_percentiles(
    base: &PercentileTable,
    delta: &[f64],
    s: f64,
) -> Result<PercentileTable> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
    }
    if delta.len() != PercentileTable::LEN {
        return Err(Error::LengthMismatch {
            left: PercentileTable::LEN,
            right: delta.len(),
        });
    }
    PercentileTable::from_fn(|r| base.get(r) + delta[r] * s)
}

/// Draws `n` values: a percentile interval `u` uniform on `0..=99`, then a
/// point uniform on `[table[u], table[u + 1])`, closed at `table[100]` for the
/// last interval.
pub fn sample_from_percentiles(
    table: &PercentileTable,
    n: usize,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| {
            let u = rng.random_range(0..100usize);
            let (lo, hi) = (table.get(u), table.get(u + 1));
            if lo == hi {
                return lo;
            }
            let t: f64 = if u == 99 {
                rng.random_range(0.0..=1.0)
            } else {
                rng.random_range(0.0..1.0)
            };
            // lo + t * (hi - lo) can round up to hi when t is just below 1
            let y = lo + t * (hi - lo);
            if u < 99 && y >= hi {
                lo.max(hi - (hi - lo) * f64::EPSILON)
            } else {
                y
            }
        })
        .collect();
    EmpiricalDistribution::new(values)
}

/// Translated reference percentiles for `spec`.
pub fn reference_table(spec: &ReferenceSpec) -> Result<PercentileTable> {
    let typical = typical_country_percentiles(&spec.country_tables)?;
    let delta = delta_shifts(&typical, &spec.brazil_pisa, spec.brazil_pisa_sd)?;
    translate_percentiles(&spec.base_table, &delta, spec.base_sd)
}

pub fn build_reference(spec: &ReferenceSpec, n: usize, seed: u64) -> Result<EmpiricalDistribution> {
    sample_from_percentiles(&reference_table(spec)?, n, seed)
}

/// Reads `percentile,value` rows covering every percentile 0..=100 once.
pub fn read_percentile_csv<R: Read>(reader: R) -> Result<PercentileTable> {
    #[derive(Deserialize)]
    struct Row {
        percentile: usize,
        value: f64,
    }
    let mut entries: Vec<Option<f64>> = vec![None; PercentileTable::LEN];
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for row in rdr.deserialize() {
        let row: Row = row.map_err(|e| Error::Input(format!("percentile table: {e}")))?;
        match entries.get_mut(row.percentile) {
            Some(slot @ None) => *slot = Some(row.value),
            Some(Some(_)) => {
                return Err(Error::Input(format!("percentile {} listed twice", row.percentile)))
            }
            None => return Err(Error::Input(format!("percentile {} out of range", row.percentile))),
        }
    }
    let missing: Vec<usize> = (0..PercentileTable::LEN).filter(|&r| entries[r].is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::Input(format!("percentile table lacks percentiles {missing:?}")));
    }
    PercentileTable::new(entries.into_iter().map(|v| v.expect("checked")).collect())
}

pub fn read_percentile_csv_path(path: &Path) -> Result<PercentileTable> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    read_percentile_csv(file).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_percentile_csv<W: Write>(table: &PercentileTable, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["percentile", "value"])?;
    for (r, v) in table.entries().iter().enumerate() {
        wtr.write_record([r.to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reference sample as written by `build-reference`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFile {
    pub generator: String,
    pub seed: u64,
    pub n: usize,
    /// Translated percentile table the sample was drawn from.
    pub percentiles: PercentileTable,
    /// Sorted sample values.
    pub values: Vec<f64>,
}

impl ReferenceFile {
    pub fn build(spec: &ReferenceSpec, n: usize, seed: u64) -> Result<Self> {
        let table = reference_table(spec)?;
        let sample = sample_from_percentiles(&table, n, seed)?;
        Ok(Self {
            generator: GENERATOR.to_string(),
            seed,
            n,
            percentiles: table,
            values: sample.values().to_vec(),
        })
    }

    pub fn distribution(&self) -> Result<EmpiricalDistribution> {
        EmpiricalDistribution::new(self.values.clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path)?;
        let mut writer = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut writer, self)?;
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path)
            .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }
}
