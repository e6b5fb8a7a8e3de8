use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use edukl::levels::{derive_cutpoints_with, CutPoints, CutPointsFile};
use edukl::pipeline::report::{read_indicators_csv, relabel, RunInputs};
use edukl::pipeline::{
    compute_indicators, cutpoint_units, ingest_path, write_plot_files, write_reports, Dataset,
    PipelineConfig, Reject,
};
use edukl::reference::{write_percentile_csv, ReferenceFile, ReferenceSpec};
use edukl::Result;

/// Signed KL indicators of learning level and inequality.
#[derive(Parser)]
#[command(name = "edukl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a reference distribution from a reference spec.
    BuildReference {
        #[arg(long)]
        spec: PathBuf,
        /// Number of draws.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output JSON file.
        #[arg(long)]
        out: PathBuf,
        /// Also write the translated percentile table as CSV.
        #[arg(long)]
        percentiles_out: Option<PathBuf>,
    },
    /// Derive KL band thresholds by k-means on learning-level profiles.
    DeriveCutpoints {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// k-means seed; defaults to the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compute municipality indicators and write all reports.
    ComputeIndicators {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        cutpoints: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Rebuild scatter, band and cross-tab files from an indicators CSV.
    ExportPlots {
        #[arg(long)]
        indicators: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Thresholds used for labels; the published defaults otherwise.
        #[arg(long)]
        cutpoints: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    path.map_or_else(|| Ok(PipelineConfig::default()), PipelineConfig::load)
}

struct Loaded {
    data: Dataset,
    rejects: Vec<Reject>,
    n_records: usize,
}

fn load_data(path: &Path, config: &PipelineConfig) -> Result<Loaded> {
    let ingested = ingest_path(path, &config.cycles)?;
    let n = ingested.records.len();
    let data = Dataset::new(ingested.records, config);
    if !ingested.rejects.is_empty() {
        eprintln!("{}: {} rows rejected", path.display(), ingested.rejects.len());
    }
    eprintln!(
        "{}: {n} records, {} in scope, {} municipalities",
        path.display(),
        n - data.out_of_scope,
        data.len()
    );
    Ok(Loaded {
        data,
        rejects: ingested.rejects,
        n_records: n,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildReference { spec, n, seed, out, percentiles_out } => {
            let spec = ReferenceSpec::load(&spec)?;
            let reference = ReferenceFile::build(&spec, n, seed)?;
            reference.save(&out)?;
            if let Some(path) = percentiles_out {
                write_percentile_csv(&reference.percentiles, std::fs::File::create(path)?)?;
            }
            println!("wrote {n} reference draws to {}", out.display());
        }
        Command::DeriveCutpoints { data, reference, seed, out, config } => {
            let config = load_config(config.as_deref())?;
            let seed = seed.unwrap_or(config.seed);
            let reference = ReferenceFile::load(&reference)?.distribution()?;
            let loaded = load_data(&data, &config)?;
            let units = cutpoint_units(&loaded.data, &reference, &config);
            if units.skipped > 0 {
                eprintln!("{} municipality-years skipped", units.skipped);
            }
            let derivation = derive_cutpoints_with(&units.profiles, &units.kls, seed, &config.kmeans)?;
            CutPointsFile::from_derivation(&derivation, seed, &config.kmeans).save(&out)?;
            println!(
                "thresholds {:?} from {} units, written to {}",
                derivation.cutpoints.thresholds(),
                units.kls.len(),
                out.display()
            );
        }
        Command::ComputeIndicators { data, reference, cutpoints, config, out_dir } => {
            let config = PipelineConfig::load(&config)?;
            let reference = ReferenceFile::load(&reference)?;
            let reference_dist = reference.distribution()?;
            let cutpoints = CutPointsFile::load(&cutpoints)?;
            let loaded = load_data(&data, &config)?;
            let analysis = compute_indicators(&loaded.data, &reference_dist, &cutpoints.thresholds, &config);
            let inputs = RunInputs {
                config: &config,
                reference: &reference,
                reference_dist: &reference_dist,
                cutpoints: &cutpoints,
                dataset: &loaded.data,
                rejects: &loaded.rejects,
                n_records: loaded.n_records,
            };
            write_reports(&out_dir, &inputs, &analysis)?;
            println!(
                "{} municipalities ({} level-eligible, {} gap-eligible), reports in {}",
                analysis.indicators.len(),
                analysis.indicators.iter().filter(|i| i.level.ok).count(),
                analysis.indicators.iter().filter(|i| i.gap.ok).count(),
                out_dir.display()
            );
        }
        Command::ExportPlots { indicators, out_dir, cutpoints } => {
            let cuts = match cutpoints {
                Some(path) => CutPointsFile::load(&path)?.thresholds,
                None => CutPoints::TABLE2,
            };
            let mut rows = read_indicators_csv(&indicators)?;
            relabel(&mut rows, &cuts);
            write_plot_files(&out_dir, &rows, &cuts)?;
            println!("plot files for {} municipalities in {}", rows.len(), out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
