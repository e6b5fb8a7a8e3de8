#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::PathBuf;

use edukl::empirical::PercentileTable;
use edukl::reference::{reference_table, sample_from_percentiles, ReferenceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const CYCLES: [i32; 5] = [2007, 2009, 2011, 2013, 2015];

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn year5_reference_table() -> PercentileTable {
    let spec = ReferenceSpec::load(&fixture("reference/reference_year5.toml")).unwrap();
    reference_table(&spec).unwrap()
}

/// One synthetic municipality.
pub struct Municipality {
    pub id: &'static str,
    /// Location shift in reference standard deviations.
    pub shift_sd: f64,
    /// Share of students who answered the questionnaire.
    pub response: f64,
}

/// The three municipalities of the end-to-end fixture.
pub const FIXTURE_MUNICIPALITIES: [Municipality; 3] = [
    Municipality { id: "3550308", shift_sd: 0.0, response: 0.9 },
    Municipality { id: "2927408", shift_sd: -0.5, response: 0.85 },
    Municipality { id: "2211001", shift_sd: -1.5, response: 0.45 },
];

pub const FIXTURE_PER_YEAR: usize = 150;
pub const FIXTURE_SEED: u64 = 2015;

/// Student CSV for `munis`. Scores within a (municipality, year) are reference
/// draws shifted by `shift_sd` reference SDs, matched by rank to a latent
/// variable correlated 0.4 with SES, so higher SES means higher scores while
/// the score margin stays the shifted reference. A few out-of-scope rows and
/// one invalid row are appended.
pub fn synthetic_students(
    table: &PercentileTable,
    munis: &[Municipality],
    per_year: usize,
    seed: u64,
) -> String {
    let sd = sample_from_percentiles(table, 200_000, seed).unwrap().std_dev();
    let z = Normal::new(0.0, 1.0).unwrap();
    let rho: f64 = 0.4;
    let mut out = String::from("municipality_id,year,grade,subject,score,ses,answered_questionnaire\n");
    for (m, muni) in munis.iter().enumerate() {
        for (y, &year) in CYCLES.iter().enumerate() {
            let unit_seed = seed ^ ((m as u64 + 1) << 32) ^ (y as u64 + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(unit_seed);
            let scores = sample_from_percentiles(table, per_year, unit_seed).unwrap();
            let students: Vec<(f64, f64, bool)> = (0..per_year)
                .map(|_| {
                    let ses: f64 = z.sample(&mut rng);
                    let e: f64 = z.sample(&mut rng);
                    let answered = rng.random_bool(muni.response);
                    (ses, rho * ses + (1.0 - rho * rho).sqrt() * e, answered)
                })
                .collect();
            let mut order: Vec<usize> = (0..per_year).collect();
            order.sort_by(|&a, &b| students[a].1.total_cmp(&students[b].1));
            let mut score_of = vec![0.0; per_year];
            for (rank, &i) in order.iter().enumerate() {
                score_of[i] = (scores.values()[rank] + muni.shift_sd * sd).clamp(0.0, 500.0);
            }
            for (i, &(ses, _, answered)) in students.iter().enumerate() {
                let ses = if answered { format!("{ses:.3}") } else { String::new() };
                writeln!(
                    out,
                    "{},{year},year5,mathematics,{:.2},{ses},{}",
                    muni.id,
                    score_of[i],
                    u8::from(answered)
                )
                .unwrap();
            }
        }
        writeln!(out, "{},2011,year9,mathematics,251.00,0.100,1", muni.id).unwrap();
        writeln!(out, "{},2011,year5,reading,198.50,,0", muni.id).unwrap();
    }
    writeln!(out, "{},2013,year5,mathematics,612.50,0.200,1", munis[0].id).unwrap();
    out
}

pub fn fixture_students() -> String {
    synthetic_students(
        &year5_reference_table(),
        &FIXTURE_MUNICIPALITIES,
        FIXTURE_PER_YEAR,
        FIXTURE_SEED,
    )
}
