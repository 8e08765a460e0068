//! FIFA World Cup knockout records as a 5-1 arena application.
//!
//! A final-result code counts knockout wins: 0 means the team missed the
//! top 16 (treated as a first-round loss), 1..4 mean reaching the top
//! 16/8/4/2 and then losing, 5 means winning the title. The six codes map
//! onto the six terminals of a 5-1 arena. Bundled train/test datasets hold
//! ten tournaments per country for Brazil, Italy, Argentina and Sweden.

use crate::error::{ArenaError, Result};
use crate::grid::DensityGrid;
use crate::infer::{map_estimate, predict_frequency, predict_map, MapEstimate, SearchBox};
use crate::lattice::{ArenaSpec, PredictionDist, ResultCounts, State};
use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

const TRAIN_CSV: &str = include_str!("data/worldcup_train.csv");
const TEST_CSV: &str = include_str!("data/worldcup_test.csv");

/// The knockout arena: five wins take the title, one loss eliminates.
pub fn worldcup_spec() -> ArenaSpec {
    ArenaSpec::new(5, 1).expect("5-1 is a valid arena")
}

/// One country's final-result code in one tournament.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TournamentRecord {
    pub country: String,
    pub year: i32,
    pub code: u8,
}

/// Maps a result code to its 5-1 arena terminal: `k` wins then a loss for
/// codes 0..=4, the loss-free `(5, 0)` for the champion code 5.
pub fn code_to_state(code: u8) -> Result<State> {
    match code {
        0..=4 => Ok(State::new(code as u32, 1)),
        5 => Ok(State::new(5, 0)),
        _ => Err(ArenaError::Parse { line: 0, message: format!("result code {code} out of range 0..=5") }),
    }
}

/// Inverse of [`code_to_state`] for report output.
pub fn state_to_code(state: State) -> u8 {
    if state.losses == 0 {
        5
    } else {
        state.wins as u8
    }
}

/// Reads records from a `country,year,code` CSV file.
pub fn load_records<P: AsRef<Path>>(path: P) -> Result<Vec<TournamentRecord>> {
    let file = std::fs::File::open(path)?;
    parse_records(file)
}

/// Parses records from any reader holding `country,year,code` CSV.
pub fn parse_records<R: Read>(reader: R) -> Result<Vec<TournamentRecord>> {
    let mut csv_reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv_reader.headers().map_err(|e| csv_to_parse_error(&e))?.clone();
    let expected = ["country", "year", "code"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(ArenaError::Parse {
            line: 1,
            message: format!("expected header country,year,code, got {}", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for row in csv_reader.records() {
        let row = row.map_err(|e| csv_to_parse_error(&e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 3 {
            return Err(ArenaError::Parse { line, message: format!("expected 3 fields, got {}", row.len()) });
        }
        let country = row[0].to_string();
        if country.is_empty() {
            return Err(ArenaError::Parse { line, message: "empty country name".into() });
        }
        let year: i32 = row[1]
            .parse()
            .map_err(|_| ArenaError::Parse { line, message: format!("bad year '{}'", &row[1]) })?;
        let code: u8 = row[2]
            .parse()
            .map_err(|_| ArenaError::Parse { line, message: format!("bad code '{}'", &row[2]) })?;
        code_to_state(code).map_err(|_| ArenaError::Parse {
            line,
            message: format!("result code {code} out of range 0..=5"),
        })?;
        if !seen.insert((country.clone(), year)) {
            return Err(ArenaError::DuplicateRecord { country, year });
        }
        records.push(TournamentRecord { country, year, code });
    }
    Ok(records)
}

fn csv_to_parse_error(err: &csv::Error) -> ArenaError {
    let line = match err.kind() {
        csv::ErrorKind::Utf8 { pos, .. } => pos.as_ref().map(|p| p.line()).unwrap_or(0),
        _ => err.position().map(|p| p.line()).unwrap_or(0),
    };
    ArenaError::Parse { line, message: err.to_string() }
}

/// The bundled training tournaments (1930..2010, every other World Cup).
pub fn bundled_train() -> Vec<TournamentRecord> {
    parse_records(TRAIN_CSV.as_bytes()).expect("bundled training data is well-formed")
}

/// The bundled test tournaments (1934..2014, the other half).
pub fn bundled_test() -> Vec<TournamentRecord> {
    parse_records(TEST_CSV.as_bytes()).expect("bundled test data is well-formed")
}

/// Countries in first-appearance order.
pub fn countries(records: &[TournamentRecord]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for record in records {
        if !out.contains(&record.country) {
            out.push(record.country.clone());
        }
    }
    out
}

/// Result tallies of one country over the 5-1 terminal set.
pub fn country_counts(records: &[TournamentRecord], country: &str) -> Result<ResultCounts> {
    let mut counts = ResultCounts::new(worldcup_spec());
    for record in records.iter().filter(|r| r.country == country) {
        counts.record(code_to_state(record.code)?)?;
    }
    Ok(counts)
}

/// One country's train/test comparison.
#[derive(Debug, Clone)]
pub struct CountryComparison {
    pub country: String,
    pub estimate: MapEstimate,
    /// Test-set frequencies, the stand-in for the real probabilities.
    pub test_frequencies: PredictionDist,
    /// Model prediction from the training-set MAP estimate.
    pub model_prediction: PredictionDist,
    /// Training-set frequencies, the nonparametric baseline.
    pub train_frequencies: PredictionDist,
    pub d_model: f64,
    pub d_frequency: f64,
}

/// Train/test comparison of the model predictor against the frequency
/// baseline, one entry per country.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub entries: Vec<CountryComparison>,
}

/// One country's pooled-data estimate and prediction.
#[derive(Debug, Clone)]
pub struct PooledEntry {
    pub country: String,
    pub estimate: MapEstimate,
    pub pooled_frequencies: PredictionDist,
    pub prediction: PredictionDist,
}

/// Estimates from training data, predicts, and scores both predictors
/// against the test frequencies.
pub fn evaluate(
    train: &[TournamentRecord],
    test: &[TournamentRecord],
    bounds: &SearchBox,
) -> Result<ComparisonReport> {
    if train.is_empty() || test.is_empty() {
        return Err(ArenaError::EmptyData);
    }
    let train_countries = countries(train);
    let test_countries: BTreeSet<String> = countries(test).into_iter().collect();
    for country in &train_countries {
        if !test_countries.contains(country) {
            return Err(ArenaError::MissingCountry { country: country.clone() });
        }
    }
    for country in &test_countries {
        if !train_countries.contains(country) {
            return Err(ArenaError::MissingCountry { country: country.clone() });
        }
    }

    let spec = worldcup_spec();
    let prior = DensityGrid::standard_normal();
    let mut entries = Vec::with_capacity(train_countries.len());
    for country in &train_countries {
        let train_counts = country_counts(train, country)?;
        let test_counts = country_counts(test, country)?;
        let estimate = map_estimate(spec, &prior, &train_counts, bounds)?;
        let model_prediction = predict_map(spec, &estimate)?;
        let train_frequencies = predict_frequency(&train_counts)?;
        let test_frequencies = predict_frequency(&test_counts)?;
        let d_model = model_prediction.euclidean_distance(&test_frequencies)?;
        let d_frequency = train_frequencies.euclidean_distance(&test_frequencies)?;
        entries.push(CountryComparison {
            country: country.clone(),
            estimate,
            test_frequencies,
            model_prediction,
            train_frequencies,
            d_model,
            d_frequency,
        });
    }
    Ok(ComparisonReport { entries })
}

/// Pools both datasets per country and re-estimates on all results.
pub fn evaluate_pooled(
    train: &[TournamentRecord],
    test: &[TournamentRecord],
    bounds: &SearchBox,
) -> Result<Vec<PooledEntry>> {
    let mut pooled: Vec<TournamentRecord> = train.to_vec();
    pooled.extend(test.iter().cloned());
    let spec = worldcup_spec();
    let prior = DensityGrid::standard_normal();
    let mut out = Vec::new();
    for country in countries(&pooled) {
        let counts = country_counts(&pooled, &country)?;
        let estimate = map_estimate(spec, &prior, &counts, bounds)?;
        let prediction = predict_map(spec, &estimate)?;
        let pooled_frequencies = predict_frequency(&counts)?;
        out.push(PooledEntry { country, estimate, pooled_frequencies, prediction });
    }
    Ok(out)
}

/// Writes the per-code comparison as CSV rows `country,code,F,P1,P2`
/// (codes descending, champion first).
pub fn write_report_csv<W: Write>(out: &mut W, report: &ComparisonReport) -> Result<()> {
    writeln!(out, "country,code,F,P1,P2")?;
    for entry in &report.entries {
        for (k, (state, f)) in entry.test_frequencies.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                entry.country,
                state_to_code(state),
                f,
                entry.model_prediction.probs()[k],
                entry.train_frequencies.probs()[k],
            )?;
        }
    }
    Ok(())
}

/// Writes the distance summary as CSV rows `country,d_P1_F,d_P2_F`.
pub fn write_distances_csv<W: Write>(out: &mut W, report: &ComparisonReport) -> Result<()> {
    writeln!(out, "country,d_P1_F,d_P2_F")?;
    for entry in &report.entries {
        writeln!(out, "{},{},{}", entry.country, entry.d_model, entry.d_frequency)?;
    }
    Ok(())
}

/// Writes pooled estimates and predictions as CSV rows `country,code,F,P`.
pub fn write_pooled_csv<W: Write>(out: &mut W, entries: &[PooledEntry]) -> Result<()> {
    writeln!(out, "country,code,F,P")?;
    for entry in entries {
        for (k, (state, f)) in entry.pooled_frequencies.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                entry.country,
                state_to_code(state),
                f,
                entry.prediction.probs()[k],
            )?;
        }
    }
    Ok(())
}
