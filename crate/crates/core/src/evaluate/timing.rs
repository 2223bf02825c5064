use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::experiment::{FeatureContext, GridCell};
use super::metrics::accuracy;
use crate::corpus::Corpus;
use crate::error::{GeolocError, Result};
use crate::model::predict_corpus_sequential;

pub const MIN_REPETITIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub label: String,
    pub num_features: usize,
    /// Median over repetitions, milliseconds.
    pub train_ms: f64,
    pub test_ms: f64,
    pub train_runs_ms: Vec<f64>,
    pub test_runs_ms: Vec<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub repetitions: usize,
    pub environment: String,
    pub rows: Vec<TimingRow>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn environment() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{} cpus={} single-threaded",
        std::env::consts::OS,
        std::env::consts::ARCH,
        cpus
    )
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Wall-clock training time (counting, feature selection and fitting) and
/// test time (predicting every test user) per configuration. Everything
/// runs on the calling thread, one configuration at a time.
pub fn benchmark(
    cells: &[GridCell],
    min_users: u64,
    train: &Corpus,
    test: &Corpus,
    repetitions: usize,
) -> Result<TimingReport> {
    if repetitions < MIN_REPETITIONS {
        return Err(GeolocError::InvalidParameter(format!(
            "benchmark needs at least {MIN_REPETITIONS} repetitions, got {repetitions}"
        )));
    }
    let mut rows = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut train_runs = Vec::with_capacity(repetitions);
        let mut test_runs = Vec::with_capacity(repetitions);
        let mut last = None;
        for _ in 0..repetitions {
            let start = Instant::now();
            let ctx = FeatureContext::new(train, min_users)?;
            let features = ctx.features(cell)?;
            let model = cell.classifier.train(train, &features)?;
            train_runs.push(elapsed_ms(start));

            let start = Instant::now();
            let preds = predict_corpus_sequential(&model, test);
            test_runs.push(elapsed_ms(start));
            last = Some((features.len(), preds));
        }
        let (num_features, preds) = last.expect("at least one repetition");
        rows.push(TimingRow {
            label: cell.label(),
            num_features,
            train_ms: median(&train_runs),
            test_ms: median(&test_runs),
            train_runs_ms: train_runs,
            test_runs_ms: test_runs,
            accuracy: accuracy(&preds, test)?,
        });
    }
    Ok(TimingReport {
        repetitions,
        environment: environment(),
        rows,
    })
}
