//! Comma-separated report tables.

use std::io::Write;

use super::experiment::CrossMediaRow;
use super::metrics::{EvalReport, SliceReport};
use super::timing::TimingReport;
use crate::error::Result;
use crate::state::StateLabel;

const EVAL_HEADER: [&str; 14] = [
    "scored_on",
    "train_media",
    "dev_media",
    "test_media",
    "method",
    "fraction",
    "lexicon",
    "classifier",
    "num_features",
    "n",
    "correct",
    "accuracy",
    "near_miss_correct",
    "near_miss_accuracy",
];

fn eval_fields(r: &EvalReport) -> Vec<String> {
    let c = &r.config;
    vec![
        c.scored_on.clone(),
        c.train_media.to_string(),
        c.dev_media.to_string(),
        c.test_media.to_string(),
        c.method.to_string(),
        c.fraction.to_string(),
        c.lexicon.map(|p| p.label()).unwrap_or_default(),
        c.classifier.clone(),
        c.num_features.to_string(),
        r.n_test.to_string(),
        r.correct.to_string(),
        r.accuracy.to_string(),
        r.near_miss_correct.to_string(),
        r.near_miss_accuracy.to_string(),
    ]
}

/// One row per report.
pub fn write_eval_csv<'a, W: Write>(out: W, reports: impl IntoIterator<Item = &'a EvalReport>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVAL_HEADER)?;
    for r in reports {
        w.write_record(eval_fields(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row per cross-media cell: the dev winner's test report plus the
/// grid cell it came from.
pub fn write_cross_csv<W: Write>(out: W, rows: &[CrossMediaRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["mixed", "train_size", "best_dev_accuracy"];
    header.extend(EVAL_HEADER);
    w.write_record(&header)?;
    for row in rows {
        let best_dev = row.result.dev[row.result.best].accuracy;
        let mut fields = vec![row.mixed.to_string(), row.train_size.to_string(), best_dev.to_string()];
        fields.extend(eval_fields(&row.result.test));
        w.write_record(&fields)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_slice_csv<W: Write>(out: W, report: &SliceReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([report.field.as_str(), "support", "correct", "accuracy", "low_support"])?;
    for r in &report.rows {
        w.write_record([
            r.value.clone(),
            r.support.to_string(),
            r.correct.to_string(),
            r.accuracy.to_string(),
            r.low_support.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Choropleth input: header `state,value`, one row per state.
pub fn write_state_values<W: Write>(out: W, values: &[(StateLabel, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state", "value"])?;
    for (s, v) in values {
        w.write_record([s.code().to_string(), v.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_timing_csv<W: Write>(out: W, report: &TimingReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["config", "num_features", "train_ms", "test_ms", "accuracy", "repetitions", "environment"])?;
    for r in &report.rows {
        w.write_record([
            r.label.clone(),
            r.num_features.to_string(),
            format!("{:.3}", r.train_ms),
            format!("{:.3}", r.test_ms),
            r.accuracy.to_string(),
            report.repetitions.to_string(),
            report.environment.clone(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_values_format() {
        let mut buf = Vec::new();
        let values = vec![("NY".parse().unwrap(), 0.25), ("TX".parse().unwrap(), 1.0)];
        write_state_values(&mut buf, &values).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "state,value\nNY,0.25\nTX,1\n");
    }
}
