use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AdjacencyGraph;
use crate::corpus::{Corpus, Media, TokenizedUser};
use crate::error::{GeolocError, Result};
use crate::lexicon::LexiconParams;
use crate::model::Prediction;
use crate::state::StateLabel;
use crate::weighting::FeatureMethod;

/// Pairs each gold user with its predicted state. Predictions may come in
/// any order but must cover exactly the gold user ids.
pub fn align<'a>(preds: &[Prediction], gold: &'a Corpus) -> Result<Vec<(&'a TokenizedUser, StateLabel)>> {
    if preds.len() != gold.len() {
        return Err(GeolocError::Misaligned(format!(
            "{} predictions for {} gold users",
            preds.len(),
            gold.len()
        )));
    }
    let mut by_id: HashMap<&str, StateLabel> = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_id.insert(p.user_id.as_str(), p.state).is_some() {
            return Err(GeolocError::Misaligned(format!("duplicate prediction for {:?}", p.user_id)));
        }
    }
    gold.users()
        .iter()
        .map(|u| match by_id.get(u.user_id.as_str()) {
            Some(&s) => Ok((u, s)),
            None => Err(GeolocError::Misaligned(format!("no prediction for {:?}", u.user_id))),
        })
        .collect()
}

fn ratio(hits: usize, n: usize) -> f64 {
    hits as f64 / n as f64
}

pub fn accuracy(preds: &[Prediction], gold: &Corpus) -> Result<f64> {
    let pairs = align(preds, gold)?;
    if pairs.is_empty() {
        return Err(GeolocError::EmptyCorpus);
    }
    Ok(ratio(pairs.iter().filter(|(u, s)| u.state == *s).count(), pairs.len()))
}

fn near_miss_hits(pairs: &[(&TokenizedUser, StateLabel)], adjacency: &AdjacencyGraph) -> Result<usize> {
    let mut hits = 0;
    for (u, s) in pairs {
        for state in [u.state, *s] {
            if !adjacency.contains(state) {
                return Err(GeolocError::StateNotInAdjacency(state));
            }
        }
        if u.state == *s || adjacency.adjacent(u.state, *s) {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Accuracy where a prediction bordering the gold state also counts.
pub fn near_miss_accuracy(preds: &[Prediction], gold: &Corpus, adjacency: &AdjacencyGraph) -> Result<f64> {
    let pairs = align(preds, gold)?;
    if pairs.is_empty() {
        return Err(GeolocError::EmptyCorpus);
    }
    Ok(ratio(near_miss_hits(&pairs, adjacency)?, pairs.len()))
}

/// What produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub method: FeatureMethod,
    pub fraction: f64,
    pub num_features: usize,
    pub lexicon: Option<LexiconParams>,
    pub classifier: String,
    pub train_media: Media,
    pub dev_media: Media,
    pub test_media: Media,
    /// `dev` or `test`.
    pub scored_on: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCell {
    pub gold: StateLabel,
    pub predicted: StateLabel,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateScore {
    pub state: StateLabel,
    pub correct: usize,
    pub support: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ReportConfig,
    pub n_test: usize,
    pub correct: usize,
    pub near_miss_correct: usize,
    pub accuracy: f64,
    pub near_miss_accuracy: f64,
    pub per_state: Vec<StateScore>,
    /// Non-zero cells only, ordered by gold then predicted state.
    pub confusion: Vec<ConfusionCell>,
}

impl EvalReport {
    pub fn build(
        preds: &[Prediction],
        gold: &Corpus,
        adjacency: &AdjacencyGraph,
        config: ReportConfig,
    ) -> Result<EvalReport> {
        let pairs = align(preds, gold)?;
        if pairs.is_empty() {
            return Err(GeolocError::EmptyCorpus);
        }
        let near_miss_correct = near_miss_hits(&pairs, adjacency)?;
        let mut confusion: BTreeMap<(StateLabel, StateLabel), usize> = BTreeMap::new();
        let mut per_state: BTreeMap<StateLabel, (usize, usize)> = BTreeMap::new();
        for (u, s) in &pairs {
            *confusion.entry((u.state, *s)).or_default() += 1;
            let e = per_state.entry(u.state).or_default();
            e.1 += 1;
            if u.state == *s {
                e.0 += 1;
            }
        }
        let correct = per_state.values().map(|e| e.0).sum();
        Ok(EvalReport {
            config,
            n_test: pairs.len(),
            correct,
            near_miss_correct,
            accuracy: ratio(correct, pairs.len()),
            near_miss_accuracy: ratio(near_miss_correct, pairs.len()),
            per_state: per_state
                .into_iter()
                .map(|(state, (correct, support))| StateScore {
                    state,
                    correct,
                    support,
                    accuracy: ratio(correct, support),
                })
                .collect(),
            confusion: confusion
                .into_iter()
                .map(|((gold, predicted), count)| ConfusionCell { gold, predicted, count })
                .collect(),
        })
    }

    pub fn per_state_accuracy(&self) -> Vec<(StateLabel, f64)> {
        self.per_state.iter().map(|s| (s.state, s.accuracy)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceField {
    State,
    Gender,
    Industry,
}

impl SliceField {
    pub fn as_str(self) -> &'static str {
        match self {
            SliceField::State => "state",
            SliceField::Gender => "gender",
            SliceField::Industry => "industry",
        }
    }

    fn value(self, user: &TokenizedUser) -> Option<String> {
        match self {
            SliceField::State => Some(user.state.code().to_string()),
            SliceField::Gender => user.gender.map(|g| g.as_str().to_string()),
            SliceField::Industry => user.industry.clone(),
        }
    }
}

impl fmt::Display for SliceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SliceField {
    type Err = GeolocError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "state" => Ok(SliceField::State),
            "gender" => Ok(SliceField::Gender),
            "industry" => Ok(SliceField::Industry),
            _ => Err(GeolocError::UnknownField(s.to_string())),
        }
    }
}

pub const DEFAULT_MIN_SUPPORT: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    pub value: String,
    pub correct: usize,
    pub support: usize,
    pub accuracy: f64,
    /// Support is under the report's `min_support`.
    pub low_support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub field: SliceField,
    pub min_support: usize,
    pub rows: Vec<SliceRow>,
}

impl SliceReport {
    pub fn total_support(&self) -> usize {
        self.rows.iter().map(|r| r.support).sum()
    }

    pub fn get(&self, value: &str) -> Option<&SliceRow> {
        self.rows.iter().find(|r| r.value == value)
    }

    /// `value -> accuracy` for rows meeting the support threshold.
    pub fn supported_accuracies(&self) -> BTreeMap<String, f64> {
        self.rows
            .iter()
            .filter(|r| !r.low_support)
            .map(|r| (r.value.clone(), r.accuracy))
            .collect()
    }
}

/// Accuracy per value of `field` over test users carrying it; users
/// without the field are left out.
pub fn slice_accuracy(
    preds: &[Prediction],
    gold: &Corpus,
    field: SliceField,
    min_support: usize,
) -> Result<SliceReport> {
    let pairs = align(preds, gold)?;
    let mut groups: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (u, s) in &pairs {
        if let Some(v) = field.value(u) {
            let e = groups.entry(v).or_default();
            e.1 += 1;
            if u.state == *s {
                e.0 += 1;
            }
        }
    }
    if groups.is_empty() {
        return Err(GeolocError::FieldAbsent(field.to_string()));
    }
    Ok(SliceReport {
        field,
        min_support,
        rows: groups
            .into_iter()
            .map(|(value, (correct, support))| SliceRow {
                value,
                correct,
                support,
                accuracy: ratio(correct, support),
                low_support: support < min_support,
            })
            .collect(),
    })
}
