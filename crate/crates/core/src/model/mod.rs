//! Classifiers over a chosen feature set: multinomial Naive Bayes and a
//! one-vs-rest logistic linear model. Both predict the argmax of a per-state
//! score vector, breaking ties by state order.

mod linear;
mod nb;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Media, TokenizedUser};
use crate::error::{GeolocError, Result};
use crate::lexicon::LexiconParams;
use crate::state::StateLabel;
use crate::weighting::{FeatureMethod, FeatureSet};

pub use self::linear::{train_linear, LinearHyper, LinearModel, LinearObjective, SparseVec};
pub use self::nb::{train_nb, train_nb_over, NbModel};

/// Dense index over the words of a feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureIndex {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for FeatureIndex {
    fn from(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        FeatureIndex { words, index }
    }
}

impl From<FeatureIndex> for Vec<String> {
    fn from(f: FeatureIndex) -> Self {
        f.words
    }
}

impl FeatureIndex {
    pub fn from_set(set: &FeatureSet) -> FeatureIndex {
        FeatureIndex::from(set.words().to_vec())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// `(feature, count)` for the user's in-feature tokens, in feature order.
    pub fn counts(&self, user: &TokenizedUser) -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = user
            .tokens
            .iter()
            .filter_map(|(t, c)| self.get(t).map(|f| (f, c)))
            .collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub user_id: String,
    pub state: StateLabel,
    /// Log joint probability (NB) or margin (linear), per model state.
    pub scores: Vec<(StateLabel, f64)>,
}

/// First maximum wins, so ties go to the earlier state.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Nb(NbModel),
    Linear(LinearModel),
}

impl Model {
    pub fn states(&self) -> &[StateLabel] {
        match self {
            Model::Nb(m) => m.states(),
            Model::Linear(m) => m.states(),
        }
    }

    pub fn features(&self) -> &FeatureIndex {
        match self {
            Model::Nb(m) => m.features(),
            Model::Linear(m) => m.features(),
        }
    }

    pub fn scores(&self, user: &TokenizedUser) -> Vec<f64> {
        match self {
            Model::Nb(m) => m.scores(user),
            Model::Linear(m) => m.scores(user),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Nb(_) => "nb",
            Model::Linear(_) => "linear",
        }
    }
}

impl From<NbModel> for Model {
    fn from(m: NbModel) -> Self {
        Model::Nb(m)
    }
}

impl From<LinearModel> for Model {
    fn from(m: LinearModel) -> Self {
        Model::Linear(m)
    }
}

pub fn predict(model: &Model, user: &TokenizedUser) -> Prediction {
    let scores = model.scores(user);
    let best = argmax(&scores);
    Prediction {
        user_id: user.user_id.clone(),
        state: model.states()[best],
        scores: model.states().iter().copied().zip(scores).collect(),
    }
}

/// Predictions for every user of a corpus, in corpus order.
pub fn predict_corpus(model: &Model, corpus: &Corpus) -> Vec<Prediction> {
    corpus.users().par_iter().map(|u| predict(model, u)).collect()
}

/// Same as [`predict_corpus`] on the calling thread only; used for timing.
pub fn predict_corpus_sequential(model: &Model, corpus: &Corpus) -> Vec<Prediction> {
    corpus.users().iter().map(|u| predict(model, u)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Nb { alpha: f64 },
    Linear(LinearHyper),
}

impl ClassifierSpec {
    pub fn label(&self) -> String {
        match self {
            ClassifierSpec::Nb { alpha } => format!("nb(alpha={alpha})"),
            ClassifierSpec::Linear(h) => format!("linear(l2={},epochs={})", h.l2, h.epochs),
        }
    }

    pub fn train(&self, train: &Corpus, features: &FeatureSet) -> Result<Model> {
        match self {
            ClassifierSpec::Nb { alpha } => train_nb(train, features, *alpha).map(Model::Nb),
            ClassifierSpec::Linear(h) => train_linear(train, features, h).map(Model::Linear),
        }
    }
}

/// Where a model's features came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureProvenance {
    pub method: FeatureMethod,
    pub fraction: f64,
    pub source_media: Media,
    pub min_users: u64,
    pub lexicon: Option<LexiconParams>,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT_NAME: &str = "geoloc-model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config_hash: Option<String>,
    pub provenance: FeatureProvenance,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, provenance: FeatureProvenance, config_hash: Option<String>) -> Self {
        ModelFile {
            format: MODEL_FORMAT_NAME.into(),
            version: MODEL_FORMAT_VERSION,
            config_hash,
            provenance,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models always serialize")
    }

    pub fn from_json(text: &str) -> Result<ModelFile> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| GeolocError::ModelFormat(e.to_string()))?;
        if file.format != MODEL_FORMAT_NAME || file.version != MODEL_FORMAT_VERSION {
            return Err(GeolocError::ModelFormat(format!(
                "unsupported format {} version {}",
                file.format, file.version
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| GeolocError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = fs::read_to_string(path).map_err(|e| GeolocError::io(path, e))?;
        ModelFile::from_json(&text)
    }
}
