//! Feature scoring (information gain ratio, word locality heuristic) and
//! fraction cuts of the ranked vocabulary.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::counts::{CountsTable, Vocabulary, WordId};
use crate::error::{GeolocError, Result};
use crate::state::StateLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMethod {
    Igr,
    Wlh,
    Lexicon,
    /// The whole pre-filtered vocabulary, unranked.
    All,
}

impl FeatureMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMethod::Igr => "igr",
            FeatureMethod::Wlh => "wlh",
            FeatureMethod::Lexicon => "lexicon",
            FeatureMethod::All => "all",
        }
    }
}

impl fmt::Display for FeatureMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMethod {
    type Err = GeolocError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "igr" => Ok(FeatureMethod::Igr),
            "wlh" => Ok(FeatureMethod::Wlh),
            "lexicon" | "lexicons" => Ok(FeatureMethod::Lexicon),
            "all" | "all-words" => Ok(FeatureMethod::All),
            other => Err(GeolocError::InvalidParameter(format!("unknown feature method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureScore {
    pub word: String,
    pub method: FeatureMethod,
    pub score: f64,
    pub user_count: u64,
    /// Set when the score is a convention rather than a computed value
    /// (IGR with zero intrinsic entropy).
    pub degenerate: bool,
}

/// An ordered subset of the vocabulary used as classifier features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub method: FeatureMethod,
    pub fraction: f64,
    words: Vec<String>,
}

impl FeatureSet {
    pub fn new(method: FeatureMethod, fraction: f64, words: Vec<String>) -> Result<FeatureSet> {
        if words.is_empty() {
            return Err(GeolocError::EmptyFeatureSet);
        }
        Ok(FeatureSet {
            method,
            fraction,
            words,
        })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn label(&self) -> String {
        match self.method {
            FeatureMethod::Lexicon | FeatureMethod::All => self.method.to_string(),
            m => format!("{m}@{}", self.fraction),
        }
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Information gain ratio of the presence/absence of a word over states,
/// with the user-presence estimator and natural logarithms:
/// `IG(w) = H(S) - P(w) H(S|w) - P(not w) H(S|not w)`,
/// `IV(w) = -P(w) ln P(w) - P(not w) ln P(not w)`.
/// When `IV(w) = 0` the score is 0 and flagged degenerate.
pub fn igr(id: WordId, counts: &CountsTable) -> FeatureScore {
    let n_states = counts.states().len();
    let users = counts.total_users();
    let with = counts.word_user_count(id);
    let p_w = with as f64 / users as f64;
    let p_not = (users - with) as f64 / users as f64;
    let h_classes: f64 = -(0..n_states).map(|s| plogp(counts.presence_p_state(s))).sum::<f64>();
    let h_present: f64 = -counts
        .word_cells(id)
        .map(|(s, _, _)| plogp(counts.presence_p_state_given_word(id, s)))
        .sum::<f64>();
    let h_absent: f64 = -(0..n_states)
        .filter_map(|s| counts.presence_p_state_given_absent(id, s))
        .map(plogp)
        .sum::<f64>();
    let intrinsic = -plogp(p_w) - plogp(p_not);
    let (score, degenerate) = if intrinsic > 0.0 {
        let gain = h_classes - p_w * h_present - p_not * h_absent;
        (gain.max(0.0) / intrinsic, false)
    } else {
        (0.0, true)
    };
    FeatureScore {
        word: counts.word(id).to_string(),
        method: FeatureMethod::Igr,
        score,
        user_count: with,
        degenerate,
    }
}

/// `max_s P(w|s) / P(w)` under the token-mass estimator, with the maximizing
/// state (the first in state order on ties).
pub fn wlh_with_state(id: WordId, counts: &CountsTable) -> (f64, StateLabel) {
    let p_w = counts.p_word(id);
    let mut best = (f64::NEG_INFINITY, counts.states()[0]);
    for (si, state) in counts.states().iter().enumerate() {
        let ratio = counts.p_word_given_state(id, si) / p_w;
        if ratio > best.0 {
            best = (ratio, *state);
        }
    }
    best
}

pub fn wlh(id: WordId, counts: &CountsTable) -> FeatureScore {
    FeatureScore {
        word: counts.word(id).to_string(),
        method: FeatureMethod::Wlh,
        score: wlh_with_state(id, counts).0,
        user_count: counts.word_user_count(id),
        degenerate: false,
    }
}

pub fn score(id: WordId, counts: &CountsTable, method: FeatureMethod) -> Result<FeatureScore> {
    match method {
        FeatureMethod::Igr => Ok(igr(id, counts)),
        FeatureMethod::Wlh => Ok(wlh(id, counts)),
        FeatureMethod::All => Ok(FeatureScore {
            word: counts.word(id).to_string(),
            method,
            score: 0.0,
            user_count: counts.word_user_count(id),
            degenerate: false,
        }),
        FeatureMethod::Lexicon => Err(GeolocError::InvalidParameter(
            "lexicon features are built with build_lexicons, not ranked".into(),
        )),
    }
}

/// Descending score, then descending user count, then word.
pub fn ranking_order(a: &FeatureScore, b: &FeatureScore) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.user_count.cmp(&a.user_count))
        .then_with(|| a.word.cmp(&b.word))
}

/// Scores and ranks the whole vocabulary.
pub fn rank(vocab: &Vocabulary, counts: &CountsTable, method: FeatureMethod) -> Result<Vec<FeatureScore>> {
    if vocab.is_empty() {
        return Err(GeolocError::EmptyVocabulary);
    }
    let mut scores = vocab
        .ids()
        .iter()
        .map(|&id| score(id, counts, method))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(ranking_order);
    Ok(scores)
}

/// `ceil(fraction * n)`, at least 1, tolerant of representation error in
/// the product.
pub fn selection_size(fraction: f64, n: usize) -> usize {
    let raw = fraction * n as f64;
    let rounded = raw.round();
    let k = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (k as usize).clamp(1, n.max(1))
}

pub fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(GeolocError::InvalidFraction(fraction))
    }
}

/// The top `fraction` of an existing ranking.
pub fn select(ranked: &[FeatureScore], method: FeatureMethod, fraction: f64) -> Result<FeatureSet> {
    check_fraction(fraction)?;
    if ranked.is_empty() {
        return Err(GeolocError::EmptyVocabulary);
    }
    let k = selection_size(fraction, ranked.len());
    FeatureSet::new(method, fraction, ranked[..k].iter().map(|s| s.word.clone()).collect())
}

pub fn rank_and_select(
    vocab: &Vocabulary,
    counts: &CountsTable,
    method: FeatureMethod,
    fraction: f64,
) -> Result<FeatureSet> {
    check_fraction(fraction)?;
    let ranked = rank(vocab, counts, method)?;
    select(&ranked, method, fraction)
}

/// `rank \t word \t method \t score`, ranks starting at 1.
pub fn write_scores<W: Write>(mut out: W, ranked: &[FeatureScore]) -> std::io::Result<()> {
    for (i, s) in ranked.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}\t{}", i + 1, s.word, s.method, s.score)?;
    }
    Ok(())
}
