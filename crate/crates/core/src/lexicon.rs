//! Per-state location lexicons.
//!
//! Each vocabulary word is a candidate only for the state that maximizes its
//! WLH ratio. A state's lexicon keeps candidates used by at least `p`
//! distinct users with WLH at least `h`. When fewer than `t` words pass, the
//! WLH threshold (never the user threshold) is lowered for that state just
//! far enough to admit its next-best candidates.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::counts::{CountsTable, Vocabulary};
use crate::error::{GeolocError, Result};
use crate::state::StateLabel;
use crate::weighting::{wlh_with_state, FeatureMethod, FeatureSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LexiconParams {
    /// Minimum distinct-user count.
    pub p: u64,
    /// WLH threshold.
    pub h: f64,
    /// Minimum lexicon size.
    pub t: usize,
}

impl LexiconParams {
    pub fn new(p: u64, h: f64, t: usize) -> Result<LexiconParams> {
        let params = LexiconParams { p, h, t };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.p < 1 {
            problems.push(format!("p = {} must be >= 1", self.p));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            problems.push(format!("h = {} must be a positive number", self.h));
        }
        if self.t < 1 {
            problems.push(format!("t = {} must be >= 1", self.t));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(GeolocError::InvalidLexiconParams(problems.join("; ")))
        }
    }

    pub fn label(&self) -> String {
        format!("p={},h={},t={}", self.p, self.h, self.t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconEntry {
    pub word: String,
    pub wlh: f64,
    pub user_count: u64,
    /// Admitted below `h` to satisfy the minimum size.
    pub relaxed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateLexicon {
    pub state: StateLabel,
    /// Ranked by WLH descending, then user count descending, then word.
    pub entries: Vec<LexiconEntry>,
    /// Candidates assigned to this state that pass the user threshold.
    pub candidates: usize,
    /// The lowered threshold actually applied, when relaxation happened.
    pub relaxed_threshold: Option<f64>,
}

impl StateLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn effective_threshold(&self, params: &LexiconParams) -> f64 {
        self.relaxed_threshold.unwrap_or(params.h)
    }

    pub fn is_deficient(&self, params: &LexiconParams) -> bool {
        self.entries.len() < params.t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconSet {
    pub params: LexiconParams,
    pub lexicons: Vec<StateLexicon>,
}

impl LexiconSet {
    pub fn get(&self, state: StateLabel) -> Option<&StateLexicon> {
        self.lexicons.iter().find(|l| l.state == state)
    }

    pub fn deficient_states(&self) -> Vec<StateLabel> {
        self.lexicons
            .iter()
            .filter(|l| l.is_deficient(&self.params))
            .map(|l| l.state)
            .collect()
    }

    pub fn total_words(&self) -> usize {
        self.lexicons.iter().map(StateLexicon::len).sum()
    }

    /// The union of each state's top `size` words.
    pub fn pooled(&self, size: usize) -> BTreeSet<&str> {
        self.lexicons
            .iter()
            .flat_map(|l| l.entries.iter().take(size).map(|e| e.word.as_str()))
            .collect()
    }

    /// `state \t rank \t word \t wlh_score \t user_count \t relaxed_flag`,
    /// preceded by `#` lines holding the parameters and candidate counts.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# params\t{}\t{}\t{}", self.params.p, self.params.h, self.params.t)?;
        for l in &self.lexicons {
            writeln!(out, "# candidates\t{}\t{}", l.state, l.candidates)?;
        }
        for l in &self.lexicons {
            for (rank, e) in l.entries.iter().enumerate() {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    l.state,
                    rank + 1,
                    e.word,
                    e.wlh,
                    e.user_count,
                    u8::from(e.relaxed)
                )?;
            }
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<LexiconSet> {
        let bad = |line: usize, message: String| GeolocError::MalformedLexicon { line, message };
        let mut params = None;
        let mut lexicons: BTreeMap<StateLabel, StateLexicon> = BTreeMap::new();
        for (i, line) in input.lines().enumerate() {
            let n = i + 1;
            let line = line.map_err(|e| bad(n, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(n, format!("{s:?}: {e}")));
            let int = |s: &str| s.parse::<u64>().map_err(|e| bad(n, format!("{s:?}: {e}")));
            let state = |s: &str| StateLabel::parse(s).ok_or_else(|| bad(n, format!("unknown state {s:?}")));
            match fields.as_slice() {
                ["# params", p, h, t] => {
                    params = Some(LexiconParams::new(int(p)?, num(h)?, int(t)? as usize)?);
                }
                ["# candidates", s, c] => {
                    let s = state(s)?;
                    lexicons.insert(
                        s,
                        StateLexicon {
                            state: s,
                            entries: Vec::new(),
                            candidates: int(c)? as usize,
                            relaxed_threshold: None,
                        },
                    );
                }
                [s, rank, word, score, users, flag] => {
                    let lex = lexicons
                        .get_mut(&state(s)?)
                        .ok_or_else(|| bad(n, "entry for a state without a candidates line".into()))?;
                    if int(rank)? as usize != lex.entries.len() + 1 {
                        return Err(bad(n, format!("rank {rank} out of sequence")));
                    }
                    let relaxed = match *flag {
                        "0" => false,
                        "1" => true,
                        other => return Err(bad(n, format!("relaxed flag {other:?}"))),
                    };
                    lex.entries.push(LexiconEntry {
                        word: word.to_string(),
                        wlh: num(score)?,
                        user_count: int(users)?,
                        relaxed,
                    });
                }
                _ => return Err(bad(n, format!("expected 6 tab-separated fields, got {}", fields.len()))),
            }
        }
        let params = params.ok_or_else(|| bad(0, "missing params line".into()))?;
        let mut lexicons: Vec<StateLexicon> = lexicons.into_values().collect();
        for l in &mut lexicons {
            l.relaxed_threshold = l
                .entries
                .iter()
                .filter(|e| e.relaxed)
                .map(|e| e.wlh)
                .reduce(f64::min);
        }
        Ok(LexiconSet { params, lexicons })
    }
}

/// Builds one lexicon per state of the counts table. States that cannot
/// reach `t` words even with the WLH rule fully relaxed are returned short
/// and reported by [`LexiconSet::deficient_states`].
pub fn build_lexicons(vocab: &Vocabulary, counts: &CountsTable, params: LexiconParams) -> Result<LexiconSet> {
    params.validate()?;
    if vocab.is_empty() {
        return Err(GeolocError::EmptyVocabulary);
    }
    let mut assigned: BTreeMap<StateLabel, Vec<LexiconEntry>> =
        counts.states().iter().map(|s| (*s, Vec::new())).collect();
    for &id in vocab.ids() {
        let user_count = counts.word_user_count(id);
        if user_count < params.p {
            continue;
        }
        let (score, state) = wlh_with_state(id, counts);
        assigned.get_mut(&state).unwrap().push(LexiconEntry {
            word: counts.word(id).to_string(),
            wlh: score,
            user_count,
            relaxed: false,
        });
    }
    let lexicons = assigned
        .into_iter()
        .map(|(state, mut pool)| {
            pool.sort_by(|a, b| {
                b.wlh
                    .total_cmp(&a.wlh)
                    .then(b.user_count.cmp(&a.user_count))
                    .then_with(|| a.word.cmp(&b.word))
            });
            let candidates = pool.len();
            let strict = pool.iter().take_while(|e| e.wlh >= params.h).count();
            let keep = strict.max(params.t.min(candidates));
            pool.truncate(keep);
            for e in &mut pool[strict..] {
                e.relaxed = true;
            }
            let relaxed_threshold = (keep > strict).then(|| pool[keep - 1].wlh);
            if keep < params.t {
                log::warn!(
                    "lexicon for {state} is deficient: {keep} words, minimum size {}",
                    params.t
                );
            }
            StateLexicon {
                state,
                entries: pool,
                candidates,
                relaxed_threshold,
            }
        })
        .collect();
    Ok(LexiconSet { params, lexicons })
}

/// Jaccard coefficient of the two pooled word sets, each state truncated to
/// its top `size` words first. Two empty pools are identical (1.0).
pub fn jaccard_overlap(a: &LexiconSet, b: &LexiconSet, size: usize) -> Result<f64> {
    if size < 1 {
        return Err(GeolocError::InvalidParameter("lexicon size must be >= 1".into()));
    }
    let pa = a.pooled(size);
    let pb = b.pooled(size);
    let union = pa.union(&pb).count();
    if union == 0 {
        return Ok(1.0);
    }
    Ok(pa.intersection(&pb).count() as f64 / union as f64)
}

/// Union of all state lexicons in state order, then in-lexicon rank.
pub fn lexicon_feature_set(lexicons: &LexiconSet) -> Result<FeatureSet> {
    let mut seen = HashSet::new();
    let words: Vec<String> = lexicons
        .lexicons
        .iter()
        .flat_map(|l| l.entries.iter())
        .filter(|e| seen.insert(e.word.as_str()))
        .map(|e| e.word.clone())
        .collect();
    FeatureSet::new(FeatureMethod::Lexicon, 1.0, words)
}
