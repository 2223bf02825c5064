//! Sparse word-by-state count tables over a training corpus.
//!
//! The table stores exact integer counts only. Two probability estimators
//! are derived from it:
//!
//! - token mass: `P(w|s) = tokens(w,s) / tokens(s)`, `P(w) = tokens(w) / tokens`,
//!   `P(s) = tokens(s) / tokens`;
//! - user presence: `P(w) = users(w) / users`, `P(s|w) = users(w,s) / users(w)`,
//!   `P(s|not w) = (users(s) - users(w,s)) / (users - users(w))`.

use std::collections::HashMap;
use std::io::Write;

use crate::corpus::Corpus;
use crate::error::{GeolocError, Result};
use crate::state::StateLabel;

pub type WordId = usize;

/// Per-word sparse row: `(state index, tokens, users)` sorted by state index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct WordRow {
    cells: Vec<(usize, u64, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountsTable {
    states: Vec<StateLabel>,
    words: Vec<String>,
    word_index: HashMap<String, WordId>,
    rows: Vec<WordRow>,
    word_user_count: Vec<u64>,
    word_token_total: Vec<u64>,
    state_token_total: Vec<u64>,
    state_user_total: Vec<u64>,
    grand_token_total: u64,
    total_users: u64,
}

impl CountsTable {
    /// Counts every token of every user in `train`. The result does not
    /// depend on user order: words are indexed lexicographically.
    pub fn build(train: &Corpus) -> Result<CountsTable> {
        if train.is_empty() {
            return Err(GeolocError::EmptyCorpus);
        }
        let states = train.states();
        let state_pos: HashMap<StateLabel, usize> =
            states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let mut cells: HashMap<&str, HashMap<usize, (u64, u64)>> = HashMap::new();
        let mut state_token_total = vec![0u64; states.len()];
        let mut state_user_total = vec![0u64; states.len()];
        for user in train.users() {
            let si = state_pos[&user.state];
            state_user_total[si] += 1;
            for (tok, count) in user.tokens.iter() {
                let cell = cells.entry(tok).or_default().entry(si).or_default();
                cell.0 += u64::from(count);
                cell.1 += 1;
                state_token_total[si] += u64::from(count);
            }
        }
        let mut words: Vec<&str> = cells.keys().copied().collect();
        words.sort_unstable();
        let mut rows = Vec::with_capacity(words.len());
        let mut word_user_count = Vec::with_capacity(words.len());
        let mut word_token_total = Vec::with_capacity(words.len());
        for w in &words {
            let mut row: Vec<(usize, u64, u64)> =
                cells[w].iter().map(|(&s, &(t, u))| (s, t, u)).collect();
            row.sort_unstable();
            word_user_count.push(row.iter().map(|c| c.2).sum());
            word_token_total.push(row.iter().map(|c| c.1).sum());
            rows.push(WordRow { cells: row });
        }
        let words: Vec<String> = words.into_iter().map(str::to_string).collect();
        let word_index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(CountsTable {
            grand_token_total: state_token_total.iter().sum(),
            total_users: state_user_total.iter().sum(),
            states,
            words,
            word_index,
            rows,
            word_user_count,
            word_token_total,
            state_token_total,
            state_user_total,
        })
    }

    /// Every count multiplied by `k`. Probabilities are unchanged.
    pub fn scaled(&self, k: u64) -> CountsTable {
        let mut out = self.clone();
        for row in &mut out.rows {
            for c in &mut row.cells {
                c.1 *= k;
                c.2 *= k;
            }
        }
        for v in out
            .word_user_count
            .iter_mut()
            .chain(out.word_token_total.iter_mut())
            .chain(out.state_token_total.iter_mut())
            .chain(out.state_user_total.iter_mut())
        {
            *v *= k;
        }
        out.grand_token_total *= k;
        out.total_users *= k;
        out
    }

    pub fn states(&self) -> &[StateLabel] {
        &self.states
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word_id(&self, word: &str) -> Option<WordId> {
        self.word_index.get(word).copied()
    }

    pub fn require_word(&self, word: &str) -> Result<WordId> {
        self.word_id(word)
            .ok_or_else(|| GeolocError::UnknownWord(word.to_string()))
    }

    /// `(state index, tokens, users)` for the states where the word occurs.
    pub fn word_cells(&self, id: WordId) -> impl Iterator<Item = (usize, u64, u64)> + '_ {
        self.rows[id].cells.iter().copied()
    }

    pub fn word_state_tokens(&self, id: WordId, state_idx: usize) -> u64 {
        self.cell(id, state_idx).map_or(0, |c| c.1)
    }

    pub fn word_state_users(&self, id: WordId, state_idx: usize) -> u64 {
        self.cell(id, state_idx).map_or(0, |c| c.2)
    }

    fn cell(&self, id: WordId, state_idx: usize) -> Option<(usize, u64, u64)> {
        let cells = &self.rows[id].cells;
        cells
            .binary_search_by_key(&state_idx, |c| c.0)
            .ok()
            .map(|i| cells[i])
    }

    pub fn word_user_count(&self, id: WordId) -> u64 {
        self.word_user_count[id]
    }

    pub fn word_token_total(&self, id: WordId) -> u64 {
        self.word_token_total[id]
    }

    pub fn state_token_total(&self, state_idx: usize) -> u64 {
        self.state_token_total[state_idx]
    }

    pub fn state_user_total(&self, state_idx: usize) -> u64 {
        self.state_user_total[state_idx]
    }

    pub fn grand_token_total(&self) -> u64 {
        self.grand_token_total
    }

    pub fn total_users(&self) -> u64 {
        self.total_users
    }

    // Token-mass estimator.

    /// Zero for a state without tokens.
    pub fn p_word_given_state(&self, id: WordId, state_idx: usize) -> f64 {
        match self.state_token_total[state_idx] {
            0 => 0.0,
            total => self.word_state_tokens(id, state_idx) as f64 / total as f64,
        }
    }

    pub fn p_word(&self, id: WordId) -> f64 {
        self.word_token_total[id] as f64 / self.grand_token_total as f64
    }

    pub fn p_state(&self, state_idx: usize) -> f64 {
        self.state_token_total[state_idx] as f64 / self.grand_token_total as f64
    }

    pub fn p_state_given_word(&self, id: WordId, state_idx: usize) -> f64 {
        self.word_state_tokens(id, state_idx) as f64 / self.word_token_total[id] as f64
    }

    // User-presence estimator.

    pub fn presence_p_word(&self, id: WordId) -> f64 {
        self.word_user_count[id] as f64 / self.total_users as f64
    }

    pub fn presence_p_state(&self, state_idx: usize) -> f64 {
        self.state_user_total[state_idx] as f64 / self.total_users as f64
    }

    pub fn presence_p_state_given_word(&self, id: WordId, state_idx: usize) -> f64 {
        self.word_state_users(id, state_idx) as f64 / self.word_user_count[id] as f64
    }

    /// `None` when every user contains the word.
    pub fn presence_p_state_given_absent(&self, id: WordId, state_idx: usize) -> Option<f64> {
        let absent = self.total_users - self.word_user_count[id];
        if absent == 0 {
            return None;
        }
        let absent_in_state = self.state_user_total[state_idx] - self.word_state_users(id, state_idx);
        Some(absent_in_state as f64 / absent as f64)
    }

    /// `word \t state \t count` rows preceded by a `#` totals block.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# grand_token_total\t{}", self.grand_token_total)?;
        writeln!(out, "# total_users\t{}", self.total_users)?;
        for (i, s) in self.states.iter().enumerate() {
            writeln!(
                out,
                "# state\t{}\t{}\t{}",
                s, self.state_token_total[i], self.state_user_total[i]
            )?;
        }
        for (id, w) in self.words.iter().enumerate() {
            for (si, tokens, _) in self.word_cells(id) {
                writeln!(out, "{w}\t{}\t{tokens}", self.states[si])?;
            }
        }
        Ok(())
    }
}

/// Words that survived the minimum-distinct-users filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    ids: Vec<WordId>,
    min_users: u64,
    dropped: usize,
}

impl Vocabulary {
    pub fn ids(&self) -> &[WordId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn min_users(&self) -> u64 {
        self.min_users
    }

    pub fn retained(&self) -> usize {
        self.ids.len()
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn contains(&self, id: WordId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn words<'a>(&'a self, counts: &'a CountsTable) -> impl Iterator<Item = &'a str> + 'a {
        self.ids.iter().map(move |&id| counts.word(id))
    }

    /// Every word of the table, unfiltered.
    pub fn all(counts: &CountsTable) -> Vocabulary {
        Vocabulary {
            ids: (0..counts.num_words()).collect(),
            min_users: 1,
            dropped: 0,
        }
    }
}

pub const DEFAULT_MIN_USERS: u64 = 3;

/// Keeps the words used by at least `min_users` distinct training users.
pub fn prefilter(counts: &CountsTable, min_users: u64) -> Result<Vocabulary> {
    if min_users == 0 {
        return Err(GeolocError::InvalidParameter("min_users must be >= 1".into()));
    }
    let ids: Vec<WordId> = (0..counts.num_words())
        .filter(|&id| counts.word_user_count(id) >= min_users)
        .collect();
    Ok(Vocabulary {
        dropped: counts.num_words() - ids.len(),
        ids,
        min_users,
    })
}

/// Token-mass relative frequency of `word` in each state of the table.
pub fn relative_state_frequency(word: &str, counts: &CountsTable) -> Result<Vec<(StateLabel, f64)>> {
    let id = counts.require_word(word)?;
    Ok(counts
        .states()
        .iter()
        .enumerate()
        .map(|(si, s)| (*s, counts.p_word_given_state(id, si)))
        .collect())
}
