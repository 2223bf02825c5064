//! Fixtures and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the scoring code under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use geoloc_core::corpus::{Corpus, Media, TokenBag, TokenizedUser};
use geoloc_core::StateLabel;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

pub fn state(code: &str) -> StateLabel {
    code.parse().unwrap()
}

pub fn user(id: &str, st: StateLabel, tokens: &[(&str, u32)]) -> TokenizedUser {
    let mut bag = TokenBag::new();
    for (t, c) in tokens {
        bag.add(t, *c);
    }
    TokenizedUser {
        user_id: id.to_string(),
        state: st,
        media: Media::Blog,
        tokens: bag,
        char_count: 0,
        doc_char_counts: vec![],
        gender: None,
        industry: None,
    }
}

/// Random corpus with up to `max_users` users over the first `states`
/// states and a vocabulary of `words` words. Every user has at least one
/// token.
pub fn random_corpus(rng: &mut ChaCha8Rng, max_users: usize, words: usize, states: usize) -> Corpus {
    let labels: Vec<StateLabel> = StateLabel::all().take(states).collect();
    let n = rng.random_range(2..=max_users);
    let users = (0..n)
        .map(|i| {
            let st = labels[rng.random_range(0..labels.len())];
            let distinct = rng.random_range(1..=words.min(8));
            let mut bag = TokenBag::new();
            for _ in 0..distinct {
                bag.add(&format!("w{}", rng.random_range(0..words)), rng.random_range(1..5));
            }
            TokenizedUser {
                user_id: format!("u{i:03}"),
                state: st,
                media: Media::Blog,
                tokens: bag,
                char_count: 0,
                doc_char_counts: vec![],
                gender: None,
                industry: None,
            }
        })
        .collect();
    Corpus::new(users, Media::Blog, "random").unwrap()
}

fn entropy(counts: impl Iterator<Item = f64>) -> f64 {
    let counts: Vec<f64> = counts.filter(|c| *c > 0.0).collect();
    let total: f64 = counts.iter().sum();
    -counts.iter().map(|c| (c / total) * (c / total).ln()).sum::<f64>()
}

/// Information gain ratio from the 2 x |S| presence contingency table, as
/// mutual information over the entropy of the presence indicator.
pub fn igr_oracle(corpus: &Corpus, word: &str) -> f64 {
    let mut table: BTreeMap<(bool, StateLabel), f64> = BTreeMap::new();
    for u in corpus.users() {
        *table.entry((u.tokens.contains(word), u.state)).or_default() += 1.0;
    }
    let n = corpus.len() as f64;
    let mut row: BTreeMap<bool, f64> = BTreeMap::new();
    let mut col: BTreeMap<StateLabel, f64> = BTreeMap::new();
    for (&(present, st), &c) in &table {
        *row.entry(present).or_default() += c;
        *col.entry(st).or_default() += c;
    }
    let h_presence = entropy(row.values().copied());
    if h_presence == 0.0 {
        return 0.0;
    }
    let mi: f64 = table
        .iter()
        .map(|(&(present, st), &c)| (c / n) * ((c * n) / (row[&present] * col[&st])).ln())
        .sum();
    mi.max(0.0) / h_presence
}

/// `max_s P(w|s) / P(w)` from raw token totals, with the first maximizing
/// state in label order.
pub fn wlh_oracle(corpus: &Corpus, word: &str) -> (f64, StateLabel) {
    let mut per_state: BTreeMap<StateLabel, (f64, f64)> = BTreeMap::new();
    for u in corpus.users() {
        let e = per_state.entry(u.state).or_default();
        e.0 += f64::from(u.tokens.get(word));
        e.1 += u.tokens.total() as f64;
    }
    let word_total: f64 = per_state.values().map(|e| e.0).sum();
    let grand: f64 = per_state.values().map(|e| e.1).sum();
    let p_w = word_total / grand;
    let mut best = (f64::NEG_INFINITY, StateLabel::from_index(0).unwrap());
    for (&st, &(c, t)) in &per_state {
        let r = if t > 0.0 { (c / t) / p_w } else { 0.0 };
        if r > best.0 {
            best = (r, st);
        }
    }
    best
}

pub fn distinct_users(corpus: &Corpus, word: &str) -> u64 {
    corpus.users().iter().filter(|u| u.tokens.contains(word)).count() as u64
}

/// Multinomial naive Bayes straight from the definition: Laplace-smoothed
/// per-state word distributions over `features`, class priors from user
/// counts, argmax with the alphabetically first state winning ties.
pub struct NaiveNb {
    states: Vec<StateLabel>,
    log_prior: Vec<f64>,
    log_lik: Vec<BTreeMap<String, f64>>,
}

impl NaiveNb {
    pub fn train(train: &Corpus, features: &[String], alpha: f64) -> NaiveNb {
        let vocab: BTreeSet<&str> = features.iter().map(String::as_str).collect();
        let states: Vec<StateLabel> = train.users().iter().map(|u| u.state).collect::<BTreeSet<_>>().into_iter().collect();
        let mut log_prior = Vec::new();
        let mut log_lik = Vec::new();
        for &s in &states {
            let members: Vec<&TokenizedUser> = train.users().iter().filter(|u| u.state == s).collect();
            log_prior.push((members.len() as f64 / train.len() as f64).ln());
            let mut counts: BTreeMap<&str, f64> = vocab.iter().map(|w| (*w, 0.0)).collect();
            for u in &members {
                for (t, c) in u.tokens.iter() {
                    if let Some(slot) = counts.get_mut(t) {
                        *slot += f64::from(c);
                    }
                }
            }
            let total: f64 = counts.values().sum::<f64>() + alpha * vocab.len() as f64;
            log_lik.push(
                counts
                    .into_iter()
                    .map(|(w, c)| (w.to_string(), ((c + alpha) / total).ln()))
                    .collect(),
            );
        }
        NaiveNb { states, log_prior, log_lik }
    }

    pub fn log_scores(&self, u: &TokenizedUser) -> Vec<f64> {
        (0..self.states.len())
            .map(|k| {
                self.log_prior[k]
                    + u.tokens
                        .iter()
                        .filter_map(|(t, c)| self.log_lik[k].get(t).map(|l| f64::from(c) * l))
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, u: &TokenizedUser) -> StateLabel {
        let scores = self.log_scores(u);
        let mut best = 0;
        for k in 1..scores.len() {
            if scores[k] > scores[best] {
                best = k;
            }
        }
        self.states[best]
    }
}

/// Ranks by sorting (ties get the mean of their positions), then Pearson.
pub fn rank_then_pearson(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn z_stat(k1: u64, n1: u64, k2: u64, n2: u64) -> f64 {
    let (n1, n2) = (n1 as f64, n2 as f64);
    let pooled = (k1 + k2) as f64 / (n1 + n2);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
    if se == 0.0 {
        0.0
    } else {
        (k1 as f64 / n1 - k2 as f64 / n2) / se
    }
}

/// Two-sided p-value by simulation under the pooled null: the share of
/// resampled pairs whose |z| reaches the observed |z|.
pub fn monte_carlo_p(k1: u64, n1: u64, k2: u64, n2: u64, resamples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let observed = z_stat(k1, n1, k2, n2).abs();
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let b1 = Binomial::new(n1, pooled).unwrap();
    let b2 = Binomial::new(n2, pooled).unwrap();
    let hits = (0..resamples)
        .filter(|_| z_stat(b1.sample(rng), n1, b2.sample(rng), n2).abs() >= observed - 1e-12)
        .count();
    hits as f64 / resamples as f64
}
