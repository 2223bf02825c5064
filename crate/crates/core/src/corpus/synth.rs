//! Synthetic labeled corpora with planted location words.
//!
//! Every user emits a fixed number of tokens made of three parts:
//!
//! - *local* tokens, drawn from per-state planted words. With locality `L`
//!   a local token names the user's own state with weight `L` and each other
//!   state with weight 1, so `L = 1` is uniform and `L = inf` is exclusive;
//! - optional *noise* tokens: each user repeats a handful of topic words
//!   from a small shared pool. A topic is the user's state's home word with
//!   probability `label_correlation` and a uniform pool word otherwise;
//!   state `k` (in spec order) has home word `k mod pool`;
//! - *background* tokens, uniform over a shared vocabulary.
//!
//! Tokens are shuffled and chunked into documents of space-joined words.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Gender, Media, UserRecord};
use crate::error::{GeolocError, Result};
use crate::rng::component_rng;
use crate::state::StateLabel;

const INDUSTRIES: [&str; 6] = [
    "Education",
    "Technology",
    "Arts",
    "Law",
    "Engineering",
    "Accounting",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGroup {
    /// Prefix of the planted words; two corpora sharing a namespace share
    /// their planted words.
    pub namespace: String,
    pub words_per_state: usize,
    /// Share of each user's tokens drawn from this group.
    pub token_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub token_rate: f64,
    pub pool: usize,
    pub words_per_user: usize,
    pub label_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub states: Vec<StateLabel>,
    pub users_per_state: usize,
    pub tokens_per_user: usize,
    pub tokens_per_document: usize,
    pub background_vocab: usize,
    pub background_namespace: String,
    pub local_groups: Vec<LocalGroup>,
    /// Weight of the home state relative to any other state; `f64::INFINITY`
    /// makes planted words exclusive.
    pub locality: f64,
    pub noise: Option<NoiseSpec>,
    /// States whose users each write like a user of one uniformly chosen
    /// state (possibly their own), so their text carries no location signal.
    pub silent_states: Vec<StateLabel>,
    pub media: Media,
    pub user_prefix: String,
}

impl Default for SynthSpec {
    /// 50 states x 20 users, 200 tokens each, one exclusive planted word per
    /// state at a 5% token rate.
    fn default() -> Self {
        SynthSpec {
            states: StateLabel::all().collect(),
            users_per_state: 20,
            tokens_per_user: 200,
            tokens_per_document: 20,
            background_vocab: 2000,
            background_namespace: "bg".into(),
            local_groups: vec![LocalGroup {
                namespace: "loc".into(),
                words_per_state: 1,
                token_rate: 0.05,
            }],
            locality: f64::INFINITY,
            noise: None,
            silent_states: Vec::new(),
            media: Media::Blog,
            user_prefix: "u".into(),
        }
    }
}

impl SynthSpec {
    /// The default corpus plus 30% of tokens from bursty, weakly
    /// label-correlated noise words.
    pub fn with_default_noise() -> Self {
        SynthSpec {
            noise: Some(NoiseSpec {
                token_rate: 0.3,
                pool: 10,
                words_per_user: 2,
                label_correlation: 0.2,
            }),
            ..SynthSpec::default()
        }
    }

    pub fn local_word(namespace: &str, state: StateLabel, i: usize) -> String {
        format!("{namespace}{}{i}", state.code().to_ascii_lowercase())
    }

    pub fn noise_word(i: usize) -> String {
        format!("nz{i:03}")
    }

    pub fn background_word(&self, i: usize) -> String {
        format!("{}{i:05}", self.background_namespace)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GeolocError::InvalidSynthSpec(m));
        if self.states.is_empty() {
            return bad("no states".into());
        }
        let mut sorted = self.states.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.states.len() {
            return bad("duplicate states".into());
        }
        if self.users_per_state == 0 || self.tokens_per_user == 0 || self.tokens_per_document == 0 {
            return bad("users_per_state, tokens_per_user and tokens_per_document must be positive".into());
        }
        if self.background_vocab == 0 {
            return bad("background vocabulary is empty".into());
        }
        if !is_word_prefix(&self.background_namespace) {
            return bad(format!("background namespace {:?} must be lowercase alphabetic", self.background_namespace));
        }
        if !(self.locality >= 1.0) {
            return bad(format!("locality {} must be >= 1", self.locality));
        }
        let mut rate = 0.0;
        for g in &self.local_groups {
            if g.words_per_state == 0 || !(0.0..=1.0).contains(&g.token_rate) {
                return bad(format!("local group {:?} is empty or has an invalid rate", g.namespace));
            }
            if !is_word_prefix(&g.namespace) {
                return bad(format!("local namespace {:?} must be lowercase alphabetic", g.namespace));
            }
            rate += g.token_rate;
        }
        if let Some(n) = &self.noise {
            if n.pool == 0 || n.words_per_user == 0 {
                return bad("noise pool and words per user must be positive".into());
            }
            if !(0.0..=1.0).contains(&n.token_rate) || !(0.0..=1.0).contains(&n.label_correlation) {
                return bad("noise rates must lie in [0, 1]".into());
            }
            rate += n.token_rate;
        }
        if rate > 1.0 + 1e-12 {
            return bad(format!("local and noise rates sum to {rate} > 1"));
        }
        Ok(())
    }
}

fn is_word_prefix(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase())
}

fn pick_state(rng: &mut ChaCha8Rng, home: StateLabel, states: &[StateLabel], locality: f64) -> StateLabel {
    if locality.is_infinite() || states.len() == 1 {
        return home;
    }
    let others = (states.len() - 1) as f64;
    if rng.random::<f64>() < locality / (locality + others) {
        return home;
    }
    let idx = rng.random_range(0..states.len() - 1);
    let pos = states.iter().position(|&s| s == home).unwrap();
    states[if idx >= pos { idx + 1 } else { idx }]
}

fn round_count(rate: f64, n: usize) -> usize {
    (rate * n as f64).round() as usize
}

/// Generates raw user records; deterministic in `(spec, seed)`.
pub fn synth_records(spec: &SynthSpec, seed: u64) -> Result<Vec<UserRecord>> {
    spec.validate()?;
    let mut rng = component_rng(seed, "synth");
    let mut records = Vec::with_capacity(spec.states.len() * spec.users_per_state);
    for (k, &state) in spec.states.iter().enumerate() {
        let silent = spec.silent_states.contains(&state);
        for i in 0..spec.users_per_state {
            let mut tokens: Vec<String> = Vec::with_capacity(spec.tokens_per_user);
            let mut budget = spec.tokens_per_user;
            let voice = if silent {
                *spec.states.choose(&mut rng).unwrap()
            } else {
                state
            };
            for g in &spec.local_groups {
                let n = round_count(g.token_rate, spec.tokens_per_user).min(budget);
                budget -= n;
                for _ in 0..n {
                    let s = pick_state(&mut rng, voice, &spec.states, spec.locality);
                    let w = rng.random_range(0..g.words_per_state);
                    tokens.push(SynthSpec::local_word(&g.namespace, s, w));
                }
            }
            if let Some(noise) = &spec.noise {
                let topics: Vec<String> = (0..noise.words_per_user)
                    .map(|_| {
                        let i = if rng.random::<f64>() < noise.label_correlation {
                            k % noise.pool
                        } else {
                            rng.random_range(0..noise.pool)
                        };
                        SynthSpec::noise_word(i)
                    })
                    .collect();
                let n = round_count(noise.token_rate, spec.tokens_per_user).min(budget);
                budget -= n;
                for _ in 0..n {
                    tokens.push(topics.choose(&mut rng).unwrap().clone());
                }
            }
            for _ in 0..budget {
                tokens.push(spec.background_word(rng.random_range(0..spec.background_vocab)));
            }
            tokens.shuffle(&mut rng);
            let documents = tokens
                .chunks(spec.tokens_per_document)
                .map(|c| c.join(" "))
                .collect();
            let gender = match rng.random_range(0..3) {
                0 => Gender::Male,
                1 => Gender::Female,
                _ => Gender::Undefined,
            };
            let industry = INDUSTRIES.choose(&mut rng).unwrap().to_string();
            records.push(UserRecord {
                user_id: format!("{}{}-{i:04}", spec.user_prefix, state.code().to_ascii_lowercase()),
                state,
                media: spec.media,
                documents,
                gender: Some(gender),
                industry: Some(industry),
            });
        }
    }
    Ok(records)
}

pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<Corpus> {
    let records = synth_records(spec, seed)?;
    let provenance = format!("synthetic(seed={seed})");
    Ok(Corpus::from_records(&records, spec.media, 0, provenance)?.corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn two_state_spec() -> SynthSpec {
        SynthSpec {
            states: vec!["TX".parse().unwrap(), "NY".parse().unwrap()],
            users_per_state: 5,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn exclusive_planted_words_stay_home() {
        let c = synth_corpus(&two_state_spec(), 3).unwrap();
        assert_eq!(c.len(), 10);
        for u in c.users() {
            for s in [StateLabel::parse("TX").unwrap(), StateLabel::parse("NY").unwrap()] {
                let w = SynthSpec::local_word("loc", s, 0);
                if s == u.state {
                    assert_eq!(u.tokens.get(&w), 10);
                } else {
                    assert_eq!(u.tokens.get(&w), 0);
                }
            }
            assert_eq!(u.tokens.total(), 200);
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let spec = SynthSpec::with_default_noise();
        assert_eq!(synth_records(&spec, 11).unwrap(), synth_records(&spec, 11).unwrap());
        assert_ne!(synth_records(&spec, 11).unwrap(), synth_records(&spec, 12).unwrap());
    }

    #[test]
    fn uniform_locality_spreads_planted_words_evenly() {
        // Pooled chi-square over every planted word: the sum of 50
        // independent 49-dof statistics has 2450 degrees of freedom.
        let spec = SynthSpec {
            locality: 1.0,
            ..SynthSpec::default()
        };
        let c = synth_corpus(&spec, 5).unwrap();
        let mut stat = 0.0;
        let mut dof = 0.0;
        for w_state in StateLabel::all() {
            let word = SynthSpec::local_word("loc", w_state, 0);
            let counts: Vec<f64> = StateLabel::all()
                .map(|s| {
                    c.users()
                        .iter()
                        .filter(|u| u.state == s)
                        .map(|u| f64::from(u.tokens.get(&word)))
                        .sum()
                })
                .collect();
            let expected = counts.iter().sum::<f64>() / counts.len() as f64;
            stat += counts.iter().map(|o| (o - expected).powi(2) / expected).sum::<f64>();
            dof += (counts.len() - 1) as f64;
        }
        let p = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
        assert!(p > 0.001, "chi-square {stat} on {dof} dof, p = {p}");
    }

    #[test]
    fn silent_states_borrow_another_states_words() {
        let spec = SynthSpec {
            users_per_state: 40,
            silent_states: vec!["TX".parse().unwrap()],
            ..two_state_spec()
        };
        let c = synth_corpus(&spec, 1).unwrap();
        let mut borrowed = 0;
        for u in c.users() {
            let homes: std::collections::BTreeSet<&str> =
                u.tokens.iter().filter(|(t, _)| t.starts_with("loc")).map(|(t, _)| &t[3..5]).collect();
            assert_eq!(homes.len(), 1, "{} mixes planted words", u.user_id);
            if u.state.code() == "TX" && homes.contains("ny") {
                borrowed += 1;
            }
            if u.state.code() == "NY" {
                assert!(homes.contains("ny"));
            }
        }
        assert!((10..30).contains(&borrowed), "{borrowed} of 40 silent users borrowed");
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = SynthSpec::default();
        s.background_vocab = 0;
        assert!(matches!(synth_records(&s, 0), Err(GeolocError::InvalidSynthSpec(_))));
        let mut s = SynthSpec::default();
        s.locality = 0.5;
        assert!(synth_records(&s, 0).is_err());
        let mut s = SynthSpec::with_default_noise();
        s.local_groups[0].token_rate = 0.9;
        assert!(synth_records(&s, 0).is_err());
        let mut s = SynthSpec::default();
        s.states.clear();
        assert!(synth_records(&s, 0).is_err());
    }
}
