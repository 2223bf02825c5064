use serde::{Deserialize, Serialize};

use super::FeatureIndex;
use crate::corpus::{Corpus, TokenizedUser};
use crate::error::{GeolocError, Result};
use crate::state::StateLabel;
use crate::weighting::FeatureSet;

/// Multinomial Naive Bayes with additive (Laplace) smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    features: FeatureIndex,
    states: Vec<StateLabel>,
    alpha: f64,
    log_prior: Vec<f64>,
    /// Feature-major: `log_likelihood[f * states + s] = ln P(f | s)`.
    log_likelihood: Vec<f64>,
}

impl NbModel {
    pub fn states(&self) -> &[StateLabel] {
        &self.states
    }

    pub fn features(&self) -> &FeatureIndex {
        &self.features
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    pub fn log_likelihood(&self, feature: usize, state_idx: usize) -> f64 {
        self.log_likelihood[feature * self.states.len() + state_idx]
    }

    /// Log joint probability `ln P(s) + sum_f n_f ln P(f|s)` per state.
    /// Out-of-feature tokens are ignored.
    pub fn scores(&self, user: &TokenizedUser) -> Vec<f64> {
        let n = self.states.len();
        let mut scores = self.log_prior.clone();
        for (tok, count) in user.tokens.iter() {
            if let Some(f) = self.features.get(tok) {
                let row = &self.log_likelihood[f * n..(f + 1) * n];
                let c = f64::from(count);
                for (s, l) in scores.iter_mut().zip(row) {
                    *s += c * l;
                }
            }
        }
        scores
    }

    /// Scores normalized so that their exponentials sum to one.
    pub fn log_posteriors(&self, user: &TokenizedUser) -> Vec<f64> {
        let scores = self.scores(user);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        scores.into_iter().map(|s| s - lse).collect()
    }
}

/// Trains over the states present in `train`.
pub fn train_nb(train: &Corpus, features: &FeatureSet, alpha: f64) -> Result<NbModel> {
    train_nb_over(train, features, alpha, &train.states())
}

/// Trains over an explicit state list; every listed state needs at least
/// one training user.
pub fn train_nb_over(
    train: &Corpus,
    features: &FeatureSet,
    alpha: f64,
    states: &[StateLabel],
) -> Result<NbModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(GeolocError::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    if features.is_empty() {
        return Err(GeolocError::EmptyFeatureSet);
    }
    if train.is_empty() {
        return Err(GeolocError::EmptyCorpus);
    }
    let index = FeatureIndex::from_set(features);
    let n_states = states.len();
    let n_features = index.len();
    let mut users = vec![0u64; n_states];
    let mut counts = vec![0u64; n_features * n_states];
    let mut totals = vec![0u64; n_states];
    for user in train.users() {
        let Some(s) = states.iter().position(|x| *x == user.state) else {
            return Err(GeolocError::InvalidParameter(format!(
                "training user {} has state {} outside the model states",
                user.user_id, user.state
            )));
        };
        users[s] += 1;
        for (f, c) in index.counts(user) {
            counts[f * n_states + s] += u64::from(c);
            totals[s] += u64::from(c);
        }
    }
    if let Some(s) = users.iter().position(|&u| u == 0) {
        return Err(GeolocError::StateWithoutUsers(states[s]));
    }
    let n_users = train.len() as f64;
    let log_prior = users.iter().map(|&u| (u as f64 / n_users).ln()).collect();
    let denom: Vec<f64> = totals
        .iter()
        .map(|&t| t as f64 + alpha * n_features as f64)
        .collect();
    let log_likelihood = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| ((c as f64 + alpha) / denom[i % n_states]).ln())
        .collect();
    Ok(NbModel {
        features: index,
        states: states.to_vec(),
        alpha,
        log_prior,
        log_likelihood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Media, TokenBag};
    use crate::model::{predict, Model};
    use crate::weighting::FeatureMethod;

    fn user(id: &str, state: &str, tokens: &[(&str, u32)]) -> TokenizedUser {
        let mut bag = TokenBag::new();
        for (t, c) in tokens {
            bag.add(t, *c);
        }
        TokenizedUser {
            user_id: id.into(),
            state: state.parse().unwrap(),
            media: Media::Blog,
            tokens: bag,
            char_count: 0,
            doc_char_counts: vec![],
            gender: None,
            industry: None,
        }
    }

    fn features(words: &[&str]) -> FeatureSet {
        FeatureSet::new(FeatureMethod::All, 1.0, words.iter().map(|w| w.to_string()).collect()).unwrap()
    }

    fn corpus(users: Vec<TokenizedUser>) -> Corpus {
        Corpus::new(users, Media::Blog, "t").unwrap()
    }

    #[test]
    fn separable_training_users_are_recovered() {
        let train = corpus(vec![user("1", "TX", &[("alamo", 1)]), user("2", "NY", &[("bronx", 1)])]);
        let m: Model = train_nb(&train, &features(&["alamo", "bronx"]), 1.0).unwrap().into();
        for u in train.users() {
            assert_eq!(predict(&m, u).state, u.state);
        }
    }

    #[test]
    fn three_user_closed_form() {
        let train = corpus(vec![
            user("1", "TX", &[("a", 2), ("b", 1)]),
            user("2", "TX", &[("a", 1), ("ignored", 7)]),
            user("3", "NY", &[("b", 2)]),
        ]);
        let m = train_nb(&train, &features(&["a", "b"]), 1.0).unwrap();
        let test = user("t", "TX", &[("a", 1), ("b", 2), ("zzz", 3)]);
        // States are ordered NY, TX.
        let ny = (1.0f64 / 3.0).ln() + (1.0f64 / 4.0).ln() + 2.0 * (3.0f64 / 4.0).ln();
        let tx = (2.0f64 / 3.0).ln() + (4.0f64 / 6.0).ln() + 2.0 * (2.0f64 / 6.0).ln();
        let scores = m.scores(&test);
        assert!((scores[0] - ny).abs() < 1e-12);
        assert!((scores[1] - tx).abs() < 1e-12);
        let z = (ny.exp() + tx.exp()).ln();
        let post = m.log_posteriors(&test);
        assert!((post[0] - (ny - z)).abs() < 1e-12);
        assert!((post[1] - (tx - z)).abs() < 1e-12);
    }

    #[test]
    fn likelihoods_and_priors_are_distributions() {
        let train = corpus(vec![
            user("1", "TX", &[("a", 2), ("b", 1)]),
            user("2", "NY", &[("c", 4)]),
            user("3", "NY", &[("a", 1)]),
        ]);
        let m = train_nb(&train, &features(&["a", "b", "c", "d"]), 0.5).unwrap();
        for s in 0..2 {
            let total: f64 = (0..4).map(|f| m.log_likelihood(f, s).exp()).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        let prior: f64 = m.log_prior().iter().map(|p| p.exp()).sum();
        assert!((prior - 1.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_priors_are_uniform_and_empty_users_take_the_first_state() {
        let train = corpus(vec![user("1", "TX", &[("a", 1)]), user("2", "NY", &[("b", 1)])]);
        let m = train_nb(&train, &features(&["a", "b"]), 1.0).unwrap();
        assert_eq!(m.log_prior()[0], m.log_prior()[1]);
        let p = predict(&Model::Nb(m), &user("x", "TX", &[("unseen", 4)]));
        assert_eq!(p.state.code(), "NY");
    }

    #[test]
    fn huge_alpha_falls_back_to_the_prior() {
        let train = corpus(vec![
            user("1", "TX", &[("a", 1)]),
            user("2", "TX", &[("a", 1)]),
            user("3", "NY", &[("b", 5)]),
        ]);
        let m: Model = train_nb(&train, &features(&["a", "b"]), 1e6).unwrap().into();
        let p = predict(&m, &user("x", "NY", &[("b", 3)]));
        assert_eq!(p.state.code(), "TX");
    }

    #[test]
    fn shifting_scores_keeps_the_decision() {
        let train = corpus(vec![user("1", "TX", &[("a", 3)]), user("2", "NY", &[("b", 1), ("a", 1)])]);
        let m = train_nb(&train, &features(&["a", "b"]), 1.0).unwrap();
        let u = user("x", "TX", &[("a", 2), ("b", 1)]);
        let scores = m.scores(&u);
        let shifted: Vec<f64> = scores.iter().map(|s| s + 1234.5).collect();
        assert_eq!(crate::model::argmax(&scores), crate::model::argmax(&shifted));
    }

    #[test]
    fn error_paths() {
        let train = corpus(vec![user("1", "TX", &[("a", 1)])]);
        assert!(train_nb(&train, &features(&["a"]), 0.0).is_err());
        assert!(train_nb(&train, &features(&["a"]), f64::NAN).is_err());
        let states = ["NY".parse().unwrap(), "TX".parse().unwrap()];
        assert!(matches!(
            train_nb_over(&train, &features(&["a"]), 1.0, &states),
            Err(GeolocError::StateWithoutUsers(s)) if s.code() == "NY"
        ));
    }
}
