use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Corpus, TokenizedUser};
use crate::error::{GeolocError, Result};
use crate::rng::component_rng;
use crate::state::StateLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_frac: f64,
    pub dev_frac: f64,
    pub test_frac: f64,
    pub stratify_by_state: bool,
}

impl SplitSpec {
    pub fn new(seed: u64, train_frac: f64, dev_frac: f64, test_frac: f64) -> Self {
        SplitSpec {
            seed,
            train_frac,
            dev_frac,
            test_frac,
            stratify_by_state: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fracs = self.fractions();
        if fracs.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(GeolocError::InvalidSplit(format!(
                "fractions must be positive, got {fracs:?}"
            )));
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GeolocError::InvalidSplit(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    fn fractions(&self) -> [f64; 3] {
        [self.train_frac, self.dev_frac, self.test_frac]
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::new(0, 0.8, 0.1, 0.1)
    }
}

#[derive(Debug, Clone)]
pub struct SplitCorpora {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
}

/// Largest-remainder apportionment of `n` items to the given fractions.
/// Ties on the remainder go to the earlier part.
fn apportion(n: usize, fracs: [f64; 3]) -> [usize; 3] {
    let quotas = fracs.map(|f| f * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Splits into train/dev/test. Users are ordered by id before a seeded
/// shuffle, so the split depends only on the user set and the seed.
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<SplitCorpora> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(GeolocError::EmptyCorpus);
    }
    let mut rng = component_rng(spec.seed, "split");
    let fracs = spec.fractions();

    let groups: Vec<Vec<&TokenizedUser>> = if spec.stratify_by_state {
        let mut by_state: BTreeMap<StateLabel, Vec<&TokenizedUser>> = BTreeMap::new();
        for u in corpus.users() {
            by_state.entry(u.state).or_default().push(u);
        }
        for (state, users) in &by_state {
            if users.len() < fracs.len() {
                return Err(GeolocError::StratificationInfeasible {
                    state: *state,
                    users: users.len(),
                    needed: fracs.len(),
                });
            }
        }
        by_state.into_values().collect()
    } else {
        vec![corpus.users().iter().collect()]
    };

    let mut parts: [Vec<TokenizedUser>; 3] = Default::default();
    for mut group in groups {
        group.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        group.shuffle(&mut rng);
        let sizes = apportion(group.len(), fracs);
        let mut it = group.into_iter();
        for (part, size) in parts.iter_mut().zip(sizes) {
            part.extend(it.by_ref().take(size).cloned());
        }
    }
    for part in &mut parts {
        part.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    }
    let [train, dev, test] = parts;
    let media = corpus.media();
    let tag = |name: &str| format!("{}#{}", corpus.provenance(), name);
    Ok(SplitCorpora {
        train: Corpus::new(train, media, tag("train"))?,
        dev: Corpus::new(dev, media, tag("dev"))?,
        test: Corpus::new(test, media, tag("test"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Media, TokenBag};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn user(id: String, state: StateLabel) -> TokenizedUser {
        TokenizedUser {
            user_id: id,
            state,
            media: Media::Blog,
            tokens: TokenBag::new(),
            char_count: 0,
            doc_char_counts: vec![],
            gender: None,
            industry: None,
        }
    }

    fn corpus(states: usize, per_state: usize) -> Corpus {
        let users = StateLabel::all()
            .take(states)
            .flat_map(|s| (0..per_state).map(move |i| user(format!("{s}-{i:03}"), s)))
            .collect();
        Corpus::new(users, Media::Blog, "test").unwrap()
    }

    fn ids(c: &Corpus) -> Vec<String> {
        c.users().iter().map(|u| u.user_id.clone()).collect()
    }

    #[test]
    fn exact_fraction_sizes() {
        let c = corpus(1, 100);
        let mut spec = SplitSpec::new(7, 0.8, 0.1, 0.1);
        spec.stratify_by_state = false;
        let s = split(&c, &spec).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (80, 10, 10));
        let s2 = split(&c, &spec).unwrap();
        assert_eq!(ids(&s.train), ids(&s2.train));
        assert_eq!(ids(&s.dev), ids(&s2.dev));
        assert_eq!(ids(&s.test), ids(&s2.test));
    }

    #[test]
    fn stratified_fifty_states_of_ten() {
        let c = corpus(50, 10);
        let s = split(&c, &SplitSpec::new(7, 0.8, 0.1, 0.1)).unwrap();
        // Enumerate membership per state.
        for state in StateLabel::all() {
            let count = |c: &Corpus| c.users().iter().filter(|u| u.state == state).count();
            assert_eq!((count(&s.train), count(&s.dev), count(&s.test)), (8, 1, 1), "{state}");
        }
    }

    #[test]
    fn different_seeds_give_different_membership() {
        let c = corpus(5, 20);
        let a = split(&c, &SplitSpec::new(1, 0.8, 0.1, 0.1)).unwrap();
        let b = split(&c, &SplitSpec::new(2, 0.8, 0.1, 0.1)).unwrap();
        assert_ne!(ids(&a.test), ids(&b.test));
    }

    #[test]
    fn tiny_state_cannot_be_stratified() {
        let mut users: Vec<_> = (0..10).map(|i| user(format!("a{i}"), StateLabel::from_index(0).unwrap())).collect();
        users.push(user("b0".into(), StateLabel::from_index(1).unwrap()));
        let c = Corpus::new(users, Media::Blog, "t").unwrap();
        assert!(matches!(
            split(&c, &SplitSpec::new(0, 0.8, 0.1, 0.1)),
            Err(GeolocError::StratificationInfeasible { users: 1, .. })
        ));
    }

    #[test]
    fn invalid_fractions_are_rejected() {
        let c = corpus(1, 10);
        assert!(split(&c, &SplitSpec::new(0, 0.8, 0.1, 0.2)).is_err());
        assert!(split(&c, &SplitSpec::new(0, 1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn apportion_matches_quotas() {
        assert_eq!(apportion(100, [0.8, 0.1, 0.1]), [80, 10, 10]);
        assert_eq!(apportion(5, [0.8, 0.1, 0.1]), [4, 1, 0]);
        assert_eq!(apportion(3, [0.8, 0.1, 0.1]), [3, 0, 0]);
        assert_eq!(apportion(0, [0.8, 0.1, 0.1]), [0, 0, 0]);
    }

    proptest! {
        #[test]
        fn split_is_a_partition_within_one_user_per_state(
            seed in any::<u64>(),
            states in 1usize..6,
            per_state in 3usize..25,
            train in 0.2f64..0.8,
        ) {
            let dev = (1.0 - train) / 2.0;
            let spec = SplitSpec::new(seed, train, dev, 1.0 - train - dev);
            let c = corpus(states, per_state);
            let s = split(&c, &spec).unwrap();
            let mut all: Vec<String> = ids(&s.train);
            all.extend(ids(&s.dev));
            all.extend(ids(&s.test));
            let unique: BTreeSet<_> = all.iter().cloned().collect();
            prop_assert_eq!(all.len(), c.len());
            prop_assert_eq!(unique, ids(&c).into_iter().collect::<BTreeSet<_>>());
            for state in c.states() {
                for (part, frac) in [(&s.train, spec.train_frac), (&s.dev, spec.dev_frac), (&s.test, spec.test_frac)] {
                    let got = part.users().iter().filter(|u| u.state == state).count() as f64;
                    prop_assert!((got - frac * per_state as f64).abs() <= 1.0 + 1e-9);
                }
            }
        }
    }
}
