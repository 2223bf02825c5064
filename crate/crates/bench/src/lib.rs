//! Fixtures shared by the pipeline benchmarks.

use geoloc_core::corpus::{split, SplitCorpora, SplitSpec, SynthSpec};
use geoloc_core::synth_corpus;

/// Train/dev/test splits of a synthetic corpus with `users_per_state`
/// users in each of the 50 states and default noise.
pub fn fixture(users_per_state: usize, seed: u64) -> SplitCorpora {
    let spec = SynthSpec {
        users_per_state,
        ..SynthSpec::with_default_noise()
    };
    let corpus = synth_corpus(&spec, seed).expect("valid synthetic spec");
    split(&corpus, &SplitSpec::new(seed, 0.8, 0.1, 0.1)).expect("splittable corpus")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_split() {
        let s = fixture(10, 1);
        assert_eq!(s.train.len() + s.dev.len() + s.test.len(), 500);
    }
}
