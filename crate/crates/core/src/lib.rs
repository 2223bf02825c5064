//! Content-based geolocation of social-media users at U.S.-state
//! granularity.
//!
//! The pipeline runs corpus ingestion and splitting ([`corpus`]), count
//! tables and the distinct-user pre-filter ([`counts`]), feature scoring
//! ([`weighting`]), per-state location lexicons ([`lexicon`]),
//! classification ([`model`]) and evaluation ([`evaluate`]).

pub mod corpus;
pub mod counts;
pub mod error;
pub mod evaluate;
pub mod lexicon;
pub mod model;
pub mod rng;
pub mod state;
pub mod weighting;

pub use corpus::{
    compute_stats, load_corpus, split, synth_corpus, tokenize, Corpus, CorpusStats, Gender, Media,
    SplitSpec, SynthSpec, TokenBag, TokenProfile, TokenizedUser, UserRecord,
};
pub use counts::{prefilter, relative_state_frequency, CountsTable, Vocabulary};
pub use error::{GeolocError, Result};
pub use state::StateLabel;
pub use weighting::{igr, rank_and_select, wlh, FeatureMethod, FeatureScore, FeatureSet};
pub use lexicon::{build_lexicons, jaccard_overlap, lexicon_feature_set, LexiconParams, LexiconSet};
pub use model::{predict, train_linear, train_nb, ClassifierSpec, LinearHyper, LinearModel, Model, NbModel, Prediction};
pub use evaluate::{AdjacencyGraph, EvalReport, ExperimentGrid, GridCell, SliceField};
