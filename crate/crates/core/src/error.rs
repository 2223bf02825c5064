use std::path::PathBuf;

use thiserror::Error;

use crate::state::StateLabel;

pub type Result<T, E = GeolocError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GeolocError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("unknown state label {0:?}")]
    UnknownState(String),

    #[error("line {line}: unknown state label {value:?}")]
    UnknownStateAtLine { line: usize, value: String },

    #[error("duplicate user id {0:?}")]
    DuplicateUser(String),

    #[error("line {line}: media {found:?} conflicts with declared corpus media {expected:?}")]
    MediaMismatch {
        line: usize,
        expected: String,
        found: String,
    },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("state {state} has {users} users, stratified split needs at least {needed}")]
    StratificationInfeasible {
        state: StateLabel,
        users: usize,
        needed: usize,
    },

    #[error("invalid synthesis spec: {0}")]
    InvalidSynthSpec(String),

    #[error("word {0:?} is not in the counts table")]
    UnknownWord(String),

    #[error("vocabulary is empty")]
    EmptyVocabulary,

    #[error("feature fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),

    #[error("invalid lexicon parameters: {0}")]
    InvalidLexiconParams(String),

    #[error("feature set is empty")]
    EmptyFeatureSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state {0} has no training users")]
    StateWithoutUsers(StateLabel),

    #[error("predictions and gold labels are not aligned: {0}")]
    Misaligned(String),

    #[error("state {0} is absent from the adjacency table")]
    StateNotInAdjacency(StateLabel),

    #[error("adjacency table line {line}: {message}")]
    MalformedAdjacency { line: usize, message: String },

    #[error("unknown slice field {0:?}")]
    UnknownField(String),

    #[error("no test user carries the field {0}")]
    FieldAbsent(String),

    #[error("constant input: ranks are undefined")]
    ConstantInput,

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("experiment grid is empty")]
    EmptyGrid,

    #[error("media {0:?} is missing a split")]
    MissingSplit(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("lexicon file line {line}: {message}")]
    MalformedLexicon { line: usize, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl GeolocError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GeolocError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier, used for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        use GeolocError::*;
        match self {
            Io { .. } => "io",
            MalformedRecord { .. } => "malformed_record",
            UnknownState(_) | UnknownStateAtLine { .. } => "unknown_state",
            DuplicateUser(_) => "duplicate_user",
            MediaMismatch { .. } => "media_mismatch",
            EmptyCorpus => "empty_corpus",
            InvalidSplit(_) => "invalid_split",
            StratificationInfeasible { .. } => "stratification_infeasible",
            InvalidSynthSpec(_) => "invalid_synth_spec",
            UnknownWord(_) => "unknown_word",
            EmptyVocabulary => "empty_vocabulary",
            InvalidFraction(_) => "invalid_fraction",
            InvalidLexiconParams(_) => "invalid_lexicon_params",
            EmptyFeatureSet => "empty_feature_set",
            InvalidParameter(_) => "invalid_parameter",
            StateWithoutUsers(_) => "state_without_users",
            Misaligned(_) => "misaligned",
            StateNotInAdjacency(_) => "state_not_in_adjacency",
            MalformedAdjacency { .. } => "malformed_adjacency",
            UnknownField(_) => "unknown_field",
            FieldAbsent(_) => "field_absent",
            ConstantInput => "constant_input",
            TooFewObservations { .. } => "too_few_observations",
            EmptyGrid => "empty_grid",
            MissingSplit(_) => "missing_split",
            ModelFormat(_) => "model_format",
            MalformedLexicon { .. } => "malformed_lexicon",
            Csv(_) => "csv",
            Json(_) => "json",
        }
    }
}
