//! Labeled user corpora: ingestion, tokenization, splitting, statistics and
//! synthetic generation.

mod stats;
mod split;
mod synth;
mod tokenize;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GeolocError, Result};
use crate::state::StateLabel;

pub use self::split::{split, SplitCorpora, SplitSpec};
pub use self::stats::{compute_stats, CorpusStats, Summary};
pub use self::synth::{synth_corpus, synth_records, LocalGroup, NoiseSpec, SynthSpec};
pub use self::tokenize::{tokenize, tokenize_into, token_stream, TokenProfile};

pub const DEFAULT_MIN_CHARS: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Media {
    Blog,
    Tweet,
    Other,
    /// Only meaningful as a corpus tag: users of several media.
    Mixed,
}

impl Media {
    pub fn as_str(self) -> &'static str {
        match self {
            Media::Blog => "blog",
            Media::Tweet => "tweet",
            Media::Other => "other",
            Media::Mixed => "mixed",
        }
    }

    pub fn profile(self) -> TokenProfile {
        match self {
            Media::Tweet => TokenProfile::Tweet,
            _ => TokenProfile::Blog,
        }
    }
}

impl fmt::Display for Media {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Media {
    type Err = GeolocError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "blog" | "blogs" | "blogger" => Ok(Media::Blog),
            "tweet" | "tweets" | "twitter" => Ok(Media::Tweet),
            "other" => Ok(Media::Other),
            "mixed" => Ok(Media::Mixed),
            other => Err(GeolocError::InvalidParameter(format!("unknown media {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Undefined,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Undefined => "undefined",
        }
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            "undefined" => Ok(Gender::Undefined),
            other => Err(format!("unknown gender {other:?}")),
        }
    }
}

/// One user as it appears in a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserRecord {
    pub user_id: String,
    pub state: StateLabel,
    pub media: Media,
    pub documents: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub industry: Option<String>,
}

impl UserRecord {
    pub fn char_count(&self) -> usize {
        self.documents.iter().map(|d| d.chars().count()).sum()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("user records always serialize")
    }
}

/// Multiset of tokens. Iteration is in lexicographic token order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBag(BTreeMap<String, u32>);

impl TokenBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, token: &str, count: u32) {
        if count == 0 {
            return;
        }
        match self.0.get_mut(token) {
            Some(c) => *c += count,
            None => {
                self.0.insert(token.to_string(), count);
            }
        }
    }

    pub fn get(&self, token: &str) -> u32 {
        self.0.get(token).copied().unwrap_or(0)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains_key(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Number of distinct tokens.
    pub fn distinct(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.values().map(|&c| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every token of `self` occurs in `other` at least as often.
    pub fn is_sub_multiset_of(&self, other: &TokenBag) -> bool {
        self.iter().all(|(t, c)| other.get(t) >= c)
    }
}

impl<S: AsRef<str>> FromIterator<S> for TokenBag {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut bag = TokenBag::new();
        for t in iter {
            bag.add(t.as_ref(), 1);
        }
        bag
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedUser {
    pub user_id: String,
    pub state: StateLabel,
    pub media: Media,
    pub tokens: TokenBag,
    /// Characters of raw text, summed over documents.
    pub char_count: usize,
    /// Raw character count of each document; kept for corpus statistics.
    pub doc_char_counts: Vec<usize>,
    pub gender: Option<Gender>,
    pub industry: Option<String>,
}

impl TokenizedUser {
    pub fn from_record(record: &UserRecord) -> Self {
        let profile = record.media.profile();
        let mut tokens = TokenBag::new();
        let doc_char_counts: Vec<usize> =
            record.documents.iter().map(|d| d.chars().count()).collect();
        for doc in &record.documents {
            tokenize_into(doc, profile, &mut tokens);
        }
        TokenizedUser {
            user_id: record.user_id.clone(),
            state: record.state,
            media: record.media,
            tokens,
            char_count: doc_char_counts.iter().sum(),
            doc_char_counts,
            gender: record.gender,
            industry: record.industry.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    users: Vec<TokenizedUser>,
    media: Media,
    provenance: String,
}

impl Corpus {
    /// Builds a corpus, checking id uniqueness and media consistency.
    pub fn new(users: Vec<TokenizedUser>, media: Media, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(users.len());
        for u in &users {
            if u.user_id.is_empty() {
                return Err(GeolocError::InvalidParameter("empty user id".into()));
            }
            if !seen.insert(u.user_id.as_str()) {
                return Err(GeolocError::DuplicateUser(u.user_id.clone()));
            }
            if media != Media::Mixed && u.media != media {
                return Err(GeolocError::InvalidParameter(format!(
                    "user {} has media {} in a {} corpus",
                    u.user_id, u.media, media
                )));
            }
        }
        Ok(Corpus {
            users,
            media,
            provenance: provenance.into(),
        })
    }

    /// Tokenizes records and applies the `min_chars` filter.
    pub fn from_records(
        records: &[UserRecord],
        media: Media,
        min_chars: usize,
        provenance: impl Into<String>,
    ) -> Result<LoadedCorpus> {
        let mut users = Vec::with_capacity(records.len());
        let mut rejected = Vec::new();
        for (i, rec) in records.iter().enumerate() {
            if let Some(reason) = rejection_reason(rec, min_chars) {
                rejected.push(Rejection {
                    line: i + 1,
                    user_id: rec.user_id.clone(),
                    state: rec.state,
                    reason,
                });
                continue;
            }
            users.push(TokenizedUser::from_record(rec));
        }
        let corpus = Corpus::new(users, media, provenance)?;
        Ok(LoadedCorpus { corpus, rejected })
    }

    /// Concatenates corpora; the tag is the shared media, or `Mixed`.
    pub fn concat(parts: &[&Corpus], provenance: impl Into<String>) -> Result<Corpus> {
        let tags: BTreeSet<Media> = parts.iter().map(|c| c.media).collect();
        let media = if tags.len() == 1 {
            *tags.iter().next().unwrap()
        } else {
            Media::Mixed
        };
        let users = parts.iter().flat_map(|c| c.users.iter().cloned()).collect();
        Corpus::new(users, media, provenance)
    }

    pub fn users(&self) -> &[TokenizedUser] {
        &self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn media(&self) -> Media {
        self.media
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Distinct states, in canonical order.
    pub fn states(&self) -> Vec<StateLabel> {
        self.users
            .iter()
            .map(|u| u.state)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn user_ids(&self) -> Vec<&str> {
        self.users.iter().map(|u| u.user_id.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    TooShort { chars: usize, min_chars: usize },
    NoDocuments,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::TooShort { chars, min_chars } => {
                write!(f, "too_short({chars}<{min_chars})")
            }
            RejectReason::NoDocuments => f.write_str("no_documents"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub line: usize,
    pub user_id: String,
    pub state: StateLabel,
    pub reason: RejectReason,
}

/// A filtered corpus together with the users the filter turned away.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub rejected: Vec<Rejection>,
}

fn rejection_reason(rec: &UserRecord, min_chars: usize) -> Option<RejectReason> {
    if rec.documents.is_empty() {
        return Some(RejectReason::NoDocuments);
    }
    let chars = rec.char_count();
    (chars < min_chars).then_some(RejectReason::TooShort { chars, min_chars })
}

#[derive(Deserialize)]
struct RawRecord {
    user_id: String,
    state: String,
    media: String,
    documents: Vec<String>,
    #[serde(default)]
    gender: Option<String>,
    #[serde(default)]
    industry: Option<String>,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_json::Value>,
}

/// Parses one line of the corpus format. `line` is 1-based, for messages.
pub fn parse_record(text: &str, line: usize) -> Result<UserRecord> {
    let raw: RawRecord = serde_json::from_str(text).map_err(|e| GeolocError::MalformedRecord {
        line,
        message: e.to_string(),
    })?;
    if !raw.extra.is_empty() {
        let names: Vec<&str> = raw.extra.keys().map(String::as_str).collect();
        log::warn!("line {line}: ignoring unknown fields {names:?}");
    }
    if raw.user_id.is_empty() {
        return Err(GeolocError::MalformedRecord {
            line,
            message: "empty user_id".into(),
        });
    }
    let state = StateLabel::parse(&raw.state).ok_or(GeolocError::UnknownStateAtLine {
        line,
        value: raw.state.clone(),
    })?;
    let media: Media = raw.media.parse().map_err(|_| GeolocError::MalformedRecord {
        line,
        message: format!("unknown media {:?}", raw.media),
    })?;
    if media == Media::Mixed {
        return Err(GeolocError::MalformedRecord {
            line,
            message: "a single user cannot have media \"mixed\"".into(),
        });
    }
    let gender = raw
        .gender
        .as_deref()
        .map(Gender::from_str)
        .transpose()
        .map_err(|message| GeolocError::MalformedRecord { line, message })?;
    Ok(UserRecord {
        user_id: raw.user_id,
        state,
        media,
        documents: raw.documents,
        gender,
        industry: raw.industry,
    })
}

/// Reads every record of a line-delimited corpus file. Blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<(usize, UserRecord)>> {
    let file = File::open(path).map_err(|e| GeolocError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GeolocError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, parse_record(&line, i + 1)?));
    }
    Ok(out)
}

/// Loads a corpus file, tokenizing each user under the profile of its media
/// and filtering users below `min_chars` raw characters.
pub fn load_corpus(path: &Path, media: Media, min_chars: usize) -> Result<LoadedCorpus> {
    let records = read_records(path)?;
    let mut seen = HashSet::with_capacity(records.len());
    let mut users = Vec::with_capacity(records.len());
    let mut rejected = Vec::new();
    for (line, rec) in &records {
        if !seen.insert(rec.user_id.as_str()) {
            return Err(GeolocError::DuplicateUser(rec.user_id.clone()));
        }
        if media != Media::Mixed && rec.media != media {
            return Err(GeolocError::MediaMismatch {
                line: *line,
                expected: media.to_string(),
                found: rec.media.to_string(),
            });
        }
        match rejection_reason(rec, min_chars) {
            Some(reason) => rejected.push(Rejection {
                line: *line,
                user_id: rec.user_id.clone(),
                state: rec.state,
                reason,
            }),
            None => users.push(TokenizedUser::from_record(rec)),
        }
    }
    let corpus = Corpus::new(users, media, path.display().to_string())?;
    Ok(LoadedCorpus { corpus, rejected })
}

pub fn write_records<W: Write>(mut out: W, records: &[UserRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_json_line())?;
    }
    Ok(())
}
