//! Run configuration: a flat `key = value` file with `[section]` headers.
//!
//! ```text
//! [run]
//! seed = 7
//!
//! [corpus]
//! blog = data/blogs.jsonl
//!
//! [features]
//! methods = wlh, all
//! fractions = 0.1, 0.3
//! ```
//!
//! Lists are comma-separated. `#` and `;` start comment lines. Overrides
//! given as `section.key=value` replace file values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use geoloc_core::corpus::{LocalGroup, SplitSpec, SynthSpec, DEFAULT_MIN_CHARS};
use geoloc_core::counts::DEFAULT_MIN_USERS;
use geoloc_core::evaluate::{ExperimentGrid, DEFAULT_MIN_SUPPORT, MIN_REPETITIONS};
use geoloc_core::{ClassifierSpec, FeatureMethod, LexiconParams, LinearHyper, Media, SliceField, StateLabel};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_OUTPUT_DIR: &str = "geoloc-out";

const KEYS: &[(&str, &str)] = &[
    ("run.seed", "0"),
    ("run.output_dir", DEFAULT_OUTPUT_DIR),
    ("run.workers", ""),
    ("corpus.blog", ""),
    ("corpus.tweet", ""),
    ("corpus.other", ""),
    ("corpus.min_chars", "600"),
    ("split.train", "0.8"),
    ("split.dev", "0.1"),
    ("split.test", "0.1"),
    ("split.stratify", "true"),
    ("features.min_users", "3"),
    ("features.methods", "igr, wlh, all, lexicon"),
    ("features.fractions", "0.05, 0.1, 0.3"),
    ("lexicon.p", "3"),
    ("lexicon.h", "10"),
    ("lexicon.t", "2"),
    ("model.classifiers", "nb"),
    ("model.alpha", "1"),
    ("model.l2", "0.0001"),
    ("model.epochs", "40"),
    ("model.learning_rate", "1"),
    ("model.tolerance", "0.0001"),
    ("eval.adjacency", ""),
    ("eval.four_corners", "false"),
    ("eval.min_support", "5"),
    ("eval.fields", "state, gender, industry"),
    ("eval.repetitions", "5"),
    ("synth.states", "all"),
    ("synth.users_per_state", "20"),
    ("synth.tokens_per_user", "200"),
    ("synth.tokens_per_document", "20"),
    ("synth.background_vocab", "2000"),
    ("synth.local_rate", "0.05"),
    ("synth.words_per_state", "1"),
    ("synth.locality", "inf"),
    ("synth.noise", "false"),
];

/// Keys that do not change any result and are left out of the hash.
const UNHASHED: &[&str] = &["run.output_dir", "run.workers"];

/// Parses config text into `section.key -> value`.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>, Vec<String>> {
    let mut out = BTreeMap::new();
    let mut errors = Vec::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(name.trim().to_ascii_lowercase());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {}: expected `key = value`, got {line:?}", i + 1));
            continue;
        };
        let Some(sec) = &section else {
            errors.push(format!("line {}: key {:?} outside any [section]", i + 1, key.trim()));
            continue;
        };
        out.insert(format!("{sec}.{}", key.trim().to_ascii_lowercase()), value.trim().to_string());
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

/// Splits a `section.key=value` override.
pub fn parse_override(text: &str) -> Result<(String, String), String> {
    match text.split_once('=') {
        Some((k, v)) if k.contains('.') => Ok((k.trim().to_ascii_lowercase(), v.trim().to_string())),
        _ => Err(format!("override {text:?} must look like section.key=value")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub corpora: BTreeMap<Media, PathBuf>,
    pub min_chars: usize,
    pub split: SplitSpec,
    pub min_users: u64,
    pub methods: Vec<FeatureMethod>,
    pub fractions: Vec<f64>,
    pub lexicon: Vec<LexiconParams>,
    pub classifiers: Vec<ClassifierSpec>,
    pub adjacency: Option<PathBuf>,
    pub four_corners: bool,
    pub min_support: usize,
    pub fields: Vec<SliceField>,
    pub repetitions: usize,
    pub synth: SynthSpec,
    canonical: String,
}

struct Reader<'a> {
    values: &'a BTreeMap<String, String>,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| {
            KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d).expect("known key")
        })
    }

    fn get<T: FromStr>(&mut self, key: &str, fallback: T) -> T
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key).to_string();
        match raw.parse() {
            Ok(v) => v,
            Err(e) => {
                self.errors.push(format!("{key} = {raw:?}: {e}"));
                fallback
            }
        }
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Vec<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key).to_string();
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.parse() {
                Ok(v) => out.push(v),
                Err(e) => self.errors.push(format!("{key}: {item:?}: {e}")),
            }
        }
        if out.is_empty() && !raw.trim().is_empty() {
            return out;
        }
        if out.is_empty() {
            self.errors.push(format!("{key} must list at least one value"));
        }
        out
    }

    fn path(&mut self, key: &str) -> Option<PathBuf> {
        let raw = self.raw(key);
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }
}

fn parse_bool(key: &str, raw: &str, errors: &mut Vec<String>) -> bool {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => true,
        "false" | "no" | "0" | "off" => false,
        _ => {
            errors.push(format!("{key} = {raw:?}: expected true or false"));
            false
        }
    }
}

impl RunConfig {
    /// Merges `file` and `overrides` over the defaults and validates the
    /// result, reporting every problem at once.
    pub fn resolve(file: BTreeMap<String, String>, overrides: &[(String, String)]) -> Result<RunConfig, CliError> {
        let mut values = file;
        for (k, v) in overrides {
            values.insert(k.clone(), v.clone());
        }
        let mut r = Reader {
            values: &values,
            errors: Vec::new(),
        };
        for key in values.keys() {
            if !KEYS.iter().any(|(k, _)| k == key) {
                r.errors.push(format!("unknown key {key}"));
            }
        }

        let seed = r.get("run.seed", 0u64);
        let output_dir = PathBuf::from(r.raw("run.output_dir"));
        let workers = match r.raw("run.workers") {
            "" => None,
            _ => Some(r.get("run.workers", 1usize)),
        };
        if workers == Some(0) {
            r.errors.push("run.workers must be at least 1".into());
        }

        let mut corpora = BTreeMap::new();
        for media in [Media::Blog, Media::Tweet, Media::Other] {
            if let Some(p) = r.path(&format!("corpus.{media}")) {
                corpora.insert(media, p);
            }
        }
        let min_chars = r.get("corpus.min_chars", DEFAULT_MIN_CHARS);

        let mut split = SplitSpec::new(
            seed,
            r.get("split.train", 0.8),
            r.get("split.dev", 0.1),
            r.get("split.test", 0.1),
        );
        let stratify = r.raw("split.stratify").to_string();
        split.stratify_by_state = parse_bool("split.stratify", &stratify, &mut r.errors);
        if let Err(e) = split.validate() {
            r.errors.push(format!("split: {e}"));
        }

        let min_users = r.get("features.min_users", DEFAULT_MIN_USERS);
        if min_users == 0 {
            r.errors.push("features.min_users must be at least 1".into());
        }
        let methods: Vec<FeatureMethod> = r.list("features.methods");
        let fractions: Vec<f64> = r.list("features.fractions");
        for f in &fractions {
            if !(*f > 0.0 && *f <= 1.0) {
                r.errors.push(format!("features.fractions: {f} is outside (0, 1]"));
            }
        }

        let ps: Vec<u64> = r.list("lexicon.p");
        let hs: Vec<f64> = r.list("lexicon.h");
        let ts: Vec<usize> = r.list("lexicon.t");
        let mut lexicon = Vec::new();
        for &p in &ps {
            for &h in &hs {
                for &t in &ts {
                    match LexiconParams::new(p, h, t) {
                        Ok(params) => lexicon.push(params),
                        Err(e) => r.errors.push(format!("lexicon: {e}")),
                    }
                }
            }
        }

        let kinds: Vec<String> = r.list("model.classifiers");
        let alphas: Vec<f64> = r.list("model.alpha");
        let l2s: Vec<f64> = r.list("model.l2");
        let hyper = LinearHyper {
            l2: 0.0,
            epochs: r.get("model.epochs", 40usize),
            learning_rate: r.get("model.learning_rate", 1.0),
            tolerance: r.get("model.tolerance", 1e-4),
            seed,
        };
        let mut classifiers = Vec::new();
        for kind in &kinds {
            match kind.to_ascii_lowercase().as_str() {
                "nb" => {
                    for &alpha in &alphas {
                        if !(alpha > 0.0 && alpha.is_finite()) {
                            r.errors.push(format!("model.alpha: {alpha} must be positive"));
                        }
                        classifiers.push(ClassifierSpec::Nb { alpha });
                    }
                }
                "linear" => {
                    for &l2 in &l2s {
                        let h = LinearHyper { l2, ..hyper };
                        if let Err(e) = h.validate() {
                            r.errors.push(format!("model: {e}"));
                        }
                        classifiers.push(ClassifierSpec::Linear(h));
                    }
                }
                other => r.errors.push(format!("model.classifiers: unknown classifier {other:?} (nb, linear)")),
            }
        }

        let adjacency = r.path("eval.adjacency");
        let four_corners_raw = r.raw("eval.four_corners").to_string();
        let four_corners = parse_bool("eval.four_corners", &four_corners_raw, &mut r.errors);
        let min_support = r.get("eval.min_support", DEFAULT_MIN_SUPPORT);
        let fields: Vec<SliceField> = r.list("eval.fields");
        let repetitions = r.get("eval.repetitions", 5usize);
        if repetitions < MIN_REPETITIONS {
            r.errors.push(format!("eval.repetitions must be at least {MIN_REPETITIONS}"));
        }

        let synth = read_synth(&mut r);

        for (key, path) in corpora
            .iter()
            .map(|(m, p)| (format!("corpus.{m}"), p))
            .chain(adjacency.iter().map(|p| ("eval.adjacency".to_string(), p)))
        {
            if !path.exists() {
                r.errors.push(format!("{key}: {} does not exist", path.display()));
            }
        }

        if !r.errors.is_empty() {
            return Err(CliError::invalid_config(r.errors));
        }
        let canonical = canonical_text(&values);
        Ok(RunConfig {
            seed,
            output_dir,
            workers,
            corpora,
            min_chars,
            split,
            min_users,
            methods,
            fractions,
            lexicon,
            classifiers,
            adjacency,
            four_corners,
            min_support,
            fields,
            repetitions,
            synth,
            canonical,
        })
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::new("io", format!("{}: {e}", p.display())))?;
                parse_text(&text).map_err(CliError::invalid_config)?
            }
            None => BTreeMap::new(),
        };
        RunConfig::resolve(file, overrides)
    }

    /// Every key with its effective value, one `key=value` per line,
    /// excluding keys that cannot affect results.
    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical.as_bytes()))
    }

    pub fn short_hash(&self) -> String {
        self.hash()[..12].to_string()
    }

    pub fn grid(&self) -> Result<ExperimentGrid, CliError> {
        Ok(ExperimentGrid::expand(
            self.min_users,
            &self.methods,
            &self.fractions,
            &self.lexicon,
            &self.classifiers,
        )?)
    }
}

fn read_synth(r: &mut Reader<'_>) -> SynthSpec {
    let states = match r.raw("synth.states").trim() {
        "all" => StateLabel::all().collect(),
        _ => r.list::<StateLabel>("synth.states"),
    };
    let noise_raw = r.raw("synth.noise").to_string();
    let noise = parse_bool("synth.noise", &noise_raw, &mut r.errors);
    let spec = SynthSpec {
        states,
        users_per_state: r.get("synth.users_per_state", 20usize),
        tokens_per_user: r.get("synth.tokens_per_user", 200usize),
        tokens_per_document: r.get("synth.tokens_per_document", 20usize),
        background_vocab: r.get("synth.background_vocab", 2000usize),
        local_groups: vec![LocalGroup {
            namespace: "loc".into(),
            words_per_state: r.get("synth.words_per_state", 1usize),
            token_rate: r.get("synth.local_rate", 0.05),
        }],
        locality: r.get("synth.locality", f64::INFINITY),
        noise: if noise { SynthSpec::with_default_noise().noise } else { None },
        ..SynthSpec::default()
    };
    if let Err(e) = spec.validate() {
        r.errors.push(format!("synth: {e}"));
    }
    spec
}

fn canonical_text(values: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (key, default) in KEYS {
        if UNHASHED.contains(key) {
            continue;
        }
        let v = values.get(*key).map(String::as_str).unwrap_or(default);
        let _ = writeln!(out, "{key}={v}");
    }
    out
}

/// `(key, default)` for every recognised key, in canonical order.
pub fn known_keys() -> &'static [(&'static str, &'static str)] {
    KEYS
}
