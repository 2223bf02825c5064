use std::collections::HashSet;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AdjacencyGraph, EvalReport, ReportConfig};
use crate::corpus::{Corpus, Media};
use crate::counts::{prefilter, CountsTable, Vocabulary};
use crate::error::{GeolocError, Result};
use crate::lexicon::{build_lexicons, lexicon_feature_set, LexiconParams};
use crate::model::{predict_corpus, ClassifierSpec, Model};
use crate::weighting::{check_fraction, rank, select, FeatureMethod, FeatureScore, FeatureSet};

/// One configuration of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub method: FeatureMethod,
    pub fraction: f64,
    pub lexicon: Option<LexiconParams>,
    pub classifier: ClassifierSpec,
}

impl GridCell {
    pub fn new(method: FeatureMethod, fraction: f64, classifier: ClassifierSpec) -> Self {
        GridCell {
            method,
            fraction,
            lexicon: None,
            classifier,
        }
    }

    pub fn lexicon(params: LexiconParams, classifier: ClassifierSpec) -> Self {
        GridCell {
            method: FeatureMethod::Lexicon,
            fraction: 1.0,
            lexicon: Some(params),
            classifier,
        }
    }

    pub fn label(&self) -> String {
        let features = match (self.method, &self.lexicon) {
            (FeatureMethod::Lexicon, Some(p)) => format!("lexicon({})", p.label()),
            (FeatureMethod::All, _) => "all".to_string(),
            (m, _) => format!("{m}@{}", self.fraction),
        };
        format!("{features}/{}", self.classifier.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    /// Pre-filter threshold applied to every training corpus.
    pub min_users: u64,
    pub cells: Vec<GridCell>,
}

impl ExperimentGrid {
    pub fn new(min_users: u64, cells: Vec<GridCell>) -> Self {
        ExperimentGrid { min_users, cells }
    }

    /// Cross product of classifiers with feature settings: ranked methods
    /// take every fraction, `all` appears once, `lexicon` takes every
    /// parameter set.
    pub fn expand(
        min_users: u64,
        methods: &[FeatureMethod],
        fractions: &[f64],
        lexicon: &[LexiconParams],
        classifiers: &[ClassifierSpec],
    ) -> Result<ExperimentGrid> {
        for &f in fractions {
            check_fraction(f)?;
        }
        for p in lexicon {
            p.validate()?;
        }
        let mut cells = Vec::new();
        for &classifier in classifiers {
            for &method in methods {
                match method {
                    FeatureMethod::Igr | FeatureMethod::Wlh => {
                        if fractions.is_empty() {
                            return Err(GeolocError::InvalidParameter(format!("{method} needs at least one fraction")));
                        }
                        cells.extend(fractions.iter().map(|&f| GridCell::new(method, f, classifier)));
                    }
                    FeatureMethod::All => cells.push(GridCell::new(method, 1.0, classifier)),
                    FeatureMethod::Lexicon => {
                        if lexicon.is_empty() {
                            return Err(GeolocError::InvalidParameter(
                                "lexicon features need at least one parameter set".into(),
                            ));
                        }
                        cells.extend(lexicon.iter().map(|&p| GridCell::lexicon(p, classifier)));
                    }
                }
            }
        }
        Ok(ExperimentGrid { min_users, cells })
    }
}

/// Counts and pre-filtered vocabulary of one training corpus, with
/// rankings computed on first use.
pub struct FeatureContext {
    counts: CountsTable,
    vocab: Vocabulary,
    igr: OnceLock<Vec<FeatureScore>>,
    wlh: OnceLock<Vec<FeatureScore>>,
    all: OnceLock<Vec<FeatureScore>>,
}

impl FeatureContext {
    pub fn new(train: &Corpus, min_users: u64) -> Result<FeatureContext> {
        let counts = CountsTable::build(train)?;
        let vocab = prefilter(&counts, min_users)?;
        Ok(FeatureContext {
            counts,
            vocab,
            igr: OnceLock::new(),
            wlh: OnceLock::new(),
            all: OnceLock::new(),
        })
    }

    pub fn counts(&self) -> &CountsTable {
        &self.counts
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn ranking(&self, method: FeatureMethod) -> Result<&[FeatureScore]> {
        let slot = match method {
            FeatureMethod::Igr => &self.igr,
            FeatureMethod::Wlh => &self.wlh,
            FeatureMethod::All => &self.all,
            FeatureMethod::Lexicon => {
                return Err(GeolocError::InvalidParameter("lexicon features are not ranked".into()))
            }
        };
        if let Some(r) = slot.get() {
            return Ok(r);
        }
        let ranked = rank(&self.vocab, &self.counts, method)?;
        Ok(slot.get_or_init(|| ranked))
    }

    pub fn features(&self, cell: &GridCell) -> Result<FeatureSet> {
        match (cell.method, cell.lexicon) {
            (FeatureMethod::Lexicon, Some(params)) => {
                lexicon_feature_set(&build_lexicons(&self.vocab, &self.counts, params)?)
            }
            (FeatureMethod::Lexicon, None) => Err(GeolocError::InvalidParameter(
                "lexicon cell without lexicon parameters".into(),
            )),
            (method, _) => select(self.ranking(method)?, method, cell.fraction),
        }
    }
}

pub struct FittedCell {
    pub cell: GridCell,
    pub features: FeatureSet,
    pub model: Model,
}

/// Fits every grid cell on `train`; cells run in parallel, results keep
/// grid order.
pub fn fit_grid(train: &Corpus, grid: &ExperimentGrid) -> Result<Vec<FittedCell>> {
    if grid.cells.is_empty() {
        return Err(GeolocError::EmptyGrid);
    }
    let ctx = FeatureContext::new(train, grid.min_users)?;
    grid.cells
        .par_iter()
        .map(|cell| {
            let features = ctx.features(cell)?;
            let model = cell.classifier.train(train, &features)?;
            Ok(FittedCell {
                cell: cell.clone(),
                features,
                model,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// One report per grid cell, in grid order.
    pub dev: Vec<EvalReport>,
    /// Index of the dev-accuracy winner; the earliest cell wins ties.
    pub best: usize,
    pub best_cell: GridCell,
    pub test: EvalReport,
}

impl ExperimentResult {
    /// Dev reports followed by the test report.
    pub fn reports(&self) -> impl Iterator<Item = &EvalReport> {
        self.dev.iter().chain(std::iter::once(&self.test))
    }
}

fn report_config(fitted: &FittedCell, train: Media, dev: Media, test: Media, scored_on: &str) -> ReportConfig {
    ReportConfig {
        method: fitted.cell.method,
        fraction: fitted.cell.fraction,
        num_features: fitted.features.len(),
        lexicon: fitted.cell.lexicon,
        classifier: fitted.cell.classifier.label(),
        train_media: train,
        dev_media: dev,
        test_media: test,
        scored_on: scored_on.to_string(),
    }
}

/// Scores every fitted cell on `dev`, then the dev winner on `test`.
pub fn select_and_score(
    fitted: &[FittedCell],
    train_media: Media,
    dev: &Corpus,
    test: &Corpus,
    adjacency: &AdjacencyGraph,
) -> Result<ExperimentResult> {
    if fitted.is_empty() {
        return Err(GeolocError::EmptyGrid);
    }
    let dev_reports = fitted
        .iter()
        .map(|f| {
            let config = report_config(f, train_media, dev.media(), test.media(), "dev");
            EvalReport::build(&predict_corpus(&f.model, dev), dev, adjacency, config)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in dev_reports.iter().enumerate() {
        if r.accuracy > dev_reports[best].accuracy {
            best = i;
        }
    }
    let winner = &fitted[best];
    let config = report_config(winner, train_media, dev.media(), test.media(), "test");
    let test_report = EvalReport::build(&predict_corpus(&winner.model, test), test, adjacency, config)?;
    Ok(ExperimentResult {
        dev: dev_reports,
        best,
        best_cell: winner.cell.clone(),
        test: test_report,
    })
}

fn check_disjoint(named: &[(&str, &Corpus)]) -> Result<()> {
    let mut seen: HashSet<&str> = HashSet::new();
    for (name, corpus) in named {
        let ids: HashSet<&str> = corpus.user_ids().into_iter().collect();
        if let Some(dup) = ids.iter().find(|id| seen.contains(*id)) {
            return Err(GeolocError::InvalidSplit(format!("user {dup:?} in {name} also appears in another split")));
        }
        seen.extend(ids);
    }
    Ok(())
}

/// Fits each grid cell on `train`, picks the best on `dev` by accuracy and
/// reports that configuration on `test`.
pub fn run_experiment(
    train: &Corpus,
    dev: &Corpus,
    test: &Corpus,
    grid: &ExperimentGrid,
    adjacency: &AdjacencyGraph,
) -> Result<ExperimentResult> {
    if grid.cells.is_empty() {
        return Err(GeolocError::EmptyGrid);
    }
    check_disjoint(&[("train", train), ("dev", dev), ("test", test)])?;
    let fitted = fit_grid(train, grid)?;
    select_and_score(&fitted, train.media(), dev, test, adjacency)
}

/// Train/dev/test corpora of one medium.
#[derive(Debug, Clone)]
pub struct MediaCorpora {
    pub media: Media,
    pub train: Option<Corpus>,
    pub dev: Option<Corpus>,
    pub test: Option<Corpus>,
}

impl MediaCorpora {
    pub fn new(media: Media, train: Corpus, dev: Corpus, test: Corpus) -> Self {
        MediaCorpora {
            media,
            train: Some(train),
            dev: Some(dev),
            test: Some(test),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMediaRow {
    pub train_media: Media,
    pub dev_media: Media,
    pub test_media: Media,
    /// Trained on the concatenation of every medium's training split.
    pub mixed: bool,
    pub train_size: usize,
    pub result: ExperimentResult,
}

/// Every train x dev x test media combination, followed by one row per
/// medium trained on all training splits combined and tuned and tested on
/// that medium.
pub fn cross_media_matrix(
    corpora: &[MediaCorpora],
    grid: &ExperimentGrid,
    adjacency: &AdjacencyGraph,
) -> Result<Vec<CrossMediaRow>> {
    if grid.cells.is_empty() {
        return Err(GeolocError::EmptyGrid);
    }
    if corpora.len() < 2 {
        return Err(GeolocError::InvalidParameter(format!(
            "cross-media evaluation needs at least 2 media, got {}",
            corpora.len()
        )));
    }
    let mut splits = Vec::new();
    for (i, m) in corpora.iter().enumerate() {
        if corpora[..i].iter().any(|o| o.media == m.media) {
            return Err(GeolocError::InvalidParameter(format!("media {} listed twice", m.media)));
        }
        match (&m.train, &m.dev, &m.test) {
            (Some(train), Some(dev), Some(test)) => splits.push((m.media, train, dev, test)),
            _ => return Err(GeolocError::MissingSplit(m.media.to_string())),
        }
    }
    for (_, train, dev, test) in &splits {
        check_disjoint(&[("train", train), ("dev", dev), ("test", test)])?;
    }

    let fitted: Vec<Vec<FittedCell>> = splits
        .iter()
        .map(|(_, train, _, _)| fit_grid(train, grid))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (i, (train_media, train, _, _)) in splits.iter().enumerate() {
        for (_, _, dev, _) in &splits {
            for (_, _, _, test) in &splits {
                rows.push(CrossMediaRow {
                    train_media: *train_media,
                    dev_media: dev.media(),
                    test_media: test.media(),
                    mixed: false,
                    train_size: train.len(),
                    result: select_and_score(&fitted[i], *train_media, dev, test, adjacency)?,
                });
            }
        }
    }

    let trains: Vec<&Corpus> = splits.iter().map(|s| s.1).collect();
    let mixed = Corpus::concat(&trains, "mixed")?;
    let mixed_fit = fit_grid(&mixed, grid)?;
    for (_, _, dev, test) in &splits {
        check_disjoint(&[("mixed train", &mixed), ("dev", dev), ("test", test)])?;
        rows.push(CrossMediaRow {
            train_media: mixed.media(),
            dev_media: dev.media(),
            test_media: test.media(),
            mixed: true,
            train_size: mixed.len(),
            result: select_and_score(&mixed_fit, mixed.media(), dev, test, adjacency)?,
        });
    }
    Ok(rows)
}
