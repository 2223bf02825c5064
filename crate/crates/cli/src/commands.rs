use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use geoloc_core::corpus::{load_corpus, split, synth_records, write_records, LoadedCorpus, SplitCorpora};
use geoloc_core::counts::{prefilter, relative_state_frequency, CountsTable};
use geoloc_core::evaluate::{
    benchmark, cross_media_matrix, export, fit_grid, proportion_test, select_and_score, slice_accuracy,
    spearman_keyed, AdjacencyGraph, EvalReport, MediaCorpora, ReportConfig, SliceReport,
};
use geoloc_core::model::{predict_corpus, FeatureProvenance, ModelFile, Prediction};
use geoloc_core::rng::derive_seed;
use geoloc_core::weighting::{rank, write_scores};
use geoloc_core::{build_lexicons, compute_stats, jaccard_overlap, Corpus, FeatureMethod, LexiconSet, Media, StateLabel};
use serde_json::json;

use crate::args::{Command, EvalArgs, ExportMapArgs, SlicesArgs, WeighArgs};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::Manifest;

type Result<T> = std::result::Result<T, CliError>;

/// State shared by one command invocation.
pub struct Ctx {
    pub cfg: RunConfig,
    pub media: Media,
    pub manifest: Manifest,
}

impl Ctx {
    pub fn new(cfg: RunConfig, media: Media, command: &str) -> Self {
        let manifest = Manifest::new(command, media, cfg.hash(), cfg.seed);
        Ctx { cfg, media, manifest }
    }

    pub fn out(&self) -> &Path {
        &self.cfg.output_dir
    }

    /// The configured corpus for `media`, else the synthetic one in the
    /// output directory.
    pub fn corpus_path(&self, media: Media) -> PathBuf {
        self.cfg
            .corpora
            .get(&media)
            .cloned()
            .unwrap_or_else(|| self.out().join(format!("synth-{media}.jsonl")))
    }

    fn has_corpus(&self, media: Media) -> bool {
        self.corpus_path(media).exists()
    }

    fn load(&mut self, media: Media) -> Result<LoadedCorpus> {
        let path = self.corpus_path(media);
        if !path.exists() {
            return Err(CliError::new(
                "missing_input",
                format!(
                    "no {media} corpus: set corpus.{media} or run `geoloc synth --media {media}` first ({} not found)",
                    path.display()
                ),
            ));
        }
        self.manifest.add_input(&path)?;
        let loaded = load_corpus(&path, media, self.cfg.min_chars)?;
        if !loaded.rejected.is_empty() {
            log::info!("{media}: {} user(s) below the length filter", loaded.rejected.len());
        }
        Ok(loaded)
    }

    fn corpus(&mut self, media: Media) -> Result<Corpus> {
        Ok(self.load(media)?.corpus)
    }

    fn splits(&mut self, media: Media) -> Result<SplitCorpora> {
        let corpus = self.corpus(media)?;
        Ok(split(&corpus, &self.cfg.split)?)
    }

    fn adjacency(&mut self) -> Result<AdjacencyGraph> {
        match self.cfg.adjacency.clone() {
            Some(path) => {
                self.manifest.add_input(&path)?;
                Ok(AdjacencyGraph::from_path(&path, self.cfg.four_corners)?)
            }
            None => Ok(AdjacencyGraph::us_borders_with(self.cfg.four_corners)),
        }
    }

    fn model_path(&self, media: Media) -> PathBuf {
        self.out().join(format!("model-{media}.json"))
    }

    fn load_model(&mut self, path: &Path) -> Result<ModelFile> {
        if !path.exists() {
            return Err(CliError::new(
                "missing_input",
                format!("{} not found; run `geoloc train` first", path.display()),
            ));
        }
        self.manifest.add_input(path)?;
        Ok(ModelFile::load(path)?)
    }

    /// Creates `name` in the output directory, fills it and records it.
    fn write<F>(&mut self, name: &str, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.out().join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        drop(w);
        self.manifest.add_artifact(&path)?;
        Ok(path)
    }

    fn write_json(&mut self, name: &str, value: &impl serde::Serialize) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write(name, |w| w.write_all(text.as_bytes()).map_err(io_err))
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::new("io", e.to_string())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::new("csv", e.to_string())
}

/// Runs `command` and writes its manifest; returns the artifacts.
pub fn execute(command: &Command, ctx: &mut Ctx) -> Result<Vec<PathBuf>> {
    let out = ctx.out().to_path_buf();
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    match command {
        Command::Synth(_) => synth(ctx)?,
        Command::Ingest => ingest(ctx)?,
        Command::Stats => stats(ctx)?,
        Command::Split => split_cmd(ctx)?,
        Command::Vocab => vocab(ctx)?,
        Command::Weigh(a) => weigh(ctx, a)?,
        Command::Lexicon => lexicon(ctx)?,
        Command::Train => train(ctx)?,
        Command::Eval(a) => eval(ctx, a)?,
        Command::Cross => cross(ctx)?,
        Command::Slices(a) => slices(ctx, a)?,
        Command::Bench(_) => bench(ctx)?,
        Command::ExportMap(a) => export_map(ctx, a)?,
    }
    ctx.manifest.write(&out)?;
    Ok(ctx.manifest.artifacts.iter().map(|r| r.path.clone()).collect())
}

fn synth(ctx: &mut Ctx) -> Result<()> {
    let media = ctx.media;
    if media == Media::Mixed {
        return Err(CliError::new("invalid_argument", "cannot synthesize a mixed corpus"));
    }
    let mut spec = ctx.cfg.synth.clone();
    spec.media = media;
    spec.user_prefix = format!("{media}-");
    let records = synth_records(&spec, derive_seed(ctx.cfg.seed, media.as_str()))?;
    ctx.write(&format!("synth-{media}.jsonl"), |w| write_records(w, &records).map_err(io_err))?;
    log::info!("wrote {} synthetic {media} users", records.len());
    Ok(())
}

fn ingest(ctx: &mut Ctx) -> Result<()> {
    let media = ctx.media;
    let loaded = ctx.load(media)?;
    ctx.write(&format!("ingest-{media}.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["user_id", "state", "documents", "chars", "tokens"]).map_err(csv_err)?;
        for u in loaded.corpus.users() {
            c.write_record([
                u.user_id.clone(),
                u.state.to_string(),
                u.doc_char_counts.len().to_string(),
                u.char_count.to_string(),
                u.tokens.total().to_string(),
            ])
            .map_err(csv_err)?;
        }
        c.flush().map_err(io_err)
    })?;
    ctx.write(&format!("ingest-{media}-rejected.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["line", "user_id", "state", "reason"]).map_err(csv_err)?;
        for r in &loaded.rejected {
            c.write_record([r.line.to_string(), r.user_id.clone(), r.state.to_string(), r.reason.to_string()])
                .map_err(csv_err)?;
        }
        c.flush().map_err(io_err)
    })?;
    Ok(())
}

fn stats(ctx: &mut Ctx) -> Result<()> {
    let media = ctx.media;
    let corpus = ctx.corpus(media)?;
    let stats = compute_stats(&corpus)?;
    ctx.write(&format!("stats-{media}.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["quantity", "users", "max", "mean", "stddev", "median"]).map_err(csv_err)?;
        for (name, s) in stats.rows() {
            c.write_record([
                name.to_string(),
                stats.users.to_string(),
                s.max.to_string(),
                s.mean.to_string(),
                s.stddev.to_string(),
                s.median.to_string(),
            ])
            .map_err(csv_err)?;
        }
        c.flush().map_err(io_err)
    })?;
    Ok(())
}

fn split_cmd(ctx: &mut Ctx) -> Result<()> {
    let media = ctx.media;
    let parts = ctx.splits(media)?;
    ctx.write(&format!("split-{media}.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["user_id", "state", "part"]).map_err(csv_err)?;
        for (name, corpus) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
            for u in corpus.users() {
                c.write_record([u.user_id.as_str(), u.state.code(), name]).map_err(csv_err)?;
            }
        }
        c.flush().map_err(io_err)
    })?;
    Ok(())
}

fn vocab(ctx: &mut Ctx) -> Result<()> {
    let media = ctx.media;
    let train = ctx.splits(media)?.train;
    let counts = CountsTable::build(&train)?;
    let vocab = prefilter(&counts, ctx.cfg.min_users)?;
    log::info!("vocabulary: {} retained, {} dropped", vocab.retained(), vocab.dropped());
    ctx.write(&format!("counts-{media}.tsv"), |w| counts.write_tsv(w).map_err(io_err))?;
    ctx.write(&format!("vocab-{media}.tsv"), |w| {
        writeln!(w, "word\tuser_count\ttoken_count").map_err(io_err)?;
        for &id in vocab.ids() {
            writeln!(
                w,
                "{}\t{}\t{}",
                counts.word(id),
                counts.word_user_count(id),
                counts.word_token_total(id)
            )
            .map_err(io_err)?;
        }
        Ok(())
    })?;
    Ok(())
}

fn weigh(ctx: &mut Ctx, args: &WeighArgs) -> Result<()> {
    let methods: Vec<FeatureMethod> = match args.method {
        Some(m @ (FeatureMethod::Igr | FeatureMethod::Wlh)) => vec![m],
        Some(m) => {
            return Err(CliError::new(
                "invalid_argument",
                format!("{m} is not a ranking method (igr, wlh)"),
            ))
        }
        None => ctx
            .cfg
            .methods
            .iter()
            .copied()
            .filter(|m| matches!(m, FeatureMethod::Igr | FeatureMethod::Wlh))
            .collect(),
    };
    if methods.is_empty() {
        return Err(CliError::new("invalid_argument", "features.methods lists no ranking method (igr, wlh)"));
    }
    let media = ctx.media;
    let train = ctx.splits(media)?.train;
    let counts = CountsTable::build(&train)?;
    let vocab = prefilter(&counts, ctx.cfg.min_users)?;
    for method in methods {
        let ranked = rank(&vocab, &counts, method)?;
        ctx.write(&format!("scores-{media}-{method}.tsv"), |w| write_scores(w, &ranked).map_err(io_err))?;
    }
    Ok(())
}

fn lexicon_file(media: Media, set: &LexiconSet) -> String {
    let p = set.params;
    format!("lexicon-{media}-p{}-h{}-t{}.tsv", p.p, p.h, p.t)
}

fn lexicon(ctx: &mut Ctx) -> Result<()> {
    let media = ctx.media;
    let train = ctx.splits(media)?.train;
    let counts = CountsTable::build(&train)?;
    let vocab = prefilter(&counts, ctx.cfg.min_users)?;
    let mut sets = Vec::new();
    for params in ctx.cfg.lexicon.clone() {
        let set = build_lexicons(&vocab, &counts, params)?;
        let deficient = set.deficient_states();
        if !deficient.is_empty() {
            log::warn!("{}: {} state(s) below t = {}", params.label(), deficient.len(), params.t);
        }
        ctx.write(&lexicon_file(media, &set), |w| set.write_tsv(w).map_err(io_err))?;
        sets.push(set);
    }
    ctx.write(&format!("lexicon-{media}-summary.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["p", "h", "t", "state", "size", "candidates", "threshold", "deficient"])
            .map_err(csv_err)?;
        for set in &sets {
            let p = set.params;
            for l in &set.lexicons {
                c.write_record([
                    p.p.to_string(),
                    p.h.to_string(),
                    p.t.to_string(),
                    l.state.to_string(),
                    l.len().to_string(),
                    l.candidates.to_string(),
                    l.effective_threshold(&p).to_string(),
                    l.is_deficient(&p).to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        c.flush().map_err(io_err)
    })?;
    if sets.len() > 1 {
        let mut rows = Vec::new();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                let size = sets[i].params.t.min(sets[j].params.t);
                rows.push((i, j, size, jaccard_overlap(&sets[i], &sets[j], size)?));
            }
        }
        ctx.write(&format!("lexicon-{media}-jaccard.csv"), |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["a", "b", "size", "jaccard"]).map_err(csv_err)?;
            for (i, j, size, jac) in rows {
                c.write_record([sets[i].params.label(), sets[j].params.label(), size.to_string(), jac.to_string()])
                    .map_err(csv_err)?;
            }
            c.flush().map_err(io_err)
        })?;
    }
    Ok(())
}

fn train(ctx: &mut Ctx) -> Result<()> {
    let media = ctx.media;
    let parts = ctx.splits(media)?;
    let grid = ctx.cfg.grid()?;
    let adjacency = ctx.adjacency()?;
    let fitted = fit_grid(&parts.train, &grid)?;
    let result = select_and_score(&fitted, media, &parts.dev, &parts.dev, &adjacency)?;
    let best = &fitted[result.best];
    log::info!(
        "best on dev: {} (accuracy {:.4})",
        best.cell.label(),
        result.dev[result.best].accuracy
    );
    ctx.write(&format!("dev-{media}.csv"), |w| export::write_eval_csv(w, &result.dev).map_err(CliError::from))?;
    let provenance = FeatureProvenance {
        method: best.cell.method,
        fraction: best.cell.fraction,
        source_media: media,
        min_users: grid.min_users,
        lexicon: best.cell.lexicon,
    };
    let file = ModelFile::new(best.model.clone(), provenance, Some(ctx.cfg.hash()));
    let text = file.to_json();
    ctx.write(&format!("model-{media}.json"), |w| w.write_all(text.as_bytes()).map_err(io_err))?;
    Ok(())
}

/// Test-split predictions of a saved model on `media`.
fn test_predictions(
    ctx: &mut Ctx,
    model_path: &Path,
    media: Media,
    allow_cross: bool,
) -> Result<(ModelFile, Corpus, Vec<Prediction>)> {
    let file = ctx.load_model(model_path)?;
    let source = file.provenance.source_media;
    if source != media && !allow_cross {
        return Err(CliError::new(
            "media_mismatch",
            format!("model was trained on {source} data but the evaluation media is {media}; pass --cross-media to allow this"),
        ));
    }
    let test = ctx.splits(media)?.test;
    let preds = predict_corpus(&file.model, &test);
    Ok((file, test, preds))
}

fn test_report(file: &ModelFile, test: &Corpus, preds: &[Prediction], adjacency: &AdjacencyGraph) -> Result<EvalReport> {
    let p = &file.provenance;
    let config = ReportConfig {
        method: p.method,
        fraction: p.fraction,
        num_features: file.model.features().len(),
        lexicon: p.lexicon,
        classifier: file.model.kind().to_string(),
        train_media: p.source_media,
        dev_media: p.source_media,
        test_media: test.media(),
        scored_on: "test".into(),
    };
    Ok(EvalReport::build(preds, test, adjacency, config)?)
}

fn eval(ctx: &mut Ctx, args: &EvalArgs) -> Result<()> {
    let media = ctx.media;
    let path = args.model.clone().unwrap_or_else(|| ctx.model_path(media));
    let (file, test, preds) = test_predictions(ctx, &path, media, args.cross_media)?;
    let adjacency = ctx.adjacency()?;
    let report = test_report(&file, &test, &preds, &adjacency)?;
    log::info!(
        "test accuracy {:.4}, near-miss {:.4} over {} users",
        report.accuracy,
        report.near_miss_accuracy,
        report.n_test
    );
    ctx.write(&format!("eval-{media}.csv"), |w| {
        export::write_eval_csv(w, std::iter::once(&report)).map_err(CliError::from)
    })?;
    ctx.write_json(&format!("eval-{media}.json"), &report)?;
    Ok(())
}

fn cross(ctx: &mut Ctx) -> Result<()> {
    let media: Vec<Media> = [Media::Blog, Media::Tweet, Media::Other]
        .into_iter()
        .filter(|m| ctx.has_corpus(*m))
        .collect();
    if media.len() < 2 {
        return Err(CliError::new(
            "missing_input",
            format!("cross-media evaluation needs corpora for at least two media, found {}", media.len()),
        ));
    }
    let mut corpora = Vec::new();
    for m in media {
        let s = ctx.splits(m)?;
        corpora.push(MediaCorpora::new(m, s.train, s.dev, s.test));
    }
    let grid = ctx.cfg.grid()?;
    let adjacency = ctx.adjacency()?;
    let rows = cross_media_matrix(&corpora, &grid, &adjacency)?;
    ctx.write("cross.csv", |w| export::write_cross_csv(w, &rows).map_err(CliError::from))?;
    ctx.write_json("cross.json", &rows)?;
    Ok(())
}

fn write_slices(ctx: &mut Ctx, media: Media, report: &SliceReport) -> Result<()> {
    ctx.write(&format!("slices-{media}-{}.csv", report.field.as_str()), |w| {
        export::write_slice_csv(w, report).map_err(CliError::from)
    })?;
    Ok(())
}

fn slices(ctx: &mut Ctx, args: &SlicesArgs) -> Result<()> {
    let media = ctx.media;
    let path = ctx.model_path(media);
    let (_, test, preds) = test_predictions(ctx, &path, media, false)?;
    let other = match args.compare {
        Some(other) => {
            let other_path = ctx.model_path(other);
            Some((other, test_predictions(ctx, &other_path, other, false)?))
        }
        None => None,
    };
    let min_support = ctx.cfg.min_support;
    let mut written = 0;
    for field in ctx.cfg.fields.clone() {
        match slice_accuracy(&preds, &test, field, min_support) {
            Ok(report) => {
                write_slices(ctx, media, &report)?;
                written += 1;
            }
            Err(geoloc_core::GeolocError::FieldAbsent(f)) => log::warn!("no {media} test user has a {f}; skipped"),
            Err(e) => return Err(e.into()),
        }
    }
    if written == 0 {
        return Err(CliError::new("field_absent", "none of the requested fields is present in the test split"));
    }
    if let Some((other, (_, other_test, other_preds))) = other {
        let field = geoloc_core::SliceField::State;
        let a = slice_accuracy(&preds, &test, field, min_support)?;
        let b = slice_accuracy(&other_preds, &other_test, field, min_support)?;
        let correlation = match spearman_keyed(&a.supported_accuracies(), &b.supported_accuracies()) {
            Ok(c) => json!({ "rho": c.rho, "p_value": c.p_value, "n": c.n }),
            Err(e) => json!({ "undefined": e.to_string() }),
        };
        let (k1, n1) = totals(&a);
        let (k2, n2) = totals(&b);
        let z = proportion_test(k1, n1, k2, n2)?;
        let summary = json!({
            "media": [media, other],
            "min_support": min_support,
            "accuracy": [ratio(k1, n1), ratio(k2, n2)],
            "state_spearman": correlation,
            "accuracy_difference": { "z": z.z, "p_value": z.p_value, "degenerate": z.degenerate },
        });
        ctx.write_json(&format!("slices-{media}-vs-{other}.json"), &summary)?;
    }
    Ok(())
}

fn totals(report: &SliceReport) -> (u64, u64) {
    report
        .rows
        .iter()
        .fold((0, 0), |(k, n), r| (k + r.correct as u64, n + r.support as u64))
}

fn ratio(k: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

fn bench(ctx: &mut Ctx) -> Result<()> {
    let media = ctx.media;
    let parts = ctx.splits(media)?;
    let grid = ctx.cfg.grid()?;
    let report = benchmark(&grid.cells, grid.min_users, &parts.train, &parts.test, ctx.cfg.repetitions)?;
    ctx.write(&format!("bench-{media}.csv"), |w| export::write_timing_csv(w, &report).map_err(CliError::from))?;
    Ok(())
}

/// Every state in canonical order, with absent states set to 0.
fn fill_states(values: impl IntoIterator<Item = (StateLabel, f64)>) -> Vec<(StateLabel, f64)> {
    let known: BTreeMap<StateLabel, f64> = values.into_iter().collect();
    StateLabel::all().map(|s| (s, known.get(&s).copied().unwrap_or(0.0))).collect()
}

fn file_safe(word: &str) -> String {
    word.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn export_map(ctx: &mut Ctx, args: &ExportMapArgs) -> Result<()> {
    let media = ctx.media;
    let (name, values) = match &args.word {
        Some(word) => {
            let corpus = ctx.corpus(media)?;
            let counts = CountsTable::build(&corpus)?;
            let freq = relative_state_frequency(&word.to_lowercase(), &counts)?;
            (format!("map-{}.csv", file_safe(word)), fill_states(freq))
        }
        None => {
            let path = ctx.model_path(media);
            let (file, test, preds) = test_predictions(ctx, &path, media, false)?;
            let adjacency = ctx.adjacency()?;
            let report = test_report(&file, &test, &preds, &adjacency)?;
            (format!("map-accuracy-{media}.csv"), fill_states(report.per_state_accuracy()))
        }
    };
    ctx.write(&name, |w| export::write_state_values(w, &values).map_err(CliError::from))?;
    Ok(())
}
