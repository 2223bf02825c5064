use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use geoloc_core::{FeatureMethod, Media, SliceField};

#[derive(Debug, Parser)]
#[command(name = "geoloc", version, about = "State-level geolocation of social-media users from their text")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for artifacts; overrides GEOLOC_OUTPUT_DIR and the config.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; overrides GEOLOC_WORKERS and the config.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Corpus medium to operate on.
    #[arg(long, global = true, default_value = "blog")]
    pub media: Media,
    /// `section.key=value`, may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus with planted state words.
    Synth(SynthArgs),
    /// Load a corpus file and apply the length filter.
    Ingest,
    /// Per-corpus summary statistics.
    Stats,
    /// Assign users to train/dev/test.
    Split,
    /// Count tables and the pre-filtered vocabulary.
    Vocab,
    /// Score and rank the vocabulary.
    Weigh(WeighArgs),
    /// Build per-state lexicons.
    Lexicon,
    /// Fit the configured grid and keep the best model on dev.
    Train,
    /// Score a trained model on the test split.
    Eval(EvalArgs),
    /// Train/dev/test across every pair of configured media.
    Cross,
    /// Accuracy by state, gender or industry.
    Slices(SlicesArgs),
    /// Time training and prediction for each grid configuration.
    Bench(BenchArgs),
    /// Per-state values for a choropleth map.
    ExportMap(ExportMapArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub users_per_state: Option<usize>,
    #[arg(long)]
    pub noise: bool,
}

#[derive(Debug, Clone, Args)]
pub struct WeighArgs {
    /// Defaults to every ranked method in the config.
    #[arg(long)]
    pub method: Option<FeatureMethod>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Defaults to the model trained on the same medium.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Allow a model trained on another medium.
    #[arg(long)]
    pub cross_media: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SlicesArgs {
    /// Defaults to the fields in the config.
    #[arg(long)]
    pub field: Option<SliceField>,
    /// Correlate per-state accuracy with this medium.
    #[arg(long)]
    pub compare: Option<Media>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub repetitions: Option<usize>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ExportMapArgs {
    /// Relative frequency of this word in each state.
    #[arg(long)]
    pub word: Option<String>,
    /// Test accuracy of the trained model in each state.
    #[arg(long)]
    pub accuracy: bool,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Ingest => "ingest",
            Command::Stats => "stats",
            Command::Split => "split",
            Command::Vocab => "vocab",
            Command::Weigh(_) => "weigh",
            Command::Lexicon => "lexicon",
            Command::Train => "train",
            Command::Eval(_) => "eval",
            Command::Cross => "cross",
            Command::Slices(_) => "slices",
            Command::Bench(_) => "bench",
            Command::ExportMap(_) => "export-map",
        }
    }

    /// Config overrides implied by subcommand flags.
    pub fn overrides(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        match self {
            Command::Synth(a) => {
                if let Some(n) = a.users_per_state {
                    out.push(("synth.users_per_state".into(), n.to_string()));
                }
                if a.noise {
                    out.push(("synth.noise".into(), "true".into()));
                }
            }
            Command::Bench(a) => {
                if let Some(r) = a.repetitions {
                    out.push(("eval.repetitions".into(), r.to_string()));
                }
            }
            Command::Slices(SlicesArgs { field: Some(f), .. }) => {
                out.push(("eval.fields".into(), f.as_str().into()));
            }
            _ => {}
        }
        out
    }
}
