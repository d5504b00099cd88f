use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neoscope_core::features::Mode;
use neoscope_core::signal_io::{FilterPhase, SoundTarget};

#[derive(Debug, Parser)]
#[command(name = "neoscope", version, about = "Neonatal chest-sound quality engine", args_override_self = true)]
pub struct Cli {
    /// Root seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with defaults for any flag; top-level keys for global
    /// flags, one table per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn mode(&self) -> Mode {
        self.mode.map(Mode::from).unwrap_or(Mode::Full)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Fast,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => Mode::Full,
            ModeArg::Fast => Mode::Fast,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Heart,
    Lung,
}

impl From<TargetArg> for SoundTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Heart => SoundTarget::Heart,
            TargetArg::Lung => SoundTarget::Lung,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    ZeroPhase,
    Causal,
}

impl From<PhaseArg> for FilterPhase {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::ZeroPhase => FilterPhase::ZeroPhase,
            PhaseArg::Causal => FilterPhase::Causal,
        }
    }
}

/// Filter phase for a mode unless overridden: fast features are computed
/// with causal filters to match the stream engine.
pub fn phase_for(mode: Mode, phase: Option<PhaseArg>) -> FilterPhase {
    match phase {
        Some(p) => p.into(),
        None if mode == Mode::Fast => FilterPhase::Causal,
        None => FilterPhase::ZeroPhase,
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resample to 4 kHz and cut a 10 s segment from a WAV or every manifest entry.
    Ingest(IngestArgs),
    /// Extract feature vectors for a manifest, or export the catalog.
    Features(FeaturesArgs),
    /// Rater agreement (Fleiss' kappa), filtering and median labels.
    AnnotateStats(AnnotateArgs),
    /// Select features, search hyper-parameters and fit a quality model.
    Train(TrainArgs),
    /// Score a labelled manifest with a trained model.
    Eval(EvalArgs),
    /// Per-second heart and breathing rate, and errors against a reference.
    Vitals(VitalsArgs),
    /// Generate a labelled synthetic corpus.
    Synth(SynthArgs),
    /// Per-family extraction timing and stream tick latency.
    Bench(BenchArgs),
    /// Serve live scores over NDJSON and WebSocket.
    Stream(StreamArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    pub wav: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Segment start, seconds.
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long, required_unless_present = "catalog")]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub target: Option<TargetArg>,
    #[arg(long, value_enum)]
    pub phase: Option<PhaseArg>,
    /// Write the feature catalog as JSON instead.
    #[arg(long)]
    pub catalog: bool,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    /// Items with agreement at or below this are dropped.
    #[arg(long, default_value_t = neoscope_core::annotations::DEFAULT_AGREEMENT_THRESHOLD)]
    pub threshold: f64,
    /// Also write `recording_id,label` for the retained items.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelSource {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Rater CSV; median labels of items passing the agreement filter
    /// replace the manifest labels.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long, default_value_t = neoscope_core::annotations::DEFAULT_AGREEMENT_THRESHOLD)]
    pub threshold: f64,
    /// Precomputed feature file (CSV or binary) instead of extracting.
    #[arg(long)]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: LabelSource,
    #[arg(long, value_enum)]
    pub target: TargetArg,
    #[arg(long, value_enum)]
    pub phase: Option<PhaseArg>,
    /// Model families to search (default: all).
    #[arg(long, value_delimiter = ',')]
    pub families: Vec<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Skip the nested cross-validation report.
    #[arg(long)]
    pub no_cv: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: LabelSource,
    #[arg(long)]
    pub model: PathBuf,
    /// `truth.csv` from `synth`; adds the rank correlation with SNR.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VitalsArgs {
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    pub wav: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Reference CSV `t_seconds,hr_bpm,br_bpm` for a single WAV.
    #[arg(long, requires = "wav")]
    pub reference: Option<PathBuf>,
    /// `truth.csv` from `synth` giving each manifest recording's rate.
    #[arg(long, requires = "manifest")]
    pub truth: Option<PathBuf>,
    /// Quality models (heart and/or lung) used to stratify errors by
    /// predicted level; manifest labels otherwise.
    #[arg(long, num_args = 1)]
    pub model: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "schmidt")]
    pub method: HrMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HrMethod {
    Schmidt,
    Springer,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Items per target.
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub per_patient: usize,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub targets: Vec<TargetArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Recording to time (default: a synthetic 10 s heart recording).
    #[arg(long)]
    pub wav: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    /// Heart and lung models; enables the streamed tick benchmark.
    #[arg(long, num_args = 1)]
    pub model: Vec<PathBuf>,
    /// Streamed session length for the tick benchmark, seconds.
    #[arg(long, default_value_t = 60.0)]
    pub session: f64,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Heart and lung models (fast mode, causal features).
    #[arg(long, num_args = 1, required = true)]
    pub model: Vec<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub listen: String,
    /// Session marker log (default: `--out`).
    #[arg(long)]
    pub markers: Option<PathBuf>,
}
