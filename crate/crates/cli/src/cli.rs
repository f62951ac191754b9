use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Non-parametric point cloud classification and segmentation
#[derive(Parser, Debug)]
#[command(name = "tfcw", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify test clouds against a memory bank built from training clouds
    Classify(RunArgs),
    /// Per-point part segmentation
    Segment(RunArgs),
    /// Accuracy under one ablation axis
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = AblationArg::Diagonal)]
        which: AblationArg,
    },
    /// Accuracy on corrupted or rotated data
    Robustness {
        #[command(flatten)]
        run: RunArgs,
        /// Corruption applied to the test split
        #[arg(long, value_enum)]
        corruption: Option<CorruptionArg>,
        /// Corruption severity, 1 to 5
        #[arg(long, default_value_t = 1)]
        severity: u8,
        /// Rotation scenario applied to both splits
        #[arg(long, value_enum)]
        rotation: Option<RotationArg>,
        /// Report batch-size and shuffle stability instead of accuracy
        #[arg(long)]
        stability: bool,
    },
    /// Encode time and peak memory over growing uniform clouds
    Scale {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1024)]
        start: usize,
        #[arg(long, default_value_t = 1024)]
        step: usize,
        #[arg(long, default_value_t = 65536)]
        limit: usize,
        /// Timed encodes per size; the fastest is kept
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
    /// Memory bank files
    Bank {
        #[command(subcommand)]
        action: BankCommand,
    },
    /// OFF mesh or mesh tree to a TFCWPTS container
    Convert {
        /// An .off file, or a directory laid out as <class>/<split>/*.off
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Split to read from a mesh tree
        #[arg(long, value_enum, default_value_t = SplitArg::Train)]
        split: SplitArg,
        /// Surface samples per mesh; 0 keeps the raw vertices of a single file
        #[arg(long, default_value_t = 1024)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic dataset to a TFCWPTS container
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        /// Clouds per class
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 1024)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum BankCommand {
    /// Encode the training split and write its bank
    Export {
        #[command(flatten)]
        run: RunArgs,
        /// Bank file to write
        #[arg(long)]
        bank: PathBuf,
    },
    /// Classify the test split against a bank file
    Import {
        #[command(flatten)]
        run: RunArgs,
        /// Bank file to read
        #[arg(long)]
        bank: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// TOML run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Result file; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    /// Neighbours per stage, one value or one per stage (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub descriptor: Option<DescriptorArg>,
    #[arg(long)]
    pub stages: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Training split (TFCWPTS)
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Test split (TFCWPTS)
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Validation split; when given, gamma is swept over 1, 10, 100, 1000
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum DescriptorArg {
    Xyz,
    Geo,
    Risp,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum AblationArg {
    Diagonal,
    Normalization,
    K,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum CorruptionArg {
    Jitter,
    GlobalNoise,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum RotationArg {
    Zz,
    Zso3,
    So3so3,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SplitArg {
    Train,
    Test,
    Val,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SynthKind {
    SphereCube,
    CappedCylinder,
}
