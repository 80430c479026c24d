//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use folkmetrics::consensus_expertise::FrequencyMode;
use folkmetrics::similarity::Dimension;
use folkmetrics::spear::SpearConfig;
use folkmetrics::taxonomy::DepthMode;
use folkmetrics::{BinSpec, TimeGranularity};

#[derive(Debug, Parser)]
#[command(name = "folkmetrics", version, about = "Folksonomy analytics: supertaggers, similarity, consensus, motivation and expertise")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Worker threads (0 picks one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Field delimiter: a single character, or `tab` / `comma`.
    #[arg(long, global = true, default_value = "tab", value_parser = parse_delimiter)]
    pub delimiter: char,
    /// Input has (or output gets) a header line.
    #[arg(long, global = true)]
    pub header: bool,
    #[arg(long, global = true, default_value = "seconds", value_parser = parse_granularity)]
    pub granularity: TimeGranularity,
    /// Collapse repeated (user, item, tag) triples to their earliest record.
    #[arg(long, global = true, value_enum, default_value_t = Toggle::Off)]
    pub dedupe: Toggle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate an annotation file and print dataset summary statistics.
    Ingest {
        #[command(flatten)]
        input: Input,
        /// Summary JSON destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded power-law annotation corpus.
    Synth(SynthArgs),
    /// Rank users and split supertaggers from everyone else.
    Partition {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        split: SplitArgs,
        /// Partition JSON destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write user lists to `supertaggers.txt` / `others.txt` here instead
        /// of inlining them in the JSON.
        #[arg(long)]
        users_dir: Option<PathBuf>,
        /// Per-group summary table (CSV).
        #[arg(long)]
        summary_csv: Option<PathBuf>,
        /// Pareto curve (CSV).
        #[arg(long)]
        pareto: Option<PathBuf>,
        /// Pareto sample points; 0 keeps every user rank.
        #[arg(long, default_value_t = 1000)]
        pareto_resolution: usize,
    },
    /// Top-N rank correlation, cosine and coverage between the two groups.
    Similarity {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, default_value = "tag", value_parser = parse_dimension)]
        dimension: Dimension,
        /// Comma-separated N values (default: dense log-spaced grid).
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Share of each group's annotations by key popularity.
    UsageDist {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, default_value = "tag", value_parser = parse_dimension)]
        dimension: Dimension,
        /// Report the share on keys used at least N times.
        #[arg(long)]
        cumulative: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Supertagger minus other annotations per item, binned by an external
    /// popularity signal.
    ExoDiff {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        bins: BinArgs,
        /// `<item><delimiter><count>` file.
        #[arg(long)]
        popularity: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-item top-tag agreement and tag-distribution cosine.
    Consensus {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        bins: BinArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tags per post, tag/resource ratio and orphan ratio.
    Motivation {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        bins: BinArgs,
        #[arg(long, default_value_t = 100.0)]
        orphan_divisor: f64,
        #[arg(long)]
        per_user: Option<PathBuf>,
        /// Binned series (stdout when neither output is given).
        #[arg(long)]
        binned: Option<PathBuf>,
    },
    /// SPEAR expertise, standardized per tag and averaged per user.
    Spear {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        bins: BinArgs,
        #[command(flatten)]
        spear: SpearArgs,
        #[arg(long)]
        per_user: Option<PathBuf>,
        /// Binned series (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consensus-based or term-depth expertise.
    #[command(subcommand)]
    Expertise(ExpertiseCommand),
    /// Induce a tag taxonomy forest.
    Taxonomy {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        taxonomy: TaxonomyArgs,
        #[command(flatten)]
        eligibility: EligibilityArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every analysis and write all series into one directory.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum ExpertiseCommand {
    /// Agreement with each item's most popular tag, log-weighted by item load.
    Consensus {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        bins: BinArgs,
        #[arg(long, default_value = "distinct", value_parser = parse_frequency)]
        frequency: FrequencyMode,
        #[arg(long)]
        per_user: Option<PathBuf>,
        /// Binned series (stdout when neither output is given).
        #[arg(long)]
        binned: Option<PathBuf>,
    },
    /// Mean normalized taxonomy depth of a user's tags.
    Depth {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        bins: BinArgs,
        #[command(flatten)]
        taxonomy: TaxonomyArgs,
        #[command(flatten)]
        eligibility: EligibilityArgs,
        #[arg(long, default_value = "vocabulary", value_parser = parse_depth_mode)]
        mode: DepthMode,
        #[arg(long)]
        per_user: Option<PathBuf>,
        #[arg(long)]
        binned: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Input {
    /// Annotation file, or `-` for stdin.
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct SplitArgs {
    /// Share of all annotations held by the supertaggers.
    #[arg(long, default_value_t = 0.5, value_parser = parse_fraction)]
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct BinArgs {
    /// Logarithmic bins, e.g. `base=2,step=0.1,max=14`.
    #[arg(long, default_value = "base=2,step=0.1,max=14", value_parser = parse_bins)]
    pub bins: BinSpec,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct EligibilityArgs {
    /// Keep the most annotated tags only.
    #[arg(long, default_value_t = 10_000)]
    pub top_k: usize,
    /// Minimum distinct users per kept tag.
    #[arg(long, default_value_t = 10)]
    pub min_users: usize,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct SpearArgs {
    #[command(flatten)]
    pub eligibility: EligibilityArgs,
    /// Credit exponent p in C(x) = x^p.
    #[arg(long, default_value_t = 0.5)]
    pub exponent: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 250)]
    pub max_iter: usize,
}

impl SpearArgs {
    pub fn config(&self) -> SpearConfig {
        SpearConfig {
            top_k: self.eligibility.top_k,
            min_users: self.eligibility.min_users,
            exponent: self.exponent,
            tolerance: self.tolerance,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, Args)]
pub struct TaxonomyArgs {
    /// Conditional probability needed for a subclass relation.
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
    /// Minimum number of items two tags must share.
    #[arg(long, default_value_t = 10)]
    pub min_support: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub users: usize,
    #[arg(long, default_value_t = 2.0)]
    pub activity_exponent: f64,
    #[arg(long, default_value_t = 5000)]
    pub items: usize,
    #[arg(long, default_value_t = 2000)]
    pub tags: usize,
    #[arg(long, default_value_t = 1.0)]
    pub item_exponent: f64,
    #[arg(long, default_value_t = 1.1)]
    pub tag_exponent: f64,
    /// Upper truncation of per-user annotation counts.
    #[arg(long, default_value_t = 10_000)]
    pub max_user_annotations: usize,
    #[arg(long, env = "FOLKMETRICS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Destination file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: Input,
    /// Bundle directory, created if absent.
    #[arg(long, default_value = "folkmetrics-report")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub bins: BinArgs,
    #[command(flatten)]
    pub spear: SpearArgs,
    #[command(flatten)]
    pub taxonomy: TaxonomyArgs,
    #[arg(long, default_value_t = 100.0)]
    pub orphan_divisor: f64,
    #[arg(long, default_value_t = 1000)]
    pub pareto_resolution: usize,
    /// Optional external item popularity for the exo-diff series.
    #[arg(long)]
    pub popularity: Option<PathBuf>,
}

fn parse_delimiter(s: &str) -> Result<char, String> {
    folkmetrics::corpus::InputFormat::parse_delimiter(s).map_err(|e| e.to_string())
}

fn parse_granularity(s: &str) -> Result<TimeGranularity, String> {
    s.parse().map_err(|e: folkmetrics::Error| e.to_string())
}

fn parse_dimension(s: &str) -> Result<Dimension, String> {
    s.parse().map_err(|e: folkmetrics::Error| e.to_string())
}

fn parse_frequency(s: &str) -> Result<FrequencyMode, String> {
    s.parse().map_err(|e: folkmetrics::Error| e.to_string())
}

fn parse_depth_mode(s: &str) -> Result<DepthMode, String> {
    s.parse().map_err(|e: folkmetrics::Error| e.to_string())
}

fn parse_bins(s: &str) -> Result<BinSpec, String> {
    s.parse().map_err(|e: folkmetrics::Error| e.to_string())
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let f: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if f > 0.0 && f <= 1.0 {
        Ok(f)
    } else {
        Err("fraction must lie in (0, 1]".into())
    }
}
