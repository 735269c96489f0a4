//! `cribo`: clean, deduplicate and tokenize web-crawl text, and train word
//! vectors on the result.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "cribo", version, about = "Web-crawl corpus cleaning, deduplication, BPE and word vectors")]
pub struct Cli {
    /// TOML configuration file; flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    /// Reproducible output (the default for `clean`); `--deterministic=false`
    /// allows the faster unordered modes.
    #[arg(long, global = true, num_args = 0..=1, require_equals = true, default_missing_value = "true", value_name = "BOOL")]
    pub deterministic: Option<bool>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the cleaning pipeline over JSONL crawl files.
    Clean(CleanArgs),
    /// Global first-occurrence sentence dedup over corpus shards.
    Dedup(DedupArgs),
    /// Summarize a cleaned corpus.
    Stats(StatsArgs),
    /// Train a language profile from plain text.
    LangidTrain(LangidTrainArgs),
    /// Train a byte-level BPE vocabulary.
    BpeTrain(BpeTrainArgs),
    /// Encode stdin to token ids, or decode ids back to text.
    BpeEncode(BpeEncodeArgs),
    /// Train word vectors.
    EmbedTrain(EmbedTrainArgs),
    /// Nearest neighbors of a word.
    EmbedNn(EmbedNnArgs),
    #[command(hide = true, subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Args, Debug)]
pub struct CleanArgs {
    /// Input JSONL files or directories (`.jsonl`, `.json`, `.gz`).
    pub inputs: Vec<PathBuf>,
    #[arg(short, long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Record fields to use: any of `headers`, `paragraphs`, `keywords`,
    /// `links`, or `all`.
    #[arg(long)]
    pub fields: Option<String>,
    #[arg(long, value_name = "LANG")]
    pub lang: Option<String>,
    /// Profile file or directory of `*.json` profiles.
    #[arg(long, value_name = "PATH")]
    pub profiles: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub abbreviations: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub boilerplate: Option<PathBuf>,
    /// Drop sentences whose language cannot be determined.
    #[arg(long)]
    pub drop_undetermined: bool,
    /// Stop at the first malformed input line.
    #[arg(long)]
    pub strict: bool,
    /// Also remove sentences repeated across documents.
    #[arg(long)]
    pub global_dedup: bool,
    #[arg(long, value_name = "SIZE")]
    pub shard_max_bytes: Option<String>,
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,
    #[arg(long, value_name = "SIZE")]
    pub mem_cap: Option<String>,
    /// Fingerprint width in bits (64 or 128).
    #[arg(long, value_name = "BITS")]
    pub width: Option<u32>,
}

#[derive(Args, Debug)]
pub struct DedupArgs {
    /// Corpus shard files or directories, in concatenation order.
    pub inputs: Vec<PathBuf>,
    /// Accepted for clarity; the pass is always global.
    #[arg(long)]
    pub global: bool,
    /// File listing shard paths, one per line, in concatenation order.
    #[arg(long, value_name = "FILE")]
    pub shards_order: Option<PathBuf>,
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_name = "SIZE")]
    pub mem_cap: Option<String>,
    #[arg(long, value_name = "BITS")]
    pub width: Option<u32>,
    #[arg(long, value_name = "DIR")]
    pub spill_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Corpus shard files or directories.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LangidTrainArgs {
    #[arg(long, value_name = "LANG")]
    pub lang: String,
    /// Text files or directories of `*.txt` files, one sample per line.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, default_value_t = cribo_core::langid::DEFAULT_N_MAX)]
    pub n_max: usize,
    #[arg(long, default_value_t = cribo_core::langid::DEFAULT_ALPHA)]
    pub alpha: f64,
}

#[derive(Args, Debug)]
pub struct BpeTrainArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_name = "N")]
    pub vocab_size: Option<usize>,
    #[arg(long, value_name = "N")]
    pub min_frequency: Option<u64>,
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BpeEncodeArgs {
    #[arg(long, value_name = "FILE")]
    pub vocab: PathBuf,
    /// Read lines of space-separated ids and write text.
    #[arg(long)]
    pub decode: bool,
}

#[derive(Args, Debug)]
pub struct EmbedTrainArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Text vector file; a binary model is written next to it as `.bin`.
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, value_name = "cbow|skipgram")]
    pub mode: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub neg: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub minn: Option<usize>,
    #[arg(long)]
    pub maxn: Option<usize>,
    /// N-gram hash buckets; 0 disables subwords.
    #[arg(long)]
    pub buckets: Option<usize>,
    /// Subsampling threshold.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip the binary model.
    #[arg(long)]
    pub no_binary: bool,
}

#[derive(Args, Debug)]
pub struct EmbedNnArgs {
    /// Text vector file. A `.bin` model next to it enables
    /// out-of-vocabulary queries.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long)]
    pub word: String,
    #[arg(short, default_value_t = 10)]
    pub k: usize,
}

#[derive(Subcommand, Debug)]
pub enum FixturesCommand {
    /// Write a planted corpus and its ground truth.
    Generate(FixturesArgs),
}

#[derive(Args, Debug)]
pub struct FixturesArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub documents: usize,
    #[arg(long, default_value_t = 1)]
    pub files: usize,
    #[arg(long)]
    pub fault_rate: Option<f64>,
    #[arg(long)]
    pub duplicate_rate: Option<f64>,
    #[arg(long)]
    pub document_duplicate_rate: Option<f64>,
    /// Stream about this many bytes instead of `--documents`; no ground
    /// truth is written.
    #[arg(long, value_name = "SIZE")]
    pub bytes: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cribo: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
