use std::fmt;
use std::io::{self, BufRead, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use cribo_core::bpe::{train_bpe_files, BpeVocab};
use cribo_core::config::ConfigFile;
use cribo_core::corpus::{list_shards, read_shard_list};
use cribo_core::dedup::{global_dedup, parse_byte_size, FingerprintWidth};
use cribo_core::embeddings::{
    read_corpus_lines, sidecar_path, train_embeddings, EmbeddingModel, WordVectors,
};
use cribo_core::fixtures::{generate_planted_corpus, write_planted_bytes, PlantedConfig};
use cribo_core::ingest::ParseMode;
use cribo_core::langid::LangProfile;
use cribo_core::pipeline::{run_clean, run_stats};
use cribo_core::Error;

use crate::{
    BpeEncodeArgs, BpeTrainArgs, CleanArgs, Cli, Command, DedupArgs, EmbedNnArgs, EmbedTrainArgs,
    FixturesArgs, FixturesCommand, LangidTrainArgs, StatsArgs,
};

/// A failed command: configuration problems exit with 1, data problems
/// with 2.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Data(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn output_error(path: &Path, e: io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn stdout_error(e: io::Error) -> Failure {
    Failure::Data(format!("stdout: {e}"))
}

type Result<T> = std::result::Result<T, Failure>;

struct Globals {
    workers: Option<usize>,
    deterministic: Option<bool>,
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if cli.workers == Some(0) {
        return Err(Failure::Config("--workers must be at least 1".into()));
    }
    let globals = Globals {
        workers: cli.workers,
        deterministic: cli.deterministic,
    };
    match cli.command {
        Command::Clean(a) => clean(&mut config, &globals, a),
        Command::Dedup(a) => dedup(&config, &globals, a),
        Command::Stats(a) => stats(a),
        Command::LangidTrain(a) => langid_train(a),
        Command::BpeTrain(a) => bpe_train(&mut config, a),
        Command::BpeEncode(a) => bpe_encode(a),
        Command::EmbedTrain(a) => embed_train(&mut config, &globals, a),
        Command::EmbedNn(a) => embed_nn(a),
        Command::Fixtures(FixturesCommand::Generate(a)) => fixtures(a),
    }
}

fn width(bits: u32) -> Result<FingerprintWidth> {
    match bits {
        64 => Ok(FingerprintWidth::Bits64),
        128 => Ok(FingerprintWidth::Bits128),
        other => Err(Failure::Config(format!("fingerprint width must be 64 or 128, got {other}"))),
    }
}

fn print_json(json: &str) -> Result<()> {
    writeln!(io::stdout(), "{json}").map_err(stdout_error)
}

fn clean(config: &mut ConfigFile, g: &Globals, a: CleanArgs) -> Result<()> {
    let p = &mut config.pipeline;
    if !a.inputs.is_empty() {
        p.inputs = a.inputs;
    }
    if p.inputs.is_empty() {
        return Err(Failure::Config("no input files given".into()));
    }
    if let Some(v) = a.out {
        p.output_dir = Some(v);
    }
    if let Some(v) = a.fields {
        p.fields = v;
    }
    if let Some(v) = a.lang {
        p.target_language = v;
    }
    if let Some(v) = a.profiles {
        p.langid_profiles = Some(v);
    }
    if let Some(v) = a.abbreviations {
        p.abbreviations = Some(v);
    }
    if let Some(v) = a.boilerplate {
        p.boilerplate = Some(v);
    }
    if a.drop_undetermined {
        p.drop_undetermined = true;
    }
    if a.strict {
        p.parse_mode = ParseMode::Strict;
    }
    if a.global_dedup {
        p.global_dedup = true;
    }
    if let Some(v) = a.shard_max_bytes {
        p.shard_max_bytes = v;
    }
    if let Some(v) = a.batch_size {
        p.batch_size = v;
    }
    if let Some(v) = g.workers {
        p.workers = v;
    }
    if let Some(v) = g.deterministic {
        p.deterministic = v;
    }
    if let Some(v) = a.mem_cap {
        config.dedup.mem_cap = v;
    }
    if let Some(bits) = a.width {
        config.dedup.width = width(bits)?;
    }
    let cfg = config.pipeline_config()?;
    let (stats, timings) = run_clean(&cfg)?;
    eprintln!(
        "cribo: {} documents, {} of {} sentences kept, {} shards in {} ({:.1}s)",
        stats.documents.output,
        stats.final_sentences(),
        stats.sentences.produced,
        stats.output.shards,
        cfg.output_dir.display(),
        timings.total_ms as f64 / 1000.0
    );
    Ok(())
}

fn dedup(config: &ConfigFile, g: &Globals, a: DedupArgs) -> Result<()> {
    let mut shards = Vec::new();
    if let Some(list) = &a.shards_order {
        shards.extend(read_shard_list(list)?);
    }
    for input in &a.inputs {
        if !input.exists() {
            return Err(Error::FileNotFound(input.clone()).into());
        }
        shards.extend(list_shards(input)?);
    }
    if shards.is_empty() {
        return Err(Failure::Config("no shards given".into()));
    }
    let mut section = config.dedup.clone();
    if let Some(v) = a.mem_cap {
        section.mem_cap = v;
    }
    if let Some(bits) = a.width {
        section.width = width(bits)?;
    }
    if let Some(v) = a.spill_dir {
        section.spill_dir = Some(v);
    }
    let workers = g.workers.unwrap_or(config.pipeline.workers);
    let opts = section.to_options(workers)?;
    let stats = global_dedup(&shards, &a.out, &opts)?;
    let path = a.out.join("dedup_stats.json");
    let json = serde_json::to_string_pretty(&stats).expect("serializable");
    std::fs::write(&path, format!("{json}\n")).map_err(|e| output_error(&path, e))?;
    print_json(&json)
}

fn stats(a: StatsArgs) -> Result<()> {
    for p in &a.inputs {
        if !p.exists() {
            return Err(Error::FileNotFound(p.clone()).into());
        }
    }
    let report = run_stats(&a.inputs)?;
    print_json(&serde_json::to_string_pretty(&report).expect("serializable"))
}

fn langid_train(a: LangidTrainArgs) -> Result<()> {
    let lines = read_text_inputs(&a.input)?;
    let profile = LangProfile::train(&lines, &a.lang, a.n_max, a.alpha)?;
    profile.save(&a.out)?;
    eprintln!("cribo: {} profile from {} lines -> {}", a.lang, lines.len(), a.out.display());
    Ok(())
}

fn read_text_inputs(paths: &[PathBuf]) -> Result<Vec<String>> {
    Ok(read_corpus_lines(paths)?)
}

fn bpe_train(config: &mut ConfigFile, a: BpeTrainArgs) -> Result<()> {
    let cfg = &mut config.bpe;
    if let Some(v) = a.vocab_size {
        cfg.vocab_size = v;
    }
    if let Some(v) = a.min_frequency {
        cfg.min_frequency = v;
    }
    for p in &a.input {
        if !p.exists() {
            return Err(Error::FileNotFound(p.clone()).into());
        }
    }
    let vocab = train_bpe_files(&a.input, cfg)?;
    vocab.save(&a.out)?;
    if vocab.vocab_size() < cfg.vocab_size {
        log::warn!(
            "stopped at {} tokens: no pair occurs {} or more times",
            vocab.vocab_size(),
            cfg.min_frequency
        );
    }
    eprintln!("cribo: {} tokens ({} merges) -> {}", vocab.vocab_size(), vocab.merges().len(), a.out.display());
    Ok(())
}

fn bpe_encode(a: BpeEncodeArgs) -> Result<()> {
    let vocab = BpeVocab::load(&a.vocab)?;
    let mut stdin = io::stdin().lock();
    let mut out = BufWriter::new(io::stdout().lock());
    if a.decode {
        for (n, line) in stdin.lines().enumerate() {
            let line = line.map_err(|e| Failure::Data(format!("stdin: {e}")))?;
            let ids = line
                .split_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Failure::Data(format!("stdin line {}: {e}", n + 1)))?;
            let bytes = vocab.decode(&ids)?;
            out.write_all(&bytes).map_err(stdout_error)?;
            out.write_all(b"\n").map_err(stdout_error)?;
        }
    } else {
        let mut input = Vec::new();
        stdin
            .read_to_end(&mut input)
            .map_err(|e| Failure::Data(format!("stdin: {e}")))?;
        let body = input.strip_suffix(b"\n").unwrap_or(&input);
        if !input.is_empty() {
            for line in body.split(|&b| b == b'\n') {
                let ids: Vec<String> = vocab.encode_bytes(line).iter().map(u32::to_string).collect();
                writeln!(out, "{}", ids.join(" ")).map_err(stdout_error)?;
            }
        }
    }
    out.flush().map_err(stdout_error)
}

fn embed_train(config: &mut ConfigFile, g: &Globals, a: EmbedTrainArgs) -> Result<()> {
    let cfg = &mut config.embeddings;
    if let Some(m) = a.mode {
        cfg.mode = m.parse()?;
    }
    macro_rules! set {
        ($($field:ident = $value:expr),*) => {
            $(if let Some(v) = $value { cfg.$field = v; })*
        };
    }
    set!(
        dim = a.dim,
        window = a.window,
        neg = a.neg,
        epochs = a.epochs,
        min_count = a.min_count,
        min_n = a.minn,
        max_n = a.maxn,
        buckets = a.buckets,
        t = a.t,
        lr = a.lr,
        seed = a.seed,
        workers = g.workers
    );
    if g.deterministic == Some(true) && cfg.workers > 1 {
        log::info!("deterministic training uses one worker");
        cfg.workers = 1;
    }
    let lines = read_text_inputs(&a.input)?;
    let (model, report) = train_embeddings(&lines, cfg)?;
    model.to_word_vectors().save_text(&a.out)?;
    if !a.no_binary {
        model.save_binary(&sidecar_path(&a.out))?;
    }
    eprintln!(
        "cribo: {} words x {} dims, {} examples, final loss {:.4} -> {}",
        model.vocab().len(),
        model.dim(),
        report.examples,
        report.epoch_losses.last().copied().unwrap_or(f64::NAN),
        a.out.display()
    );
    Ok(())
}

fn embed_nn(a: EmbedNnArgs) -> Result<()> {
    if a.k == 0 {
        return Err(Failure::Config("-k must be at least 1".into()));
    }
    let sidecar = sidecar_path(&a.model);
    let neighbors = if sidecar.exists() {
        EmbeddingModel::<f32>::load_binary(&sidecar)?.nearest_neighbors(&a.word, a.k)?
    } else {
        WordVectors::load_text(&a.model)?.nearest_neighbors(&a.word, a.k)?
    };
    let mut out = io::stdout().lock();
    for (word, sim) in neighbors {
        writeln!(out, "{word}\t{sim:.6}").map_err(stdout_error)?;
    }
    Ok(())
}

fn fixtures(a: FixturesArgs) -> Result<()> {
    let mut cfg = PlantedConfig {
        seed: a.seed,
        documents: a.documents,
        ..Default::default()
    };
    if let Some(v) = a.fault_rate {
        cfg.fault_rate = v;
    }
    if let Some(v) = a.duplicate_rate {
        cfg.duplicate_rate = v;
    }
    if let Some(v) = a.document_duplicate_rate {
        cfg.document_duplicate_rate = v;
    }
    cfg.validate()?;
    match a.bytes {
        Some(size) => {
            let target = parse_byte_size(&size)?;
            let (paths, bytes) = write_planted_bytes(&cfg, &a.out, a.files, target)?;
            eprintln!("cribo: {bytes} bytes in {} files -> {}", paths.len(), a.out.display());
        }
        None => {
            let corpus = generate_planted_corpus(&cfg)?;
            let paths = corpus.write(&a.out, a.files)?;
            eprintln!(
                "cribo: {} documents, {} planted faults, {} planted duplicates in {} files -> {}",
                corpus.records.len(),
                corpus.ground_truth.planted_faults(),
                corpus.ground_truth.planted_duplicates(),
                paths.len(),
                a.out.display()
            );
        }
    }
    Ok(())
}
