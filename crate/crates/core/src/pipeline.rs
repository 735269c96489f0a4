//! The cleaning pipeline: ingest, segment, identify language, filter
//! quality, deduplicate, write.
//!
//! Records are processed in batches. Each batch is mapped in parallel
//! (every document is independent up to and including intra-document
//! dedup); document-level dedup and output writing then run sequentially in
//! input order, so the corpus and the counters are a pure function of the
//! inputs and the configuration regardless of the worker count.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{list_shards, shard_name, DocumentReader, DocumentWriter};
use crate::dedup::{self, DedupOptions, DedupStats, DocumentDeduper};
use crate::ingest::{assemble_document, read_jsonl, FieldMask, ParseMode, RawRecord};
use crate::langid::{self, IdentifyConfig, LangLabel, LanguageIdentifier};
use crate::quality::{self, FilterStats, QualityConfig, Reason};
use crate::segment::Segmenter;
use crate::{Document, Error, FilterVerdict, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub fields: FieldMask,
    pub target_language: String,
    /// Profile file or directory; the bundled profiles when unset.
    pub langid_profiles: Option<PathBuf>,
    /// Abbreviation list; the bundled Spanish list when unset.
    pub abbreviations: Option<PathBuf>,
    pub identify: IdentifyConfig,
    /// Whether sentences whose language is undetermined are dropped as
    /// `WRONG_LANGUAGE`.
    pub drop_undetermined: bool,
    pub quality: QualityConfig,
    pub dedup: DedupOptions,
    pub parse_mode: ParseMode,
    pub workers: usize,
    /// Batch-parallel processing in strict input order. When off, whole
    /// input files are processed in parallel and reconciled in file order.
    pub deterministic: bool,
    pub batch_size: usize,
    pub shard_max_bytes: u64,
    /// Run the global sentence dedup over the cleaned corpus as well.
    pub global_dedup: bool,
}

impl PipelineConfig {
    pub fn new(inputs: Vec<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            inputs,
            output_dir: output_dir.into(),
            fields: FieldMask::default(),
            target_language: "es".into(),
            langid_profiles: None,
            abbreviations: None,
            identify: IdentifyConfig::default(),
            drop_undetermined: false,
            quality: QualityConfig::default(),
            dedup: DedupOptions::default(),
            parse_mode: ParseMode::Lenient,
            workers: 1,
            deterministic: true,
            batch_size: 1024,
            shard_max_bytes: 256 << 20,
            global_dedup: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.shard_max_bytes == 0 {
            return Err(Error::Config("shard_max_bytes must be positive".into()));
        }
        self.quality.validate()?;
        for p in self
            .inputs
            .iter()
            .chain(&self.langid_profiles)
            .chain(&self.abbreviations)
        {
            if !p.exists() {
                return Err(Error::Config(format!("path does not exist: {}", p.display())));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub files: u64,
    pub input_bytes: u64,
    /// Non-blank input lines.
    pub lines: u64,
    pub records: u64,
    pub parse_errors: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentStats {
    pub assembled: u64,
    pub empty_after_segmentation: u64,
    pub emptied_by_filters: u64,
    pub duplicate_documents: u64,
    pub output: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceStats {
    pub produced: u64,
    /// Language label counts over all produced sentences.
    pub languages: BTreeMap<String, u64>,
    /// Drops by the language and quality filters, by reason.
    pub filters: FilterStats,
    pub intra_document_duplicates: u64,
    pub duplicate_document_sentences: u64,
    pub output: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputStats {
    pub shards: u64,
    pub bytes: u64,
}

/// Counters for one cleaning run. Stage wall-clock times live separately in
/// [`StageTimings`] so that these counters stay identical across runs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub ingest: IngestStats,
    pub documents: DocumentStats,
    pub sentences: SentenceStats,
    /// Majority sentence language of each assembled document with sentences.
    pub document_languages: BTreeMap<String, u64>,
    pub output: OutputStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_dedup: Option<DedupStats>,
}

impl PipelineStats {
    /// Checks that every stage's inputs equal its outputs plus its drops.
    pub fn check_conservation(&self) -> std::result::Result<(), String> {
        let i = &self.ingest;
        let d = &self.documents;
        let s = &self.sentences;
        let mut failures = Vec::new();
        let mut check = |name: &str, lhs: u64, rhs: u64| {
            if lhs != rhs {
                failures.push(format!("{name}: {lhs} != {rhs}"));
            }
        };
        check("lines = records + parse_errors", i.lines, i.records + i.parse_errors);
        check("records = documents assembled", i.records, d.assembled);
        check(
            "documents assembled = empty + emptied + duplicates + output",
            d.assembled,
            d.empty_after_segmentation + d.emptied_by_filters + d.duplicate_documents + d.output,
        );
        check("sentences produced = filter input", s.produced, s.filters.input);
        check(
            "filter input = kept + dropped",
            s.filters.input,
            s.filters.kept + s.filters.dropped(),
        );
        check(
            "filter kept = intra dups + duplicate-document sentences + output",
            s.filters.kept,
            s.intra_document_duplicates + s.duplicate_document_sentences + s.output,
        );
        check(
            "language labels = sentences produced",
            s.languages.values().sum(),
            s.produced,
        );
        if let Some(g) = &self.global_dedup {
            check("global dedup input = stage-one output", g.input_sentences, s.output);
            check("global dedup documents = stage-one output", g.input_documents, d.output);
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(failures.join("; "))
        }
    }

    /// Sentences in the final corpus, after global dedup when it ran.
    pub fn final_sentences(&self) -> u64 {
        match &self.global_dedup {
            Some(g) => g.input_sentences - g.removed_sentences,
            None => self.sentences.output,
        }
    }

    fn merge_local(&mut self, local: &LocalStats) {
        self.documents.assembled += 1;
        let s = &mut self.sentences;
        s.produced += local.produced;
        for (lang, n) in &local.languages {
            *s.languages.entry(lang.clone()).or_insert(0) += n;
        }
        s.filters.merge(&local.filters);
        s.intra_document_duplicates += local.intra_duplicates;
        if let Some(lang) = &local.majority_language {
            *self.document_languages.entry(lang.clone()).or_insert(0) += 1;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub read_ms: u64,
    pub process_ms: u64,
    pub write_ms: u64,
    pub global_dedup_ms: u64,
    pub total_ms: u64,
}

fn ms(d: Duration) -> u64 {
    d.as_millis() as u64
}

/// Per-document counters produced in parallel and merged in input order.
#[derive(Debug, Default)]
struct LocalStats {
    produced: u64,
    languages: BTreeMap<String, u64>,
    filters: FilterStats,
    intra_duplicates: u64,
    majority_language: Option<String>,
}

/// Shared read-only processing context.
pub struct Cleaner {
    segmenter: Segmenter,
    identifier: LanguageIdentifier,
    fields: FieldMask,
    target: String,
    drop_undetermined: bool,
    quality: QualityConfig,
    width: dedup::FingerprintWidth,
}

enum Outcome {
    NoSentences,
    Emptied,
    Kept(Document),
}

impl Cleaner {
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        let segmenter = match &cfg.abbreviations {
            Some(p) => Segmenter::from_file(p)?,
            None => Segmenter::default(),
        };
        let profiles = match &cfg.langid_profiles {
            Some(p) => langid::load_profiles(p)?,
            None => langid::bundled_profiles(),
        };
        if !profiles.iter().any(|p| p.lang() == cfg.target_language) {
            return Err(Error::Config(format!(
                "no language profile for target language {:?}",
                cfg.target_language
            )));
        }
        Ok(Cleaner {
            segmenter,
            identifier: LanguageIdentifier::new(profiles, cfg.identify)?,
            fields: cfg.fields,
            target: cfg.target_language.clone(),
            drop_undetermined: cfg.drop_undetermined,
            quality: cfg.quality.clone(),
            width: cfg.dedup.width,
        })
    }

    fn process(&self, rec: &RawRecord) -> (Outcome, LocalStats) {
        let mut local = LocalStats::default();
        let doc = assemble_document(rec, self.fields);
        let mut doc = self.segmenter.segment_document(doc);
        local.produced = doc.sentences.len() as u64;
        if doc.sentences.is_empty() {
            return (Outcome::NoSentences, local);
        }

        let mut votes: BTreeMap<LangLabel, u64> = BTreeMap::new();
        for s in &mut doc.sentences {
            let lang = self.identifier.identify(&s.text).lang;
            *local.languages.entry(lang.0.clone()).or_insert(0) += 1;
            let wrong = if lang.is_undetermined() {
                self.drop_undetermined
            } else {
                *votes.entry(lang.clone()).or_insert(0) += 1;
                lang.as_str() != self.target
            };
            if wrong {
                s.verdict = Some([Reason::WrongLanguage].into_iter().collect::<FilterVerdict>());
            }
            s.lang = Some(lang);
        }
        local.majority_language = Some(
            votes
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
                .map_or_else(|| langid::UNDETERMINED.to_string(), |(l, _)| l.0.clone()),
        );

        let mut doc = quality::filter_document(doc, &self.quality, &mut local.filters);
        if doc.sentences.is_empty() {
            return (Outcome::Emptied, local);
        }
        local.intra_duplicates = dedup::dedup_within_document(&mut doc, self.width) as u64;
        (Outcome::Kept(doc), local)
    }
}

/// Writes documents into size-capped `part-%05d.txt` shards.
struct ShardedWriter {
    dir: PathBuf,
    max_bytes: u64,
    current: Option<DocumentWriter<BufWriter<File>>>,
    shards: u64,
    bytes: u64,
}

impl ShardedWriter {
    fn new(dir: &Path, max_bytes: u64) -> Self {
        ShardedWriter {
            dir: dir.to_path_buf(),
            max_bytes,
            current: None,
            shards: 0,
            bytes: 0,
        }
    }

    fn write(&mut self, doc: &Document) -> Result<()> {
        if self.current.as_ref().is_some_and(|w| w.bytes() >= self.max_bytes) {
            self.close_current()?;
        }
        if self.current.is_none() {
            let path = self.dir.join(shard_name(self.shards as usize));
            self.current = Some(DocumentWriter::create(&path)?);
            self.shards += 1;
        }
        let w = self.current.as_mut().expect("opened above");
        let texts: Vec<&str> = doc.sentence_texts().collect();
        w.write_document(&texts).map_err(|e| Error::io(&self.dir, e))
    }

    fn close_current(&mut self) -> Result<()> {
        if let Some(w) = self.current.take() {
            self.bytes += w.bytes();
            w.finish().map_err(|e| Error::io(&self.dir, e))?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<OutputStats> {
        self.close_current()?;
        Ok(OutputStats {
            shards: self.shards,
            bytes: self.bytes,
        })
    }
}

/// Expands input paths: files stand for themselves, directories contribute
/// their `.jsonl`, `.json` and `.gz` files in name order.
pub fn resolve_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_file() {
            files.push(input.clone());
            continue;
        }
        let entries = std::fs::read_dir(input).map_err(|e| Error::io(input, e))?;
        let mut found: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| {
                        n.ends_with(".jsonl") || n.ends_with(".json") || n.ends_with(".gz")
                    })
            })
            .collect();
        found.sort();
        files.extend(found);
    }
    Ok(files)
}

fn is_shard_file(p: &Path) -> bool {
    p.file_name().and_then(|n| n.to_str()).is_some_and(|n| {
        n.len() == "part-00000.txt".len()
            && n.starts_with("part-")
            && n.ends_with(".txt")
            && n[5..10].bytes().all(|b| b.is_ascii_digit())
    })
}

/// Removes shard files and run reports left by a previous run.
fn clear_previous_output(dir: &Path) -> Result<()> {
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if is_shard_file(&p) || name == "stats.json" || name == "timings.json" {
            std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(())
}

struct Sink<'a> {
    stats: &'a mut PipelineStats,
    deduper: DocumentDeduper,
    writer: ShardedWriter,
}

impl Sink<'_> {
    fn accept(&mut self, outcome: Outcome, local: &LocalStats) -> Result<()> {
        self.stats.merge_local(local);
        match outcome {
            Outcome::NoSentences => self.stats.documents.empty_after_segmentation += 1,
            Outcome::Emptied => self.stats.documents.emptied_by_filters += 1,
            Outcome::Kept(doc) => {
                if self.deduper.admit(&doc) {
                    self.stats.documents.output += 1;
                    self.stats.sentences.output += doc.sentences.len() as u64;
                    self.writer.write(&doc)?;
                } else {
                    self.stats.documents.duplicate_documents += 1;
                    self.stats.sentences.duplicate_document_sentences += doc.sentences.len() as u64;
                }
            }
        }
        Ok(())
    }
}

/// Runs the cleaning pipeline, writing `part-*.txt` shards, `stats.json`
/// and `timings.json` into the output directory.
pub fn run_clean(cfg: &PipelineConfig) -> Result<(PipelineStats, StageTimings)> {
    let start = Instant::now();
    cfg.validate()?;
    let cleaner = Cleaner::from_config(cfg)?;
    let files = resolve_inputs(&cfg.inputs)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    clear_previous_output(&cfg.output_dir)?;
    let stage_one_dir = if cfg.global_dedup {
        let d = cfg.output_dir.join(".stage1");
        if d.exists() {
            std::fs::remove_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        d
    } else {
        cfg.output_dir.clone()
    };

    let mut stats = PipelineStats::default();
    let mut timings = StageTimings::default();
    let mut sink = Sink {
        stats: &mut stats,
        deduper: DocumentDeduper::new(cfg.dedup.width),
        writer: ShardedWriter::new(&stage_one_dir, cfg.shard_max_bytes),
    };

    let ingest = if cfg.deterministic {
        run_batched(cfg, &cleaner, &files, &pool, &mut sink, &mut timings)?
    } else {
        run_file_parallel(cfg, &cleaner, &files, &pool, &mut sink, &mut timings)?
    };
    let write_start = Instant::now();
    let output = sink.writer.finish()?;
    timings.write_ms += ms(write_start.elapsed());
    stats.ingest = ingest;
    stats.output = output;

    if cfg.global_dedup {
        let t = Instant::now();
        let shards = list_shards(&stage_one_dir)?;
        let g = dedup::global_dedup(&shards, &cfg.output_dir, &cfg.dedup)?;
        stats.output = OutputStats {
            shards: shards.len() as u64,
            bytes: g.output_bytes,
        };
        stats.global_dedup = Some(g);
        std::fs::remove_dir_all(&stage_one_dir).map_err(|e| Error::io(&stage_one_dir, e))?;
        timings.global_dedup_ms = ms(t.elapsed());
    }

    stats
        .check_conservation()
        .map_err(|msg| Error::Config(format!("internal accounting error: {msg}")))?;
    timings.total_ms = ms(start.elapsed());
    write_json(&cfg.output_dir.join("stats.json"), &stats)?;
    write_json(&cfg.output_dir.join("timings.json"), &timings)?;
    Ok((stats, timings))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_string_pretty(value).expect("stats serialize");
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

fn count_bytes(files: &[PathBuf]) -> Result<u64> {
    files.iter().try_fold(0, |acc, f| {
        Ok(acc + std::fs::metadata(f).map_err(|e| Error::io(f, e))?.len())
    })
}

fn run_batched(
    cfg: &PipelineConfig,
    cleaner: &Cleaner,
    files: &[PathBuf],
    pool: &rayon::ThreadPool,
    sink: &mut Sink<'_>,
    timings: &mut StageTimings,
) -> Result<IngestStats> {
    let mut ingest = IngestStats {
        files: files.len() as u64,
        input_bytes: count_bytes(files)?,
        ..Default::default()
    };
    for file in files {
        let mut reader = read_jsonl(file, cfg.parse_mode)?;
        loop {
            let t = Instant::now();
            let mut batch = Vec::with_capacity(cfg.batch_size);
            for item in reader.by_ref() {
                ingest.lines += 1;
                match item {
                    Ok((_, rec)) => {
                        batch.push(rec);
                        if batch.len() == cfg.batch_size {
                            break;
                        }
                    }
                    Err(e) if cfg.parse_mode == ParseMode::Strict => return Err(e),
                    Err(e) => {
                        log::warn!("{e}");
                        ingest.parse_errors += 1;
                    }
                }
            }
            timings.read_ms += ms(t.elapsed());
            if batch.is_empty() {
                break;
            }
            ingest.records += batch.len() as u64;

            let t = Instant::now();
            let processed: Vec<(Outcome, LocalStats)> =
                pool.install(|| batch.par_iter().map(|r| cleaner.process(r)).collect());
            timings.process_ms += ms(t.elapsed());

            let t = Instant::now();
            for (outcome, local) in processed {
                sink.accept(outcome, &local)?;
            }
            timings.write_ms += ms(t.elapsed());
        }
    }
    Ok(ingest)
}

/// Processes whole files in parallel, holding each file's results in
/// memory, then feeds them to the sink in file order.
fn run_file_parallel(
    cfg: &PipelineConfig,
    cleaner: &Cleaner,
    files: &[PathBuf],
    pool: &rayon::ThreadPool,
    sink: &mut Sink<'_>,
    timings: &mut StageTimings,
) -> Result<IngestStats> {
    let mut ingest = IngestStats {
        files: files.len() as u64,
        input_bytes: count_bytes(files)?,
        ..Default::default()
    };
    type FileResult = (IngestStats, Vec<(Outcome, LocalStats)>);
    for group in files.chunks(cfg.workers.max(1)) {
        let t = Instant::now();
        let results: Vec<Result<FileResult>> = pool.install(|| {
            group
                .par_iter()
                .map(|file| {
                    let mut local = IngestStats::default();
                    let mut out = Vec::new();
                    for item in read_jsonl(file, cfg.parse_mode)? {
                        local.lines += 1;
                        match item {
                            Ok((_, rec)) => {
                                local.records += 1;
                                out.push(cleaner.process(&rec));
                            }
                            Err(e) if cfg.parse_mode == ParseMode::Strict => return Err(e),
                            Err(e) => {
                                log::warn!("{e}");
                                local.parse_errors += 1;
                            }
                        }
                    }
                    Ok((local, out))
                })
                .collect()
        });
        timings.process_ms += ms(t.elapsed());
        let t = Instant::now();
        for res in results {
            let (local, outcomes) = res?;
            ingest.lines += local.lines;
            ingest.records += local.records;
            ingest.parse_errors += local.parse_errors;
            for (outcome, l) in outcomes {
                sink.accept(outcome, &l)?;
            }
        }
        timings.write_ms += ms(t.elapsed());
    }
    Ok(ingest)
}

/// Summary of an existing corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub shards: u64,
    pub documents: u64,
    pub sentences: u64,
    pub bytes: u64,
    /// True when no normalized sentence occurs twice.
    pub duplicate_free: bool,
    pub duplicate_sentences: u64,
    /// Sentence byte lengths bucketed by powers of two: key `k` counts
    /// lengths in `[2^k, 2^(k+1))`.
    pub length_histogram: BTreeMap<u32, u64>,
}

/// Counts documents, sentences and bytes of corpus shards and checks that
/// they are free of duplicate sentences.
pub fn run_stats(paths: &[PathBuf]) -> Result<CorpusReport> {
    let mut shards = Vec::new();
    for p in paths {
        if !p.exists() {
            return Err(Error::FileNotFound(p.clone()));
        }
        shards.extend(list_shards(p)?);
    }
    let mut report = CorpusReport {
        shards: shards.len() as u64,
        duplicate_free: true,
        ..Default::default()
    };
    let mut seen = dedup::SeenSet::<dedup::Fingerprint>::default();
    for shard in &shards {
        report.bytes += std::fs::metadata(shard).map_err(|e| Error::io(shard, e))?.len();
        for doc in DocumentReader::open(shard)? {
            let doc = doc?;
            report.documents += 1;
            for s in &doc {
                report.sentences += 1;
                let bucket = usize::BITS - 1 - s.len().max(1).leading_zeros();
                *report.length_histogram.entry(bucket).or_insert(0) += 1;
                if !seen.insert(dedup::fingerprint(s)) {
                    report.duplicate_sentences += 1;
                }
            }
        }
    }
    report.duplicate_free = report.duplicate_sentences == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_documents;

    fn write_records(dir: &Path, name: &str, recs: &[RawRecord]) -> PathBuf {
        let p = dir.join(name);
        let body: String = recs.iter().map(|r| r.to_json_line() + "\n").collect();
        std::fs::write(&p, body).unwrap();
        p
    }

    fn rec(url: &str, paragraphs: &[&str]) -> RawRecord {
        RawRecord {
            url: url.into(),
            paragraphs: paragraphs.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    fn read_corpus(dir: &Path) -> Vec<Vec<String>> {
        list_shards(dir)
            .unwrap()
            .iter()
            .flat_map(|p| parse_documents(&std::fs::read_to_string(p).unwrap()))
            .collect()
    }

    #[test]
    fn empty_input_dir() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in");
        std::fs::create_dir(&input).unwrap();
        let cfg = PipelineConfig::new(vec![input], dir.path().join("out"));
        let (stats, _) = run_clean(&cfg).unwrap();
        assert_eq!(stats, PipelineStats::default());
        assert!(read_corpus(&dir.path().join("out")).is_empty());
        assert!(dir.path().join("out/stats.json").exists());
    }

    #[test]
    fn three_document_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let clean = "La biblioteca abre a las nueve de la mañana. Los lectores pueden consultar \
                     los periódicos del día en la sala principal.";
        let english = "The library opens at nine in the morning and readers can look at \
                       the daily newspapers in the main hall.";
        let noisy = "!!!!!! ###### ?????? $$$$$$";
        let input = write_records(
            dir.path(),
            "a.jsonl",
            &[
                rec("http://es.example/1", &[english]),
                rec("http://es.example/2", &[noisy]),
                rec("http://es.example/3", &[clean]),
            ],
        );
        let cfg = PipelineConfig::new(vec![input], dir.path().join("out"));
        let (stats, _) = run_clean(&cfg).unwrap();
        let corpus = read_corpus(&dir.path().join("out"));
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus[0].len(), 2);
        assert_eq!(stats.documents.emptied_by_filters, 2);
        assert_eq!(stats.documents.output, 1);
        assert_eq!(
            stats.sentences.filters.single_reason.get(&Reason::WrongLanguage),
            Some(&1)
        );
        assert_eq!(stats.sentences.filters.multi_reason, 1);
        assert_eq!(stats.document_languages.get("en"), Some(&1));
        stats.check_conservation().unwrap();
    }

    #[test]
    fn duplicate_documents_and_sentences() {
        let dir = tempfile::tempdir().unwrap();
        let a = "El tren llegó a la estación con una hora de retraso.";
        let b = "Los viajeros esperaron pacientemente en el andén central.";
        let input = write_records(
            dir.path(),
            "a.jsonl",
            &[
                rec("http://x/1", &[&format!("{a} {b} {a}")]),
                rec("http://x/2", &[a, b]),
                rec("http://x/3", &[b]),
            ],
        );
        let cfg = PipelineConfig::new(vec![input], dir.path().join("out"));
        let (stats, _) = run_clean(&cfg).unwrap();
        assert_eq!(read_corpus(&dir.path().join("out")), vec![vec![a, b], vec![b]]);
        assert_eq!(stats.sentences.intra_document_duplicates, 1);
        assert_eq!(stats.documents.duplicate_documents, 1);
        assert_eq!(stats.sentences.duplicate_document_sentences, 2);

        let mut cfg = cfg;
        cfg.global_dedup = true;
        let (stats, _) = run_clean(&cfg).unwrap();
        assert_eq!(read_corpus(&dir.path().join("out")), vec![vec![a, b]]);
        assert_eq!(stats.final_sentences(), 2);
        assert!(!dir.path().join("out/.stage1").exists());
    }

    #[test]
    fn parse_errors_counted_or_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.jsonl");
        std::fs::write(
            &p,
            "{\"url\":\"http://x\",\"paragraphs\":[\"Una frase completamente normal aquí.\"]}\n{oops\n",
        )
        .unwrap();
        let mut cfg = PipelineConfig::new(vec![p], dir.path().join("out"));
        let (stats, _) = run_clean(&cfg).unwrap();
        assert_eq!(stats.ingest.parse_errors, 1);
        assert_eq!(stats.ingest.records, 1);
        cfg.parse_mode = ParseMode::Strict;
        assert!(matches!(run_clean(&cfg), Err(Error::MalformedJson { line: 2, .. })));
    }

    #[test]
    fn config_fails_fast() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::new(vec![dir.path().join("missing")], dir.path().join("out"));
        assert!(matches!(run_clean(&cfg), Err(Error::Config(_))));
        let mut cfg = PipelineConfig::new(vec![], dir.path().join("out"));
        cfg.workers = 0;
        assert!(matches!(run_clean(&cfg), Err(Error::Config(_))));
        let mut cfg = PipelineConfig::new(vec![], dir.path().join("out"));
        cfg.target_language = "de".into();
        assert!(matches!(run_clean(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn shards_rotate_by_size() {
        let dir = tempfile::tempdir().unwrap();
        let recs: Vec<RawRecord> = (0..10)
            .map(|i| {
                rec(
                    &format!("http://x/{i}"),
                    &[&format!("Este es el documento número {i} de la colección de pruebas.")],
                )
            })
            .collect();
        let input = write_records(dir.path(), "a.jsonl", &recs);
        let mut cfg = PipelineConfig::new(vec![input], dir.path().join("out"));
        cfg.shard_max_bytes = 100;
        let (stats, _) = run_clean(&cfg).unwrap();
        assert!(stats.output.shards > 1);
        assert_eq!(read_corpus(&dir.path().join("out")).len(), 10);
        let report = run_stats(&[dir.path().join("out")]).unwrap();
        assert_eq!(report.documents, 10);
        assert_eq!(report.bytes, stats.output.bytes);
        assert!(report.duplicate_free);
    }

    #[test]
    fn stats_report() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            run_stats(&[dir.path().to_path_buf()]).unwrap(),
            CorpusReport {
                duplicate_free: true,
                ..Default::default()
            }
        );
        let p = dir.path().join(shard_name(0));
        std::fs::write(&p, "Uno.\nDos.\n\nTres.\nCuatro.\nUno.\n").unwrap();
        let r = run_stats(&[p.clone()]).unwrap();
        assert_eq!((r.documents, r.sentences), (2, 5));
        assert_eq!(r.bytes, std::fs::metadata(&p).unwrap().len());
        assert!(!r.duplicate_free);
        assert_eq!(r.length_histogram.values().sum::<u64>(), 5);
        assert!(matches!(
            run_stats(&[dir.path().join("nope")]),
            Err(Error::FileNotFound(_))
        ));
    }

    #[test]
    fn shard_file_pattern() {
        assert!(is_shard_file(Path::new("/x/part-00012.txt")));
        assert!(!is_shard_file(Path::new("/x/part-0001.txt")));
        assert!(!is_shard_file(Path::new("/x/notes.txt")));
    }
}
