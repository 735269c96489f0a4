//! Exact deduplication over normalized-text fingerprints.
//!
//! Text is normalized (Unicode NFC, inner whitespace runs collapsed to one
//! space, outer whitespace stripped, case kept) and hashed with XXH3 under
//! a fixed seed, so fingerprints are stable across runs and machines.
//!
//! Two stages use them:
//!
//! * Stage 1, inside the cleaning pipeline: [`dedup_within_document`] keeps
//!   the first occurrence of each sentence in a document and
//!   [`DocumentDeduper`] drops documents whose ordered sentence list was
//!   already seen.
//! * Stage 2, over the finished corpus: [`global_dedup`] keeps the first
//!   occurrence of every sentence across the concatenation of all shards in
//!   the given order.
//!
//! Membership is exact over fingerprints. With `n` distinct sentences the
//! chance of any 64-bit collision is about `n^2 / 2^65` (roughly 3% at four
//! billion sentences); the 128-bit mode makes it negligible at twice the
//! memory per entry.

use std::borrow::Cow;
use std::collections::HashSet;
use std::fs::File;
use std::hash::Hash;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};
use xxhash_rust::xxh3::{xxh3_128_with_seed, xxh3_64_with_seed};

use crate::corpus::{shard_name, DocumentReader, DocumentWriter};
use crate::{Document, Error, Result};

const FINGERPRINT_SEED: u64 = 0x5eed_c0de_2021_0001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WideFingerprint(pub u128);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FingerprintWidth {
    #[default]
    #[serde(rename = "64")]
    Bits64,
    #[serde(rename = "128")]
    Bits128,
}

/// NFC, whitespace runs collapsed to one space, outer whitespace removed.
pub fn normalize(text: &str) -> Cow<'_, str> {
    let nfc: Cow<'_, str> = if is_nfc_quick(text.chars()) == IsNormalized::Yes {
        Cow::Borrowed(text)
    } else {
        Cow::Owned(text.nfc().collect())
    };
    let trimmed = nfc.trim();
    let needs_collapse = trimmed
        .as_bytes()
        .windows(2)
        .any(|w| w[0].is_ascii_whitespace() && w[1].is_ascii_whitespace())
        || trimmed.chars().any(|c| c.is_whitespace() && c != ' ');
    if !needs_collapse {
        return match nfc {
            Cow::Borrowed(s) => Cow::Borrowed(s.trim()),
            Cow::Owned(s) => Cow::Owned(s.trim().to_string()),
        };
    }
    Cow::Owned(trimmed.split_whitespace().collect::<Vec<_>>().join(" "))
}

pub fn fingerprint(text: &str) -> Fingerprint {
    Fingerprint(xxh3_64_with_seed(normalize(text).as_bytes(), FINGERPRINT_SEED))
}

pub fn wide_fingerprint(text: &str) -> WideFingerprint {
    WideFingerprint(xxh3_128_with_seed(normalize(text).as_bytes(), FINGERPRINT_SEED))
}

/// A fixed-width dedup key with an on-disk encoding for spilled runs.
pub trait DedupKey: Copy + Eq + Hash + Ord + Send + Sync + 'static {
    const BYTES: usize;
    fn of_text(text: &str) -> Self;
    /// Combines an ordered list of keys into one key.
    fn of_sequence(keys: &[Self]) -> Self;
    fn write_to(&self, out: &mut Vec<u8>);
    fn read_from(bytes: &[u8]) -> Self;
}

impl DedupKey for Fingerprint {
    const BYTES: usize = 8;

    fn of_text(text: &str) -> Self {
        fingerprint(text)
    }

    fn of_sequence(keys: &[Self]) -> Self {
        let bytes: Vec<u8> = keys.iter().flat_map(|k| k.0.to_le_bytes()).collect();
        Fingerprint(xxh3_64_with_seed(&bytes, FINGERPRINT_SEED))
    }

    fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.0.to_be_bytes());
    }

    fn read_from(bytes: &[u8]) -> Self {
        Fingerprint(u64::from_be_bytes(bytes.try_into().expect("8 bytes")))
    }
}

impl DedupKey for WideFingerprint {
    const BYTES: usize = 16;

    fn of_text(text: &str) -> Self {
        wide_fingerprint(text)
    }

    fn of_sequence(keys: &[Self]) -> Self {
        let bytes: Vec<u8> = keys.iter().flat_map(|k| k.0.to_le_bytes()).collect();
        WideFingerprint(xxh3_128_with_seed(&bytes, FINGERPRINT_SEED))
    }

    fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.0.to_be_bytes());
    }

    fn read_from(bytes: &[u8]) -> Self {
        WideFingerprint(u128::from_be_bytes(bytes.try_into().expect("16 bytes")))
    }
}

/// First-occurrence set: remembers keys in insertion order.
#[derive(Clone, Debug)]
pub struct SeenSet<K> {
    members: HashSet<K>,
    order: Vec<K>,
}

impl<K: DedupKey> Default for SeenSet<K> {
    fn default() -> Self {
        SeenSet {
            members: HashSet::new(),
            order: Vec::new(),
        }
    }
}

impl<K: DedupKey> SeenSet<K> {
    /// Inserts `key`; true if it was not present before.
    pub fn insert(&mut self, key: K) -> bool {
        let fresh = self.members.insert(key);
        if fresh {
            self.order.push(key);
        }
        fresh
    }

    pub fn contains(&self, key: &K) -> bool {
        self.members.contains(key)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Keys in first-insertion order.
    pub fn insertion_order(&self) -> &[K] {
        &self.order
    }

    /// Approximate resident bytes per entry (hash slot plus order index).
    pub fn bytes_per_entry() -> usize {
        2 * K::BYTES + K::BYTES + 8
    }

    fn approx_bytes(&self) -> usize {
        self.len() * Self::bytes_per_entry()
    }

    fn drain_sorted(&mut self) -> Vec<K> {
        self.members.clear();
        let mut keys = std::mem::take(&mut self.order);
        keys.sort_unstable();
        keys
    }
}

/// Keeps the first occurrence of each sentence in the document, filling in
/// every sentence's 64-bit fingerprint. Returns the number removed.
pub fn dedup_within_document(doc: &mut Document, width: FingerprintWidth) -> usize {
    for s in &mut doc.sentences {
        if s.fingerprint.is_none() {
            s.fingerprint = Some(fingerprint(&s.text));
        }
    }
    let before = doc.sentences.len();
    match width {
        FingerprintWidth::Bits64 => {
            let mut seen = HashSet::new();
            doc.sentences
                .retain(|s| seen.insert(s.fingerprint.expect("filled above")));
        }
        FingerprintWidth::Bits128 => {
            let mut seen = HashSet::new();
            doc.sentences.retain(|s| seen.insert(wide_fingerprint(&s.text)));
        }
    }
    before - doc.sentences.len()
}

/// Content key of a whole document: the hash of its ordered sentence keys.
pub fn document_key<K: DedupKey>(sentences: &[&str]) -> K {
    let keys: Vec<K> = sentences.iter().map(|s| K::of_text(s)).collect();
    K::of_sequence(&keys)
}

/// Drops documents whose ordered sentence content was already admitted.
#[derive(Debug)]
pub enum DocumentDeduper {
    Narrow(SeenSet<Fingerprint>),
    Wide(SeenSet<WideFingerprint>),
}

impl DocumentDeduper {
    pub fn new(width: FingerprintWidth) -> Self {
        match width {
            FingerprintWidth::Bits64 => DocumentDeduper::Narrow(SeenSet::default()),
            FingerprintWidth::Bits128 => DocumentDeduper::Wide(SeenSet::default()),
        }
    }

    /// True if the document is the first with its content.
    pub fn admit(&mut self, doc: &Document) -> bool {
        let texts: Vec<&str> = doc.sentence_texts().collect();
        match self {
            DocumentDeduper::Narrow(seen) => seen.insert(document_key(&texts)),
            DocumentDeduper::Wide(seen) => seen.insert(document_key(&texts)),
        }
    }
}

/// Stream adapter over [`DocumentDeduper`].
pub fn dedup_documents<I>(docs: I, width: FingerprintWidth) -> impl Iterator<Item = Document>
where
    I: IntoIterator<Item = Document>,
{
    let mut deduper = DocumentDeduper::new(width);
    docs.into_iter().filter(move |d| deduper.admit(d))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupOptions {
    pub width: FingerprintWidth,
    /// Bytes the seen-set may occupy before it spills sorted runs to disk.
    pub mem_cap: u64,
    pub workers: usize,
    /// Where spilled runs go; the system temp dir when unset.
    pub spill_dir: Option<PathBuf>,
}

impl Default for DedupOptions {
    fn default() -> Self {
        DedupOptions {
            width: FingerprintWidth::Bits64,
            mem_cap: 4 << 30,
            workers: 1,
            spill_dir: None,
        }
    }
}

/// Removal statistics written as JSON next to the deduplicated corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupStats {
    pub stage: String,
    pub input_documents: u64,
    pub input_sentences: u64,
    pub removed_sentences: u64,
    pub removed_documents: u64,
    pub input_bytes: u64,
    pub output_bytes: u64,
    pub spilled_runs: u64,
}

/// Parses a byte size such as `4GiB`, `512MiB`, `64k` or `1000`.
pub fn parse_byte_size(s: &str) -> Result<u64> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let n: u64 = num
        .parse()
        .map_err(|_| Error::Config(format!("invalid byte size {s:?}")))?;
    let mult: u64 = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 1,
        "k" | "kb" | "kib" => 1 << 10,
        "m" | "mb" | "mib" => 1 << 20,
        "g" | "gb" | "gib" => 1 << 30,
        "t" | "tb" | "tib" => 1 << 40,
        _ => return Err(Error::Config(format!("invalid byte size unit in {s:?}"))),
    };
    n.checked_mul(mult)
        .ok_or_else(|| Error::Config(format!("byte size {s:?} overflows")))
}

/// Fingerprints of one shard, in document and sentence order.
struct ShardKeys<K> {
    doc_lengths: Vec<usize>,
    keys: Vec<K>,
    /// First occurrence within this shard; later copies can never be kept.
    local_first: Vec<bool>,
    bytes: u64,
}

fn read_shard_keys<K: DedupKey>(path: &Path) -> Result<ShardKeys<K>> {
    let shard_err = |e: Error| match e {
        Error::Io { path, source } => Error::ShardRead { path, source },
        Error::FileNotFound(path) => Error::ShardRead {
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            path,
        },
        other => other,
    };
    let bytes = std::fs::metadata(path)
        .map_err(|e| shard_err(Error::io(path, e)))?
        .len();
    let mut out = ShardKeys {
        doc_lengths: Vec::new(),
        keys: Vec::new(),
        local_first: Vec::new(),
        bytes,
    };
    let mut local = HashSet::new();
    for doc in DocumentReader::open(path).map_err(shard_err)? {
        let doc = doc.map_err(shard_err)?;
        out.doc_lengths.push(doc.len());
        for s in &doc {
            let k = K::of_text(s);
            out.keys.push(k);
            out.local_first.push(local.insert(k));
        }
    }
    Ok(out)
}

/// Seen-set that spills sorted runs of keys to disk once its in-memory part
/// passes the memory cap at a shard boundary. Queries are answered in batches by merge-joining
/// the sorted query keys against every run.
struct SpillingSeenSet<K: DedupKey> {
    memory: SeenSet<K>,
    runs: Vec<PathBuf>,
    mem_cap: u64,
    dir: tempfile::TempDir,
}

impl<K: DedupKey> SpillingSeenSet<K> {
    fn new(mem_cap: u64, spill_dir: Option<&Path>) -> Result<Self> {
        let dir = match spill_dir {
            Some(d) => tempfile::Builder::new()
                .prefix("dedup-spill")
                .tempdir_in(d)
                .map_err(|e| Error::io(d, e))?,
            None => tempfile::Builder::new()
                .prefix("dedup-spill")
                .tempdir()
                .map_err(|e| Error::io(std::env::temp_dir(), e))?,
        };
        Ok(SpillingSeenSet {
            memory: SeenSet::default(),
            runs: Vec::new(),
            mem_cap,
            dir,
        })
    }

    /// Marks which of `queries` are present in the spilled runs.
    fn in_runs(&self, queries: &[K]) -> Result<HashSet<K>> {
        let mut found = HashSet::new();
        if self.runs.is_empty() || queries.is_empty() {
            return Ok(found);
        }
        let mut sorted: Vec<K> = queries.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for run in &self.runs {
            let mut reader = BufReader::with_capacity(
                1 << 16,
                File::open(run).map_err(|e| Error::io(run, e))?,
            );
            let mut buf = vec![0u8; K::BYTES];
            let mut q = 0;
            while q < sorted.len() {
                match reader.read_exact(&mut buf) {
                    Ok(()) => {}
                    Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                    Err(e) => return Err(Error::io(run, e)),
                }
                let key = K::read_from(&buf);
                while q < sorted.len() && sorted[q] < key {
                    q += 1;
                }
                if q < sorted.len() && sorted[q] == key {
                    found.insert(key);
                    q += 1;
                }
            }
        }
        Ok(found)
    }

    fn spill_if_needed(&mut self) -> Result<()> {
        if (self.memory.approx_bytes() as u64) <= self.mem_cap {
            return Ok(());
        }
        let keys = self.memory.drain_sorted();
        let path = self.dir.path().join(format!("run-{:05}.bin", self.runs.len()));
        let mut out = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        let mut buf = Vec::with_capacity(K::BYTES);
        for k in keys {
            buf.clear();
            k.write_to(&mut buf);
            out.write_all(&buf).map_err(|e| Error::io(&path, e))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
        log::debug!("spilled seen-set run {}", path.display());
        self.runs.push(path);
        Ok(())
    }

    /// Decides keep/drop for one shard in order and records new keys.
    fn reconcile(&mut self, shard: &ShardKeys<K>) -> Result<Vec<bool>> {
        let candidates: Vec<K> = shard
            .keys
            .iter()
            .zip(&shard.local_first)
            .filter(|(k, first)| **first && !self.memory.contains(k))
            .map(|(k, _)| *k)
            .collect();
        let spilled = self.in_runs(&candidates)?;
        let mut keep = Vec::with_capacity(shard.keys.len());
        for (k, first) in shard.keys.iter().zip(&shard.local_first) {
            keep.push(*first && !spilled.contains(k) && self.memory.insert(*k));
        }
        // Spilling only between shards keeps the candidate pre-check above
        // valid for the whole shard.
        self.spill_if_needed()?;
        Ok(keep)
    }
}

fn write_shard(input: &Path, output: &Path, keep: &[bool]) -> Result<(u64, u64, u64, u64)> {
    let mut writer = DocumentWriter::create(output)?;
    let mut pos = 0;
    let mut removed_docs = 0;
    let mut input_docs = 0;
    for doc in DocumentReader::open(input)? {
        let doc = doc?;
        input_docs += 1;
        let kept: Vec<&String> = doc
            .iter()
            .zip(&keep[pos..pos + doc.len()])
            .filter(|(_, k)| **k)
            .map(|(s, _)| s)
            .collect();
        pos += doc.len();
        if kept.is_empty() {
            removed_docs += 1;
        }
        writer
            .write_document(&kept)
            .map_err(|e| Error::io(output, e))?;
    }
    let bytes = writer.bytes();
    writer.finish().map_err(|e| Error::io(output, e))?;
    Ok((input_docs, removed_docs, bytes, pos as u64))
}

/// Global first-occurrence sentence filter over the concatenation of
/// `shards` in the given order. Shard `i` is written to
/// `out_dir/part-{i:05}.txt`; documents left empty are removed.
///
/// Phase one fingerprints shards in parallel, phase two reconciles them
/// sequentially in concatenation order, and phase three writes the
/// surviving sentences in parallel. The output depends only on the input
/// bytes and the shard order.
pub fn global_dedup(shards: &[PathBuf], out_dir: &Path, opts: &DedupOptions) -> Result<DedupStats> {
    match opts.width {
        FingerprintWidth::Bits64 => global_dedup_with::<Fingerprint>(shards, out_dir, opts),
        FingerprintWidth::Bits128 => global_dedup_with::<WideFingerprint>(shards, out_dir, opts),
    }
}

fn global_dedup_with<K: DedupKey>(
    shards: &[PathBuf],
    out_dir: &Path,
    opts: &DedupOptions,
) -> Result<DedupStats> {
    use rayon::prelude::*;

    if opts.workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut seen = SpillingSeenSet::<K>::new(opts.mem_cap, opts.spill_dir.as_deref())?;
    let mut stats = DedupStats {
        stage: "global".into(),
        ..Default::default()
    };

    let indexed: Vec<(usize, &PathBuf)> = shards.iter().enumerate().collect();
    for batch in indexed.chunks(opts.workers) {
        let keyed: Vec<ShardKeys<K>> = pool.install(|| {
            batch
                .par_iter()
                .map(|(_, p)| read_shard_keys::<K>(p))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut masks = Vec::with_capacity(batch.len());
        for shard in &keyed {
            stats.input_sentences += shard.keys.len() as u64;
            stats.input_bytes += shard.bytes;
            let keep = seen.reconcile(shard)?;
            stats.removed_sentences += keep.iter().filter(|k| !**k).count() as u64;
            masks.push(keep);
        }
        let written: Vec<(u64, u64, u64, u64)> = pool.install(|| {
            batch
                .par_iter()
                .zip(masks.par_iter())
                .map(|((i, p), keep)| write_shard(p, &out_dir.join(shard_name(*i)), keep))
                .collect::<Result<Vec<_>>>()
        })?;
        for (shard, (docs, removed, bytes, sentences)) in keyed.iter().zip(written) {
            if sentences != shard.keys.len() as u64 || docs != shard.doc_lengths.len() as u64 {
                return Err(Error::Format {
                    path: out_dir.to_path_buf(),
                    msg: "shard changed while deduplicating".into(),
                });
            }
            stats.input_documents += docs;
            stats.removed_documents += removed;
            stats.output_bytes += bytes;
        }
    }
    stats.spilled_runs = seen.runs.len() as u64;
    Ok(stats)
}
