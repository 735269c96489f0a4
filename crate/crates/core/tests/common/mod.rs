//! Brute-force reference implementations shared by the integration tests.
//! They favor obviously-correct code over speed and share nothing with the
//! library beyond its data types.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use unicode_normalization::UnicodeNormalization;

use cribo_core::fixtures::{generate_planted_corpus, PlantedConfig};

#[derive(Debug, Deserialize)]
pub struct SegmentationCase {
    pub input: String,
    pub sentences: Vec<String>,
}

pub fn segmentation_cases() -> Vec<SegmentationCase> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/segmentation_es.json");
    let text = std::fs::read_to_string(&path).expect("fixture file");
    serde_json::from_str(&text).expect("fixture json")
}

/// Splits into pieces that start at each ASCII whitespace byte.
fn pieces(text: &[u8]) -> Vec<Vec<u8>> {
    let mut out: Vec<Vec<u8>> = Vec::new();
    for &b in text {
        if b.is_ascii_whitespace() || out.is_empty() {
            out.push(vec![b]);
        } else {
            out.last_mut().unwrap().push(b);
        }
    }
    out
}

/// Textbook BPE trainer. Every round recounts adjacent pairs over the full
/// stream of pieces and merges the winner everywhere: highest count, then
/// earliest position in the stream, then smallest byte expansions. A pair
/// whose bytes already form a token is skipped.
pub fn naive_bpe(texts: &[Vec<u8>], vocab_size: usize, min_frequency: u64) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut stream: Vec<Vec<Vec<u8>>> = texts
        .iter()
        .flat_map(|t| pieces(t))
        .map(|p| p.into_iter().map(|b| vec![b]).collect())
        .collect();
    let mut tokens: HashSet<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut merges = Vec::new();
    while 256 + merges.len() < vocab_size {
        let mut counts: HashMap<(&[u8], &[u8]), (u64, usize)> = HashMap::new();
        let mut pos = 0usize;
        for piece in &stream {
            for w in piece.windows(2) {
                let e = counts.entry((&w[0], &w[1])).or_insert((0, pos));
                e.0 += 1;
                pos += 1;
            }
            pos += 1;
        }
        let best = counts
            .iter()
            .filter(|((a, b), _)| !tokens.contains(&[*a, *b].concat()))
            .max_by(|(pa, (ca, fa)), (pb, (cb, fb))| {
                ca.cmp(cb).then(fb.cmp(fa)).then(pb.cmp(pa))
            })
            .map(|(&(a, b), &(c, _))| (a.to_vec(), b.to_vec(), c));
        let Some((a, b, count)) = best else { break };
        if count < min_frequency.max(1) {
            break;
        }
        let joined = [a.as_slice(), b.as_slice()].concat();
        for piece in &mut stream {
            let mut out = Vec::with_capacity(piece.len());
            let mut i = 0;
            while i < piece.len() {
                if i + 1 < piece.len() && piece[i] == a && piece[i + 1] == b {
                    out.push(joined.clone());
                    i += 2;
                } else {
                    out.push(piece[i].clone());
                    i += 1;
                }
            }
            *piece = out;
        }
        tokens.insert(joined);
        merges.push((a, b));
    }
    merges
}

/// A random corpus of at most `max_bytes` bytes: words built from a small
/// syllable inventory (some multibyte), long letter runs and mixed
/// whitespace, so ties, overlapping pairs and duplicate expansions all
/// occur.
pub fn random_bpe_corpus(rng: &mut ChaCha8Rng, max_bytes: usize) -> Vec<Vec<u8>> {
    const SYLLABLES: &[&str] = &[
        "a", "e", "la", "el", "ño", "qué", "ca", "sa", "ta", "ab", "ba", "aa", "xy", "ü", "日本", "😀",
    ];
    const SPACES: &[&str] = &[" ", " ", " ", "  ", "\n", "\t", " \n"];
    let target = rng.random_range(max_bytes / 20..=max_bytes);
    let size = rng.random_range(3..=SYLLABLES.len());
    let inventory: Vec<&str> = SYLLABLES
        .choose_multiple(rng, size)
        .copied()
        .collect();
    let lexicon: Vec<String> = (0..rng.random_range(5..60))
        .map(|_| {
            if rng.random_bool(0.1) {
                "a".repeat(rng.random_range(2..9))
            } else {
                let len = rng.random_range(1..5);
                (0..len)
                    .map(|_| *inventory.choose(rng).unwrap())
                    .collect()
            }
        })
        .collect();
    let mut texts = Vec::new();
    let mut total = 0;
    while total < target {
        let mut t = String::new();
        let words = rng.random_range(1..40);
        for _ in 0..words {
            if !t.is_empty() || rng.random_bool(0.2) {
                t.push_str(SPACES.choose(rng).unwrap());
            }
            t.push_str(lexicon.choose(rng).unwrap());
        }
        if total + t.len() > max_bytes {
            break;
        }
        total += t.len();
        texts.push(t.into_bytes());
    }
    texts
}

/// NFC, whitespace runs collapsed, outer whitespace trimmed.
pub fn oracle_normalize(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// First-occurrence filter over the concatenation of shards, rendered one
/// string per shard in the corpus text format.
pub fn brute_force_dedup(shards: &[Vec<Vec<String>>]) -> Vec<String> {
    let mut seen: HashSet<String> = HashSet::new();
    shards
        .iter()
        .map(|docs| {
            let mut blocks = Vec::new();
            for doc in docs {
                let kept: Vec<&String> = doc.iter().filter(|s| seen.insert(oracle_normalize(s))).collect();
                if !kept.is_empty() {
                    blocks.push(kept.iter().map(|s| format!("{s}\n")).collect::<String>());
                }
            }
            blocks.join("\n")
        })
        .collect()
}

/// Sentences of a planted corpus split into 1..=6 shards of whole
/// documents, with some sentences rewritten into forms that normalize to
/// the same text (decomposed accents, doubled spaces).
pub fn planted_shards(seed: u64) -> Vec<Vec<Vec<String>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = PlantedConfig {
        seed,
        documents: rng.random_range(1..=3000),
        duplicate_rate: rng.random_range(0.0..0.6),
        fault_rate: rng.random_range(0.0..0.3),
        document_duplicate_rate: rng.random_range(0.0..0.1),
        ..Default::default()
    };
    let corpus = generate_planted_corpus(&cfg).expect("valid config");
    let docs: Vec<Vec<String>> = corpus
        .ground_truth
        .documents
        .iter()
        .map(|d| {
            d.sentences
                .iter()
                .map(|s| match rng.random_range(0..20) {
                    0 => s.text.nfd().collect(),
                    1 => s.text.replacen(' ', "  ", 1),
                    _ => s.text.clone(),
                })
                .collect()
        })
        .collect();
    let n_shards = rng.random_range(1..=6);
    let n_docs = docs.len();
    let mut cuts: Vec<usize> = (0..n_shards - 1).map(|_| rng.random_range(0..=n_docs)).collect();
    cuts.sort_unstable();
    let mut shards = Vec::new();
    let mut start = 0;
    for c in cuts.into_iter().chain([docs.len()]) {
        shards.push(docs[start..c].to_vec());
        start = c;
    }
    shards
}
