//! Byte-level BPE: training, encoding, decoding and the vocabulary file.
//!
//! Pre-tokenization places a boundary before every ASCII whitespace byte,
//! so a whitespace byte is the first byte of the piece that follows it:
//! `"hola  mundo"` becomes `"hola"`, `" "`, `" mundo"`. Merges never cross
//! piece boundaries.
//!
//! Training merges the most frequent adjacent pair. Ties go to the pair
//! whose first occurrence comes earliest in the corpus (scanning the
//! current segmentation front to back), then to the pair whose
//! `(left, right)` byte expansions sort first. A pair whose concatenated
//! bytes already exist as a token is never merged, which keeps byte
//! strings and ids in one-to-one correspondence.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const VOCAB_FORMAT_VERSION: u32 = 1;
const ALPHABET: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpeConfig {
    pub vocab_size: usize,
    /// Pairs seen fewer times than this are never merged.
    pub min_frequency: u64,
}

impl Default for BpeConfig {
    fn default() -> Self {
        BpeConfig {
            vocab_size: 32_000,
            min_frequency: 2,
        }
    }
}

/// Splits bytes into pre-tokens.
pub fn pretokenize(bytes: &[u8]) -> impl Iterator<Item = &[u8]> {
    let mut start = 0;
    std::iter::from_fn(move || {
        if start >= bytes.len() {
            return None;
        }
        let mut i = start + 1;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let piece = &bytes[start..i];
        start = i;
        Some(piece)
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpeVocab {
    merges: Vec<(u32, u32)>,
    expansions: Vec<Vec<u8>>,
    token_to_id: HashMap<Vec<u8>, u32>,
    ranks: HashMap<(u32, u32), u32>,
}

impl Default for BpeVocab {
    fn default() -> Self {
        Self::alphabet()
    }
}

impl BpeVocab {
    /// The 256-byte alphabet with no merges.
    pub fn alphabet() -> Self {
        let expansions: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        let token_to_id = expansions
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i as u32))
            .collect();
        BpeVocab {
            merges: Vec::new(),
            expansions,
            token_to_id,
            ranks: HashMap::new(),
        }
    }

    /// Builds a vocabulary from merges given as id pairs. Each pair must
    /// refer to existing ids and produce a new byte string.
    pub fn from_merges(merges: &[(u32, u32)]) -> std::result::Result<Self, String> {
        let mut v = Self::alphabet();
        for &(a, b) in merges {
            v.push_merge(a, b)?;
        }
        Ok(v)
    }

    fn push_merge(&mut self, a: u32, b: u32) -> std::result::Result<u32, String> {
        let n = self.expansions.len() as u32;
        if a >= n || b >= n {
            return Err(format!("merge ({a}, {b}) refers to an undefined id"));
        }
        let mut bytes = self.expansions[a as usize].clone();
        bytes.extend_from_slice(&self.expansions[b as usize]);
        if self.token_to_id.contains_key(&bytes) {
            return Err(format!("merge ({a}, {b}) duplicates token {:?}", escape_bytes(&bytes)));
        }
        self.ranks.insert((a, b), self.merges.len() as u32);
        self.merges.push((a, b));
        self.token_to_id.insert(bytes.clone(), n);
        self.expansions.push(bytes);
        Ok(n)
    }

    pub fn vocab_size(&self) -> usize {
        self.expansions.len()
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        self.expansions.get(id as usize).map(Vec::as_slice)
    }

    pub fn token_id(&self, bytes: &[u8]) -> Option<u32> {
        self.token_to_id.get(bytes).copied()
    }

    /// The same vocabulary with only its first `n` merges.
    pub fn truncated(&self, n: usize) -> Self {
        Self::from_merges(&self.merges[..n.min(self.merges.len())]).expect("prefix of a valid vocab")
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        self.encode_bytes(text.as_bytes())
    }

    pub fn encode_bytes(&self, bytes: &[u8]) -> Vec<u32> {
        let mut out = Vec::with_capacity(bytes.len() / 3 + 1);
        for piece in pretokenize(bytes) {
            self.encode_piece(piece, &mut out);
        }
        out
    }

    fn encode_piece(&self, piece: &[u8], out: &mut Vec<u32>) {
        let mut symbols: Vec<u32> = piece.iter().map(|&b| b as u32).collect();
        while symbols.len() > 1 {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0], w[1])).map(|&r| (r, (w[0], w[1]))))
                .min();
            let Some((rank, pair)) = best else { break };
            merge_symbols(&mut symbols, pair, ALPHABET as u32 + rank);
        }
        out.extend_from_slice(&symbols);
    }

    pub fn decode(&self, ids: &[u32]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for &id in ids {
            out.extend_from_slice(self.token_bytes(id).ok_or(Error::UnknownId(id))?);
        }
        Ok(out)
    }

    /// Decodes to text, replacing invalid UTF-8 sequences.
    pub fn decode_lossy(&self, ids: &[u32]) -> Result<String> {
        Ok(String::from_utf8_lossy(&self.decode(ids)?).into_owned())
    }

    pub fn to_json(&self) -> String {
        let file = VocabFile {
            version: VOCAB_FORMAT_VERSION,
            vocab_size: self.vocab_size(),
            merges: self
                .merges
                .iter()
                .map(|&(a, b)| {
                    [
                        escape_bytes(&self.expansions[a as usize]),
                        escape_bytes(&self.expansions[b as usize]),
                    ]
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("vocab serializes") + "\n"
    }

    pub fn from_json(json: &str, path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::Format {
            path: path.to_path_buf(),
            msg,
        };
        let file: VocabFile = serde_json::from_str(json).map_err(|e| bad(e.to_string()))?;
        if file.version != VOCAB_FORMAT_VERSION {
            return Err(bad(format!("unsupported vocab version {}", file.version)));
        }
        let mut v = Self::alphabet();
        for (i, [l, r]) in file.merges.iter().enumerate() {
            let lookup = |s: &str| -> Result<u32> {
                let bytes = unescape_bytes(s).map_err(|m| bad(format!("merge {i}: {m}")))?;
                v.token_id(&bytes)
                    .ok_or_else(|| bad(format!("merge {i}: unknown token {s:?}")))
            };
            let (a, b) = (lookup(l)?, lookup(r)?);
            v.push_merge(a, b).map_err(|m| bad(format!("merge {i}: {m}")))?;
        }
        if v.vocab_size() != file.vocab_size {
            return Err(bad(format!(
                "vocab_size {} does not match {} merges",
                file.vocab_size,
                file.merges.len()
            )));
        }
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabFile {
    version: u32,
    vocab_size: usize,
    merges: Vec<[String; 2]>,
}

/// Escapes bytes for the vocab file: printable UTF-8 stays as is, `\` is
/// doubled, everything else becomes `\xHH`.
pub fn escape_bytes(bytes: &[u8]) -> String {
    let mut out = String::new();
    for chunk in bytes.utf8_chunks() {
        for c in chunk.valid().chars() {
            match c {
                '\\' => out.push_str("\\\\"),
                c if c.is_control() => {
                    let mut buf = [0u8; 4];
                    for b in c.encode_utf8(&mut buf).bytes() {
                        out.push_str(&format!("\\x{b:02x}"));
                    }
                }
                c => out.push(c),
            }
        }
        for b in chunk.invalid() {
            out.push_str(&format!("\\x{b:02x}"));
        }
    }
    out
}

pub fn unescape_bytes(s: &str) -> std::result::Result<Vec<u8>, String> {
    let mut out = Vec::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            let mut buf = [0u8; 4];
            out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            continue;
        }
        match chars.next() {
            Some('\\') => out.push(b'\\'),
            Some('x') => {
                let hex: String = chars.by_ref().take(2).collect();
                let b = u8::from_str_radix(&hex, 16)
                    .ok()
                    .filter(|_| hex.len() == 2)
                    .ok_or_else(|| format!("bad escape \\x{hex}"))?;
                out.push(b);
            }
            other => return Err(format!("bad escape \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

/// Replaces non-overlapping occurrences of `pair`, left to right.
fn merge_symbols(symbols: &mut Vec<u32>, pair: (u32, u32), new_id: u32) {
    let mut w = 0;
    let mut r = 0;
    while r < symbols.len() {
        if r + 1 < symbols.len() && (symbols[r], symbols[r + 1]) == pair {
            symbols[w] = new_id;
            r += 2;
        } else {
            symbols[w] = symbols[r];
            r += 1;
        }
        w += 1;
    }
    symbols.truncate(w);
}

/// Distinct pre-tokens with their counts, ordered by first appearance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordCounts {
    pub words: Vec<(Vec<u8>, u64)>,
}

impl WordCounts {
    /// Counts the pre-tokens of a list of texts taken in order.
    pub fn from_texts<T: AsRef<[u8]> + Sync>(texts: &[T]) -> Self {
        let parts: Vec<PartCounts> = texts
            .par_iter()
            .enumerate()
            .flat_map_iter(|(ti, t)| {
                let t = t.as_ref();
                split_chunks(t, 1 << 20)
                    .into_iter()
                    .map(move |(off, chunk)| PartCounts::count(chunk, (ti, off)))
            })
            .collect();
        Self::combine(parts)
    }

    fn combine(parts: Vec<PartCounts>) -> Self {
        let mut all: HashMap<Vec<u8>, (u64, (usize, usize))> = HashMap::new();
        for part in parts {
            for (word, (n, pos)) in part.0 {
                let e = all.entry(word).or_insert((0, pos));
                e.0 += n;
                e.1 = e.1.min(pos);
            }
        }
        let mut words: Vec<(Vec<u8>, u64, (usize, usize))> =
            all.into_iter().map(|(w, (n, p))| (w, n, p)).collect();
        words.sort_by_key(|w| w.2);
        WordCounts {
            words: words.into_iter().map(|(w, n, _)| (w, n)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Total pre-token count.
    pub fn total(&self) -> u64 {
        self.words.iter().map(|w| w.1).sum()
    }
}

struct PartCounts(HashMap<Vec<u8>, (u64, (usize, usize))>);

impl PartCounts {
    fn count(chunk: &[u8], base: (usize, usize)) -> Self {
        let mut map: HashMap<Vec<u8>, (u64, (usize, usize))> = HashMap::new();
        let mut off = base.1;
        for piece in pretokenize(chunk) {
            match map.get_mut(piece) {
                Some(e) => e.0 += 1,
                None => {
                    map.insert(piece.to_vec(), (1, (base.0, off)));
                }
            }
            off += piece.len();
        }
        PartCounts(map)
    }
}

/// Cuts `text` into chunks of roughly `target` bytes, each starting at a
/// whitespace byte so pre-tokens never straddle two chunks.
fn split_chunks(text: &[u8], target: usize) -> Vec<(usize, &[u8])> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < text.len() {
        let mut end = (start + target).min(text.len());
        while end < text.len() && !text[end].is_ascii_whitespace() {
            end += 1;
        }
        out.push((start, &text[start..end]));
        start = end;
    }
    out
}

type Pair = (u32, u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Candidate {
    count: i64,
    first: (u32, u32),
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| Reverse(self.first).cmp(&Reverse(other.first)))
            .then_with(|| Reverse(self.pair).cmp(&Reverse(other.pair)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Trainer {
    vocab: BpeVocab,
    words: Vec<Vec<u32>>,
    freqs: Vec<i64>,
    counts: HashMap<Pair, i64>,
    /// For each pair, the words holding it and how many times.
    holders: HashMap<Pair, BTreeMap<u32, u32>>,
    heap: BinaryHeap<Candidate>,
    banned: HashSet<Pair>,
}

impl Trainer {
    fn new(wc: &WordCounts) -> Self {
        let mut t = Trainer {
            vocab: BpeVocab::alphabet(),
            words: wc.words.iter().map(|(w, _)| w.iter().map(|&b| b as u32).collect()).collect(),
            freqs: wc.words.iter().map(|w| w.1 as i64).collect(),
            counts: HashMap::new(),
            holders: HashMap::new(),
            heap: BinaryHeap::new(),
            banned: HashSet::new(),
        };
        for w in 0..t.words.len() {
            t.add_word_pairs(w as u32, None);
        }
        let pairs: Vec<Pair> = t.counts.keys().copied().collect();
        for p in pairs {
            if let Some(c) = t.candidate(p) {
                t.heap.push(c);
            }
        }
        t
    }

    fn add_word_pairs(&mut self, w: u32, mut touched: Option<&mut HashSet<Pair>>) {
        let f = self.freqs[w as usize];
        let word = &self.words[w as usize];
        for i in 0..word.len().saturating_sub(1) {
            let p = (word[i], word[i + 1]);
            *self.counts.entry(p).or_insert(0) += f;
            *self.holders.entry(p).or_default().entry(w).or_insert(0) += 1;
            if let Some(t) = touched.as_deref_mut() {
                t.insert(p);
            }
        }
    }

    fn remove_word_pairs(&mut self, w: u32) {
        let f = self.freqs[w as usize];
        let word = &self.words[w as usize];
        for i in 0..word.len().saturating_sub(1) {
            let p = (word[i], word[i + 1]);
            *self.counts.get_mut(&p).expect("counted pair") -= f;
            let holders = self.holders.get_mut(&p).expect("held pair");
            let n = holders.get_mut(&w).expect("held by word");
            *n -= 1;
            if *n == 0 {
                holders.remove(&w);
                if holders.is_empty() {
                    self.holders.remove(&p);
                    self.counts.remove(&p);
                }
            }
        }
    }

    /// The pair's current heap key, `None` when it no longer occurs.
    fn candidate(&self, pair: Pair) -> Option<Candidate> {
        let count = *self.counts.get(&pair)?;
        let (&w, _) = self.holders.get(&pair)?.iter().next()?;
        let word = &self.words[w as usize];
        let mut offset = 0u32;
        for i in 0..word.len() - 1 {
            if (word[i], word[i + 1]) == pair {
                break;
            }
            offset += self.vocab.expansions[word[i] as usize].len() as u32;
        }
        Some(Candidate {
            count,
            first: (w, offset),
            pair,
        })
    }

    fn next_merge(&mut self, min_frequency: u64) -> Option<Pair> {
        while let Some(top) = self.heap.pop() {
            if self.banned.contains(&top.pair) {
                continue;
            }
            let Some(current) = self.candidate(top.pair) else { continue };
            if current != top {
                self.heap.push(current);
                continue;
            }
            if (current.count as u64) < min_frequency.max(1) {
                return None;
            }
            // Among pairs with equal count and first occurrence the
            // lexicographic rule would decide, but no two pairs can share
            // a first occurrence.
            let (a, b) = current.pair;
            let mut bytes = self.vocab.expansions[a as usize].clone();
            bytes.extend_from_slice(&self.vocab.expansions[b as usize]);
            if self.vocab.token_to_id.contains_key(&bytes) {
                self.banned.insert(current.pair);
                continue;
            }
            return Some(current.pair);
        }
        None
    }

    fn apply(&mut self, pair: Pair) {
        let new_id = self.vocab.push_merge(pair.0, pair.1).expect("checked in next_merge");
        let affected: Vec<u32> = self.holders[&pair].keys().copied().collect();
        let mut touched = HashSet::new();
        for w in affected {
            self.remove_word_pairs(w);
            merge_symbols(&mut self.words[w as usize], pair, new_id);
            self.add_word_pairs(w, Some(&mut touched));
        }
        let mut fresh: Vec<Pair> = touched
            .into_iter()
            .filter(|p| p.0 == new_id || p.1 == new_id)
            .collect();
        fresh.sort_unstable();
        for p in fresh {
            if let Some(c) = self.candidate(p) {
                self.heap.push(c);
            }
        }
    }
}

/// Trains a vocabulary from pre-token counts.
pub fn train_bpe_counts(wc: &WordCounts, cfg: &BpeConfig) -> Result<BpeVocab> {
    if cfg.vocab_size < ALPHABET {
        return Err(Error::VocabTooSmall(cfg.vocab_size));
    }
    if wc.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut t = Trainer::new(wc);
    while t.vocab.vocab_size() < cfg.vocab_size {
        match t.next_merge(cfg.min_frequency) {
            Some(pair) => t.apply(pair),
            None => break,
        }
    }
    Ok(t.vocab)
}

/// Trains a vocabulary on in-memory texts taken in order.
pub fn train_bpe<T: AsRef<[u8]> + Sync>(texts: &[T], cfg: &BpeConfig) -> Result<BpeVocab> {
    train_bpe_counts(&WordCounts::from_texts(texts), cfg)
}

/// Trains on corpus files (or directories of `*.txt` shards) in order.
pub fn train_bpe_files(paths: &[PathBuf], cfg: &BpeConfig) -> Result<BpeVocab> {
    let mut files = Vec::new();
    for p in paths {
        if !p.exists() {
            return Err(Error::FileNotFound(p.clone()));
        }
        files.extend(crate::corpus::list_shards(p)?);
    }
    let texts = files
        .iter()
        .map(|f| std::fs::read(f).map_err(|e| Error::io(f, e)))
        .collect::<Result<Vec<_>>>()?;
    train_bpe(&texts, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(vocab_size: usize) -> BpeConfig {
        BpeConfig {
            vocab_size,
            min_frequency: 2,
        }
    }

    fn bytes_of(v: &BpeVocab, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .map(|&i| String::from_utf8_lossy(v.token_bytes(i).unwrap()).into_owned())
            .collect()
    }

    #[test]
    fn pretokenizer_attaches_whitespace_forward() {
        let pieces: Vec<&[u8]> = pretokenize(b"hola  mundo\nx").collect();
        assert_eq!(pieces, vec![&b"hola"[..], b" ", b" mundo", b"\nx"]);
        assert_eq!(pretokenize(b"").count(), 0);
        assert_eq!(pretokenize(b" a").collect::<Vec<_>>(), vec![&b" a"[..]]);
    }

    #[test]
    fn alphabet_only() {
        let v = train_bpe(&["aaabdaaabac"], &cfg(256)).unwrap();
        assert!(v.merges().is_empty());
        assert_eq!(v.encode("ab"), vec![97, 98]);
    }

    #[test]
    fn classic_example() {
        let v = train_bpe(&["aaabdaaabac"], &cfg(259)).unwrap();
        let named: Vec<(String, String)> = v
            .merges()
            .iter()
            .map(|&(a, b)| {
                let s = bytes_of(&v, &[a, b]);
                (s[0].clone(), s[1].clone())
            })
            .collect();
        let expect = [("a", "a"), ("aa", "a"), ("aaa", "b")];
        assert_eq!(
            named,
            expect.map(|(a, b)| (a.to_string(), b.to_string())).to_vec()
        );
        assert_eq!(
            bytes_of(&v, &v.encode("aaabdaaabac")),
            vec!["aaab", "d", "aaab", "a", "c"]
        );
        assert_eq!(v.vocab_size(), 259);
    }

    #[test]
    fn errors() {
        assert!(matches!(train_bpe(&["abc"], &cfg(100)), Err(Error::VocabTooSmall(100))));
        assert!(matches!(train_bpe::<&str>(&[], &cfg(300)), Err(Error::EmptyCorpus)));
        assert!(matches!(train_bpe(&[""], &cfg(300)), Err(Error::EmptyCorpus)));
        let v = BpeVocab::alphabet();
        assert!(matches!(v.decode(&[256]), Err(Error::UnknownId(256))));
    }

    #[test]
    fn stops_when_no_pair_repeats() {
        let v = train_bpe(&["abcdef"], &cfg(1000)).unwrap();
        assert!(v.merges().is_empty());
        let v = train_bpe(&["abab"], &cfg(1000)).unwrap();
        assert_eq!(v.merges().len(), 1);
    }

    #[test]
    fn empty_input_encodes_empty() {
        let v = train_bpe(&["la casa la casa"], &cfg(300)).unwrap();
        assert!(v.encode("").is_empty());
        assert_eq!(v.decode(&[]).unwrap(), b"");
    }

    #[test]
    fn file_roundtrip() {
        let v = train_bpe(&["el perro y el gato\\ comen \u{1} ñandú ñandú"], &cfg(290)).unwrap();
        let json = v.to_json();
        let back = BpeVocab::from_json(&json, Path::new("v.json")).unwrap();
        assert_eq!(back, v);
        assert!(json.contains("\"version\": 1"));
    }

    #[test]
    fn corrupt_files_rejected() {
        let p = Path::new("v.json");
        for bad in [
            "{}",
            r#"{"version":2,"vocab_size":256,"merges":[]}"#,
            r#"{"version":1,"vocab_size":257,"merges":[]}"#,
            r#"{"version":1,"vocab_size":257,"merges":[["ab","c"]]}"#,
            r#"{"version":1,"vocab_size":258,"merges":[["a","b"],["a","b"]]}"#,
            r#"{"version":1,"vocab_size":257,"merges":[["\\q","b"]]}"#,
        ] {
            assert!(matches!(BpeVocab::from_json(bad, p), Err(Error::Format { .. })), "{bad}");
        }
    }

    #[test]
    fn escaping() {
        let all: Vec<u8> = (0..=255).collect();
        assert_eq!(unescape_bytes(&escape_bytes(&all)).unwrap(), all);
        assert_eq!(escape_bytes(b"a\\b\n"), "a\\\\b\\x0a");
        assert_eq!(escape_bytes("ñ".as_bytes()), "ñ");
        assert_eq!(escape_bytes(&[0xc3]), "\\xc3");
    }

    #[test]
    fn chunked_counting_matches_whole() {
        let text = "uno dos tres\ncuatro  cinco uno dos\n".repeat(50);
        let whole = PartCounts::count(text.as_bytes(), (0, 0));
        let chunks = split_chunks(text.as_bytes(), 7);
        assert!(chunks.len() > 10);
        let parts = chunks
            .into_iter()
            .map(|(off, c)| PartCounts::count(c, (0, off)))
            .collect();
        assert_eq!(WordCounts::combine(parts), WordCounts::combine(vec![whole]));
    }

    #[test]
    fn no_duplicate_expansions() {
        // "ab"+"c" and "a"+"bc" would both spell "abc".
        let v = train_bpe(&["abc abc abc bc bc bc bc ab ab ab ab ab"], &cfg(400)).unwrap();
        let mut seen = HashSet::new();
        for id in 0..v.vocab_size() as u32 {
            assert!(seen.insert(v.token_bytes(id).unwrap().to_vec()));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn roundtrip_arbitrary_bytes(train in "[a-c ]{0,60}", input in proptest::collection::vec(any::<u8>(), 0..200)) {
                let v = train_bpe(&[format!("x{train}")], &cfg(300)).unwrap();
                prop_assert_eq!(v.decode(&v.encode_bytes(&input)).unwrap(), input);
            }

            #[test]
            fn more_merges_never_lengthen(train in "[a-d ]{1,120}") {
                let v = train_bpe(&[&train], &cfg(400)).unwrap();
                let mut prev = usize::MAX;
                for k in 0..=v.merges().len() {
                    let n = v.truncated(k).encode(&train).len();
                    prop_assert!(n <= prev);
                    prev = n;
                }
            }
        }
    }
}
