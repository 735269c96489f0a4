//! CBOW and skip-gram word embeddings with hashed character n-grams and
//! negative sampling.
//!
//! A word's representation is the mean of its own input row and the input
//! rows of the buckets its n-grams hash to (n-grams are taken over the word
//! wrapped in `<` and `>`). Skip-gram predicts each context word from the
//! center word's representation; CBOW predicts the center word from the
//! mean of the context words' representations. Both minimize
//!
//! ```text
//! L = -log σ(u_o·h) - Σ_k log σ(-u_k·h)
//! ```
//!
//! over the target `o` and sampled negatives `k`, by plain SGD.

use std::cell::UnsafeCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_traits::Float;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cbow,
    #[default]
    Skipgram,
}

impl Mode {
    fn code(self) -> u8 {
        match self {
            Mode::Cbow => 0,
            Mode::Skipgram => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Mode::Cbow),
            1 => Some(Mode::Skipgram),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cbow => "cbow",
            Mode::Skipgram => "skipgram",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cbow" => Ok(Mode::Cbow),
            "skipgram" | "skip-gram" => Ok(Mode::Skipgram),
            _ => Err(Error::Config(format!("unknown embedding mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: Mode,
    pub dim: usize,
    pub window: usize,
    pub neg: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub min_n: usize,
    pub max_n: usize,
    /// Number of n-gram hash buckets; zero turns subwords off.
    pub buckets: usize,
    /// Subsampling threshold.
    pub t: f64,
    pub lr: f64,
    pub seed: u64,
    /// Training threads. More than one updates the shared vectors without
    /// synchronization, so results vary from run to run.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Skipgram,
            dim: 300,
            window: 5,
            neg: 5,
            epochs: 5,
            min_count: 5,
            min_n: 3,
            max_n: 6,
            buckets: 2_000_000,
            t: 1e-4,
            lr: 0.05,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.neg == 0 {
            return bad("neg must be at least 1");
        }
        if self.min_n == 0 || self.min_n > self.max_n {
            return bad("n-gram range must satisfy 1 <= min_n <= max_n");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(self.t > 0.0) {
            return bad("t must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }
}

/// Maximal runs of alphanumeric characters.
pub fn tokenize(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbVocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    /// Tokens of retained words.
    total: u64,
    pub min_count: u64,
    pub t: f64,
}

impl EmbVocab {
    fn from_counts(mut entries: Vec<(String, u64)>, min_count: u64, t: f64) -> Self {
        entries.retain(|e| e.1 >= min_count);
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i as u32))
            .collect();
        let total = entries.iter().map(|e| e.1).sum();
        let (words, counts) = entries.into_iter().unzip();
        EmbVocab {
            words,
            counts,
            index,
            total,
            min_count,
            t,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn total_tokens(&self) -> u64 {
        self.total
    }

    /// Probability of keeping one occurrence of `id` under subsampling.
    pub fn keep_probability(&self, id: u32) -> f64 {
        let f = self.count(id) as f64 / self.total as f64;
        ((self.t / f).sqrt() + self.t / f).min(1.0)
    }

    /// Word ids of a line, out-of-vocabulary tokens dropped.
    pub fn encode_line(&self, line: &str) -> Vec<u32> {
        tokenize(line).filter_map(|w| self.id(w)).collect()
    }
}

/// Counts tokens and keeps words seen at least `min_count` times. Ids are
/// assigned by descending count, then by word.
pub fn build_vocab<I, S>(lines: I, min_count: u64, t: f64) -> Result<EmbVocab>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut any = false;
    for line in lines {
        for w in tokenize(line.as_ref()) {
            any = true;
            match counts.get_mut(w) {
                Some(n) => *n += 1,
                None => {
                    counts.insert(w.to_string(), 1);
                }
            }
        }
    }
    if !any {
        return Err(Error::EmptyCorpus);
    }
    Ok(EmbVocab::from_counts(counts.into_iter().collect(), min_count, t))
}

/// 32-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Character n-grams of `<word>` with lengths in `min_n..=max_n`.
pub fn char_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for n in min_n..=max_n {
        for start in 0..wrapped.len().saturating_sub(n - 1) {
            out.push(wrapped[start..start + n].iter().collect());
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
struct Shape {
    dim: usize,
    mode: Mode,
    min_n: usize,
    max_n: usize,
    buckets: usize,
    vocab_len: usize,
}

impl Shape {
    fn bucket_rows(&self, word: &str) -> impl Iterator<Item = u32> + '_ {
        let grams = if self.buckets == 0 {
            Vec::new()
        } else {
            char_ngrams(word, self.min_n, self.max_n)
        };
        grams
            .into_iter()
            .map(move |g| (self.vocab_len + fnv1a(g.as_bytes()) as usize % self.buckets) as u32)
    }
}

/// One training example: the representations of `inputs` are averaged
/// (a single center word in skip-gram, the context words in CBOW) and used
/// to score `target` against `negatives`.
#[derive(Clone, Copy, Debug)]
pub struct Example<'a> {
    pub inputs: &'a [u32],
    pub target: u32,
    pub negatives: &'a [u32],
}

/// Sparse gradient of the example loss.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient<F> {
    pub input: BTreeMap<u32, Vec<F>>,
    pub output: BTreeMap<u32, Vec<F>>,
}

impl<F> Default for Gradient<F> {
    fn default() -> Self {
        Gradient {
            input: BTreeMap::new(),
            output: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel<F = f32> {
    shape: Shape,
    vocab: EmbVocab,
    /// Input rows of each vocabulary word: its own row, then its buckets.
    rows: Vec<Vec<u32>>,
    input: Vec<F>,
    output: Vec<F>,
}

fn sigmoid<F: Float>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// `-log σ(x)`, computed without overflow.
fn neg_log_sigmoid<F: Float>(x: F) -> F {
    if x > F::zero() {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

fn axpy<F: Float>(alpha: F, x: &[F], y: &mut [F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

#[derive(Default)]
struct Scratch<F> {
    weights: Vec<(u32, F)>,
    h: Vec<F>,
    grad_h: Vec<F>,
    coefs: Vec<(u32, F)>,
}

impl<F: Float> Scratch<F> {
    fn new(dim: usize) -> Self {
        Scratch {
            weights: Vec::new(),
            h: vec![F::zero(); dim],
            grad_h: vec![F::zero(); dim],
            coefs: Vec::new(),
        }
    }
}

/// Input rows of an example with their averaging weights.
fn input_weights<F: Float>(rows: &[Vec<u32>], inputs: &[u32], out: &mut Vec<(u32, F)>) {
    out.clear();
    let per_input = F::one() / F::from(inputs.len()).expect("small count");
    for &w in inputs {
        let r = &rows[w as usize];
        let weight = per_input / F::from(r.len()).expect("small count");
        out.extend(r.iter().map(|&row| (row, weight)));
    }
}

/// Loss of one example plus `dL/dh` (into `s.grad_h`) and the output
/// gradient coefficients (`dL/du_k = coef_k · h`, into `s.coefs`), all at
/// the current parameters.
fn forward_backward<F: Float>(dim: usize, output: &[F], ex: &Example<'_>, s: &mut Scratch<F>) -> F {
    s.grad_h.iter_mut().for_each(|g| *g = F::zero());
    s.coefs.clear();
    let mut loss = F::zero();
    let targets = std::iter::once((ex.target, true)).chain(ex.negatives.iter().map(|&n| (n, false)));
    for (row, positive) in targets {
        let u = &output[row as usize * dim..(row as usize + 1) * dim];
        let score = dot(u, &s.h);
        let (l, coef) = if positive {
            (neg_log_sigmoid(score), sigmoid(score) - F::one())
        } else {
            (neg_log_sigmoid(-score), sigmoid(score))
        };
        loss = loss + l;
        axpy(coef, u, &mut s.grad_h);
        s.coefs.push((row, coef));
    }
    loss
}

fn compose<F: Float>(dim: usize, input: &[F], weights: &[(u32, F)], h: &mut [F]) {
    h.iter_mut().for_each(|x| *x = F::zero());
    for &(row, w) in weights {
        axpy(w, &input[row as usize * dim..(row as usize + 1) * dim], h);
    }
}

/// One SGD step on `ex`; returns the loss before the update.
fn sgd_step<F: Float>(
    dim: usize,
    rows: &[Vec<u32>],
    input: &mut [F],
    output: &mut [F],
    ex: &Example<'_>,
    lr: F,
    s: &mut Scratch<F>,
) -> F {
    input_weights(rows, ex.inputs, &mut s.weights);
    compose(dim, input, &s.weights, &mut s.h);
    let loss = forward_backward(dim, output, ex, s);
    for &(row, coef) in &s.coefs {
        let u = &mut output[row as usize * dim..(row as usize + 1) * dim];
        axpy(-lr * coef, &s.h, u);
    }
    for &(row, w) in &s.weights {
        let v = &mut input[row as usize * dim..(row as usize + 1) * dim];
        axpy(-lr * w, &s.grad_h, v);
    }
    loss
}

impl<F: Float> EmbeddingModel<F> {
    /// A freshly initialized model: input rows uniform in
    /// `[-1/(2·dim), 1/(2·dim)]`, output rows zero.
    pub fn new(vocab: EmbVocab, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if vocab.is_empty() {
            return Err(Error::EmptyVocab);
        }
        let shape = Shape {
            dim: cfg.dim,
            mode: cfg.mode,
            min_n: cfg.min_n,
            max_n: cfg.max_n,
            buckets: cfg.buckets,
            vocab_len: vocab.len(),
        };
        let rows = word_rows(&shape, &vocab);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let bound = 1.0 / (2.0 * cfg.dim as f64);
        let input = (0..(vocab.len() + cfg.buckets) * cfg.dim)
            .map(|_| F::from(rng.random_range(-bound..=bound)).expect("finite"))
            .collect();
        let output = vec![F::zero(); vocab.len() * cfg.dim];
        Ok(EmbeddingModel {
            shape,
            vocab,
            rows,
            input,
            output,
        })
    }

    pub fn dim(&self) -> usize {
        self.shape.dim
    }

    pub fn mode(&self) -> Mode {
        self.shape.mode
    }

    pub fn buckets(&self) -> usize {
        self.shape.buckets
    }

    pub fn vocab(&self) -> &EmbVocab {
        &self.vocab
    }

    /// Input rows: vocabulary words first, then n-gram buckets.
    pub fn input_mut(&mut self) -> &mut [F] {
        &mut self.input
    }

    pub fn input(&self) -> &[F] {
        &self.input
    }

    pub fn output_mut(&mut self) -> &mut [F] {
        &mut self.output
    }

    pub fn output(&self) -> &[F] {
        &self.output
    }

    /// Input rows averaged into the representation of vocabulary word `id`.
    pub fn word_rows(&self, id: u32) -> &[u32] {
        &self.rows[id as usize]
    }

    pub fn loss(&self, ex: &Example<'_>) -> F {
        let mut s = Scratch::new(self.shape.dim);
        input_weights(&self.rows, ex.inputs, &mut s.weights);
        compose(self.shape.dim, &self.input, &s.weights, &mut s.h);
        forward_backward(self.shape.dim, &self.output, ex, &mut s)
    }

    /// Loss and exact gradient of one example.
    pub fn gradient(&self, ex: &Example<'_>) -> (F, Gradient<F>) {
        let dim = self.shape.dim;
        let mut s = Scratch::new(dim);
        input_weights(&self.rows, ex.inputs, &mut s.weights);
        compose(dim, &self.input, &s.weights, &mut s.h);
        let loss = forward_backward(dim, &self.output, ex, &mut s);
        let mut g = Gradient::default();
        for &(row, coef) in &s.coefs {
            let e = g.output.entry(row).or_insert_with(|| vec![F::zero(); dim]);
            axpy(coef, &s.h, e);
        }
        for &(row, w) in &s.weights {
            let e = g.input.entry(row).or_insert_with(|| vec![F::zero(); dim]);
            axpy(w, &s.grad_h, e);
        }
        (loss, g)
    }

    /// Applies one SGD step and returns the loss before it.
    pub fn step(&mut self, ex: &Example<'_>, lr: F) -> F {
        let mut s = Scratch::new(self.shape.dim);
        sgd_step(
            self.shape.dim,
            &self.rows,
            &mut self.input,
            &mut self.output,
            ex,
            lr,
            &mut s,
        )
    }

    fn mean_rows(&self, rows: impl Iterator<Item = u32>) -> Option<Vec<F>> {
        let dim = self.shape.dim;
        let mut v = vec![F::zero(); dim];
        let mut n = 0usize;
        for r in rows {
            axpy(F::one(), &self.input[r as usize * dim..(r as usize + 1) * dim], &mut v);
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let inv = F::one() / F::from(n).expect("small count");
        v.iter_mut().for_each(|x| *x = *x * inv);
        Some(v)
    }

    /// Vocabulary words: mean of the word row and its bucket rows.
    /// Other words: mean of their bucket rows.
    pub fn word_vector(&self, word: &str) -> Result<Vec<F>> {
        match self.vocab.id(word) {
            Some(id) => Ok(self.mean_rows(self.rows[id as usize].iter().copied()).expect("own row")),
            None => self
                .mean_rows(self.shape.bucket_rows(word))
                .ok_or_else(|| Error::NoNgrams(word.to_string())),
        }
    }
}

fn word_rows(shape: &Shape, vocab: &EmbVocab) -> Vec<Vec<u32>> {
    vocab
        .words()
        .iter()
        .enumerate()
        .map(|(i, w)| std::iter::once(i as u32).chain(shape.bucket_rows(w)).collect())
        .collect()
}

/// Per-epoch mean example loss.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub examples: u64,
}

/// Parameter buffers shared by hogwild workers.
struct SharedParams<F> {
    input: UnsafeCell<Vec<F>>,
    output: UnsafeCell<Vec<F>>,
}

// Workers write to the buffers without synchronization. Races only make
// individual updates stale or lost, which SGD tolerates; the buffers are
// never resized while shared.
unsafe impl<F: Send> Sync for SharedParams<F> {}

struct Sampler {
    negatives: WeightedIndex<f64>,
    keep: Vec<f64>,
    vocab_len: usize,
}

impl Sampler {
    fn new(vocab: &EmbVocab) -> Self {
        let weights = (0..vocab.len() as u32).map(|i| (vocab.count(i) as f64).powf(0.75));
        Sampler {
            negatives: WeightedIndex::new(weights).expect("positive counts"),
            keep: (0..vocab.len() as u32).map(|i| vocab.keep_probability(i)).collect(),
            vocab_len: vocab.len(),
        }
    }

    fn negatives(&self, rng: &mut ChaCha8Rng, target: u32, n: usize, out: &mut Vec<u32>) {
        out.clear();
        while out.len() < n {
            let k = self.negatives.sample(rng) as u32;
            if k != target || self.vocab_len == 1 {
                out.push(k);
            }
        }
    }
}

struct Schedule {
    lr: f64,
    total: u64,
    processed: AtomicU64,
}

impl Schedule {
    fn lr(&self) -> f64 {
        let done = self.processed.load(Ordering::Relaxed) as f64 / self.total.max(1) as f64;
        self.lr * (1.0 - done).max(1e-4)
    }
}

#[allow(clippy::too_many_arguments)]
fn train_shard(
    cfg: &TrainConfig,
    rows: &[Vec<u32>],
    input: &mut [f32],
    output: &mut [f32],
    sentences: &[Vec<u32>],
    sampler: &Sampler,
    schedule: &Schedule,
    rng: &mut ChaCha8Rng,
    epoch: usize,
) -> Result<(f64, u64)> {
    let mut s = Scratch::new(cfg.dim);
    let mut negs = Vec::with_capacity(cfg.neg);
    let mut kept = Vec::new();
    let mut context = Vec::with_capacity(2 * cfg.window);
    let mut loss_sum = 0f64;
    let mut examples = 0u64;
    for sentence in sentences {
        let lr = schedule.lr() as f32;
        kept.clear();
        kept.extend(
            sentence
                .iter()
                .copied()
                .filter(|&w| rng.random::<f64>() < sampler.keep[w as usize]),
        );
        for i in 0..kept.len() {
            let b = rng.random_range(1..=cfg.window);
            let lo = i.saturating_sub(b);
            let hi = (i + b + 1).min(kept.len());
            let center = kept[i];
            let mut run = |ex: Example<'_>| -> Result<()> {
                let loss = sgd_step(cfg.dim, rows, input, output, &ex, lr, &mut s) as f64;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        token: schedule.processed.load(Ordering::Relaxed),
                        loss,
                    });
                }
                loss_sum += loss;
                examples += 1;
                Ok(())
            };
            match cfg.mode {
                Mode::Skipgram => {
                    for j in (lo..hi).filter(|&j| j != i) {
                        sampler.negatives(rng, kept[j], cfg.neg, &mut negs);
                        run(Example {
                            inputs: std::slice::from_ref(&center),
                            target: kept[j],
                            negatives: &negs,
                        })?;
                    }
                }
                Mode::Cbow => {
                    context.clear();
                    context.extend((lo..hi).filter(|&j| j != i).map(|j| kept[j]));
                    if !context.is_empty() {
                        sampler.negatives(rng, center, cfg.neg, &mut negs);
                        run(Example {
                            inputs: &context,
                            target: center,
                            negatives: &negs,
                        })?;
                    }
                }
            }
        }
        schedule.processed.fetch_add(sentence.len() as u64, Ordering::Relaxed);
    }
    Ok((loss_sum, examples))
}

/// Trains on sentences of word ids. With one worker the result depends only
/// on the inputs and the seed.
pub fn train_on_ids(
    model: &mut EmbeddingModel<f32>,
    sentences: &[Vec<u32>],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    let sampler = Sampler::new(&model.vocab);
    let tokens: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let schedule = Schedule {
        lr: cfg.lr,
        total: tokens * cfg.epochs as u64,
        processed: AtomicU64::new(0),
    };
    let mut report = TrainReport::default();
    let workers = cfg.workers.min(sentences.len().max(1));
    let shared = SharedParams {
        input: UnsafeCell::new(std::mem::take(&mut model.input)),
        output: UnsafeCell::new(std::mem::take(&mut model.output)),
    };
    let mut rngs: Vec<ChaCha8Rng> = (0..workers)
        .map(|w| ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(w as u64 + 1))))
        .collect();
    let chunk = sentences.len().div_ceil(workers).max(1);
    let rows = &model.rows;

    let mut result = Ok(());
    for epoch in 0..cfg.epochs {
        let outcomes: Vec<Result<(f64, u64)>> = if workers == 1 {
            // SAFETY: no other reference to the buffers exists.
            let (input, output) = unsafe { (&mut *shared.input.get(), &mut *shared.output.get()) };
            vec![train_shard(cfg, rows, input, output, sentences, &sampler, &schedule, &mut rngs[0], epoch)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = sentences
                    .chunks(chunk)
                    .zip(rngs.iter_mut())
                    .map(|(part, rng)| {
                        let (shared, sampler, schedule) = (&shared, &sampler, &schedule);
                        scope.spawn(move || {
                            // SAFETY: see `SharedParams`; lengths never change.
                            let (input, output) =
                                unsafe { (&mut *shared.input.get(), &mut *shared.output.get()) };
                            train_shard(cfg, rows, input, output, part, sampler, schedule, rng, epoch)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
            })
        };
        let mut loss = 0.0;
        let mut n = 0;
        for o in outcomes {
            match o {
                Ok((l, c)) => {
                    loss += l;
                    n += c;
                }
                Err(e) => result = Err(e),
            }
        }
        if result.is_err() {
            break;
        }
        report.examples += n;
        report.epoch_losses.push(if n == 0 { 0.0 } else { loss / n as f64 });
        log::info!("epoch {} mean loss {:.5}", epoch + 1, report.epoch_losses[epoch]);
    }
    model.input = shared.input.into_inner();
    model.output = shared.output.into_inner();
    result.map(|_| report)
}

/// Builds the vocabulary from `lines`, then trains.
pub fn train_embeddings<S: AsRef<str>>(
    lines: &[S],
    cfg: &TrainConfig,
) -> Result<(EmbeddingModel<f32>, TrainReport)> {
    cfg.validate()?;
    let vocab = build_vocab(lines, cfg.min_count, cfg.t)?;
    let mut model = EmbeddingModel::new(vocab, cfg)?;
    let sentences: Vec<Vec<u32>> = lines
        .iter()
        .map(|l| model.vocab.encode_line(l.as_ref()))
        .filter(|s| !s.is_empty())
        .collect();
    let report = train_on_ids(&mut model, &sentences, cfg)?;
    Ok((model, report))
}

/// Non-blank lines of corpus files or shard directories, in order.
pub fn read_corpus_lines(paths: &[PathBuf]) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for p in paths {
        if !p.exists() {
            return Err(Error::FileNotFound(p.clone()));
        }
        for shard in crate::corpus::list_shards(p)? {
            let reader = crate::ingest::open_text(&shard)?;
            for line in reader.lines() {
                let line = line.map_err(|e| Error::io(&shard, e))?;
                if !line.trim().is_empty() {
                    lines.push(line);
                }
            }
        }
    }
    Ok(lines)
}

pub fn cosine(a: &[f32], b: &[f32]) -> f32 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Plain word vectors, as stored in the text format.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectors {
    pub dim: usize,
    pub words: Vec<String>,
    /// Row-major, one row per word.
    pub vectors: Vec<f32>,
}

impl WordVectors {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.words.iter().position(|w| w == word).map(|i| self.row(i))
    }

    /// The `k` rows most cosine-similar to `query`, skipping `exclude`.
    /// Descending similarity, ties by row index.
    pub fn nearest(&self, query: &[f32], exclude: Option<usize>, k: usize) -> Vec<(String, f32)> {
        let mut scored: Vec<(usize, f32)> = (0..self.len())
            .filter(|&i| Some(i) != exclude)
            .map(|i| (i, cosine(query, self.row(i))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        scored.into_iter().map(|(i, c)| (self.words[i].clone(), c)).collect()
    }

    /// Neighbors of a word present in the table.
    pub fn nearest_neighbors(&self, word: &str, k: usize) -> Result<Vec<(String, f32)>> {
        check_k(k)?;
        let i = self
            .words
            .iter()
            .position(|w| w == word)
            .ok_or_else(|| Error::NoNgrams(word.to_string()))?;
        Ok(self.nearest(&self.row(i).to_vec(), Some(i), k))
    }

    /// Writes `<count> <dim>` then one `<word> <v1> ... <vdim>` line per
    /// word.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, w) in self.words.iter().enumerate() {
            out.write_all(w.as_bytes())?;
            for x in self.row(i) {
                write!(out, " {x}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save_text(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_text(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load_text(path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::Format {
            path: path.to_path_buf(),
            msg,
        };
        let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .map_err(|e| Error::io(path, e))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        let [count, dim] = nums[..] else {
            return Err(bad(format!("bad header {header:?}")));
        };
        let mut words = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count * dim);
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            let before = vectors.len();
            for p in parts {
                vectors.push(p.parse::<f32>().map_err(|_| bad(format!("line {}: bad value {p:?}", n + 2)))?);
            }
            if word.is_empty() || vectors.len() - before != dim {
                return Err(bad(format!("line {}: expected a word and {dim} values", n + 2)));
            }
            words.push(word.to_string());
        }
        if words.len() != count {
            return Err(bad(format!("header says {count} words, found {}", words.len())));
        }
        Ok(WordVectors { dim, words, vectors })
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::Config("k must be at least 1".into()))
    } else {
        Ok(())
    }
}

const BINARY_MAGIC: &[u8; 8] = b"CRIBOEMB";
const BINARY_VERSION: u32 = 1;

impl EmbeddingModel<f32> {
    pub fn to_word_vectors(&self) -> WordVectors {
        let mut vectors = Vec::with_capacity(self.vocab.len() * self.shape.dim);
        for w in self.vocab.words() {
            vectors.extend(self.word_vector(w).expect("vocabulary word"));
        }
        WordVectors {
            dim: self.shape.dim,
            words: self.vocab.words().to_vec(),
            vectors,
        }
    }

    /// Top-`k` vocabulary words by cosine similarity to `word`, which may be
    /// out of vocabulary. The word itself is never returned.
    pub fn nearest_neighbors(&self, word: &str, k: usize) -> Result<Vec<(String, f32)>> {
        check_k(k)?;
        let query = self.word_vector(word)?;
        let exclude = self.vocab.id(word).map(|i| i as usize);
        Ok(self.to_word_vectors().nearest(&query, exclude, k))
    }

    /// Writes the full model (vocabulary, input and output tables) in a
    /// little-endian binary format.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let s = &self.shape;
        out.write_all(BINARY_MAGIC)?;
        out.write_u32::<LittleEndian>(BINARY_VERSION)?;
        out.write_u8(s.mode.code())?;
        for v in [s.dim, s.min_n, s.max_n, s.buckets, self.vocab.len()] {
            out.write_u64::<LittleEndian>(v as u64)?;
        }
        out.write_u64::<LittleEndian>(self.vocab.min_count)?;
        out.write_f64::<LittleEndian>(self.vocab.t)?;
        for (w, &c) in self.vocab.words.iter().zip(&self.vocab.counts) {
            out.write_u32::<LittleEndian>(w.len() as u32)?;
            out.write_all(w.as_bytes())?;
            out.write_u64::<LittleEndian>(c)?;
        }
        for &x in self.input.iter().chain(&self.output) {
            out.write_f32::<LittleEndian>(x)?;
        }
        out.flush()
    }

    pub fn read_binary<R: Read>(mut r: R, path: &Path) -> Result<Self> {
        let bad = |msg: &str| Error::Format {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        };
        let io = |e: std::io::Error| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                bad("truncated model file")
            } else {
                Error::io(path, e)
            }
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != BINARY_MAGIC {
            return Err(bad("not a model file"));
        }
        if r.read_u32::<LittleEndian>().map_err(io)? != BINARY_VERSION {
            return Err(bad("unsupported model version"));
        }
        let mode = Mode::from_code(r.read_u8().map_err(io)?).ok_or_else(|| bad("bad mode"))?;
        let mut dims = [0usize; 5];
        for d in &mut dims {
            *d = r.read_u64::<LittleEndian>().map_err(io)? as usize;
        }
        let [dim, min_n, max_n, buckets, vocab_len] = dims;
        let min_count = r.read_u64::<LittleEndian>().map_err(io)?;
        let t = r.read_f64::<LittleEndian>().map_err(io)?;
        let mut entries = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            let len = r.read_u32::<LittleEndian>().map_err(io)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(io)?;
            let w = String::from_utf8(buf).map_err(|_| bad("word is not UTF-8"))?;
            entries.push((w, r.read_u64::<LittleEndian>().map_err(io)?));
        }
        let vocab = EmbVocab::from_counts(entries.clone(), min_count, t);
        if vocab.words().iter().zip(&entries).any(|(a, b)| *a != b.0) || vocab.len() != vocab_len {
            return Err(bad("vocabulary is not in canonical order"));
        }
        let shape = Shape {
            dim,
            mode,
            min_n,
            max_n,
            buckets,
            vocab_len,
        };
        let mut read_floats = |n: usize| -> Result<Vec<f32>> {
            let mut v = vec![0f32; n];
            r.read_f32_into::<LittleEndian>(&mut v).map_err(io)?;
            Ok(v)
        };
        let input = read_floats((vocab_len + buckets) * dim)?;
        let output = read_floats(vocab_len * dim)?;
        let rows = word_rows(&shape, &vocab);
        Ok(EmbeddingModel {
            shape,
            vocab,
            rows,
            input,
            output,
        })
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_binary(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_binary(BufReader::new(file), path)
    }
}

/// Path of the binary sidecar that accompanies a text vector file.
pub fn sidecar_path(text_path: &Path) -> PathBuf {
    text_path.with_extension("bin")
}
