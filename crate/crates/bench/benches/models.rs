use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use cribo_bench::planted_sentences;
use cribo_core::bpe::{train_bpe, BpeConfig};
use cribo_core::embeddings::{build_vocab, EmbeddingModel, Example, Mode, TrainConfig};

fn bpe(c: &mut Criterion) {
    let sentences = planted_sentences(1500);
    let bytes: usize = sentences.iter().map(String::len).sum();
    let cfg = BpeConfig {
        vocab_size: 2000,
        min_frequency: 2,
    };
    let vocab = train_bpe(&sentences, &cfg).unwrap();
    let mut g = c.benchmark_group("bpe");
    g.throughput(Throughput::Bytes(bytes as u64));
    g.sample_size(10);
    g.bench_function("train_2000", |b| b.iter(|| train_bpe(black_box(&sentences), &cfg).unwrap()));
    g.bench_function("encode", |b| {
        b.iter(|| sentences.iter().map(|s| vocab.encode(black_box(s)).len()).sum::<usize>())
    });
    g.finish();
}

fn sgd(c: &mut Criterion) {
    let sentences = planted_sentences(300);
    let mut g = c.benchmark_group("embeddings");
    for mode in [Mode::Skipgram, Mode::Cbow] {
        let cfg = TrainConfig {
            mode,
            dim: 100,
            min_count: 1,
            buckets: 100_000,
            ..Default::default()
        };
        let vocab = build_vocab(&sentences, 1, cfg.t).unwrap();
        let n = vocab.len() as u32;
        let mut model = EmbeddingModel::<f32>::new(vocab, &cfg).unwrap();
        let inputs: Vec<u32> = match mode {
            Mode::Skipgram => vec![1],
            Mode::Cbow => (2..10).collect(),
        };
        let negatives: Vec<u32> = (0..5).map(|k| (k * 7 + 3) % n).collect();
        g.throughput(Throughput::Elements(1));
        g.bench_function(format!("step_{mode}"), |b| {
            b.iter(|| {
                let ex = Example {
                    inputs: &inputs,
                    target: 0,
                    negatives: &negatives,
                };
                model.step(black_box(&ex), 0.01)
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bpe, sgd);
criterion_main!(benches);
