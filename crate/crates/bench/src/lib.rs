//! Shared inputs for the benchmarks.

use cribo_core::fixtures::{generate_planted_corpus, PlantedConfig};

/// Sentences of a planted corpus with default fault and duplicate rates.
pub fn planted_sentences(documents: usize) -> Vec<String> {
    let corpus = generate_planted_corpus(&PlantedConfig {
        seed: 11,
        documents,
        ..Default::default()
    })
    .expect("valid config");
    corpus.ground_truth.sentences().map(|s| s.text.clone()).collect()
}

/// The same sentences grouped into paragraphs of five.
pub fn planted_paragraphs(documents: usize) -> Vec<String> {
    planted_sentences(documents)
        .chunks(5)
        .map(|c| c.join(" "))
        .collect()
}
