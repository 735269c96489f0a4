//! Corpus-processing toolkit for building a clean, deduplicated web-crawl
//! text corpus and training the vocabulary and word vectors that sit on top
//! of it.
//!
//! The cleaning path is `ingest -> segment -> langid -> quality -> dedup`,
//! driven by [`pipeline::run_clean`]. Its output is a sharded plain-text
//! corpus (one sentence per line, blank line between documents) that
//! [`dedup::global_dedup`], [`bpe::train_bpe`] and
//! [`embeddings::train_embeddings`] consume.

pub mod bpe;
pub mod config;
pub mod corpus;
pub mod dedup;
pub mod embeddings;
mod error;
pub mod fixtures;
pub mod ingest;
pub mod langid;
pub mod pipeline;
pub mod quality;
pub mod segment;

pub use error::{Error, Result};
pub use ingest::{DocId, Document, FieldMask, RawRecord};
pub use quality::{FilterVerdict, QualityConfig, Reason};
pub use segment::Sentence;
