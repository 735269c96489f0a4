//! Reading crawl-extraction records from JSON-lines files.
//!
//! Each line holds one object with a `url`, an optional `timestamp` and four
//! lists of extracted text: `paragraphs`, `headers`, `keywords` and
//! `link_texts`. Missing lists default to empty, unknown fields are ignored
//! and a missing or empty `url` is an error. Files ending in `.gz` are
//! decompressed transparently.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_128;

use crate::segment::Sentence;
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default)]
    pub paragraphs: Vec<String>,
    #[serde(default)]
    pub headers: Vec<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub link_texts: Vec<String>,
}

impl RawRecord {
    /// Parses one JSON line. The caller supplies provenance for errors.
    pub fn from_json_line(line: &str, path: &Path, line_no: u64) -> Result<Self> {
        let rec: RawRecord = serde_json::from_str(line).map_err(|e| Error::MalformedJson {
            path: path.to_path_buf(),
            line: line_no,
            msg: e.to_string(),
        })?;
        if rec.url.is_empty() {
            return Err(Error::MalformedJson {
                path: path.to_path_buf(),
                line: line_no,
                msg: "empty url".into(),
            });
        }
        Ok(rec)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }
}

/// Selects which extracted text lists feed a [`Document`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMask {
    pub headers: bool,
    pub paragraphs: bool,
    pub keywords: bool,
    pub link_texts: bool,
}

impl Default for FieldMask {
    fn default() -> Self {
        FieldMask {
            headers: true,
            paragraphs: true,
            keywords: false,
            link_texts: false,
        }
    }
}

impl FieldMask {
    pub const ALL: FieldMask = FieldMask {
        headers: true,
        paragraphs: true,
        keywords: true,
        link_texts: true,
    };

    pub const PARAGRAPHS: FieldMask = FieldMask {
        headers: false,
        paragraphs: true,
        keywords: false,
        link_texts: false,
    };

    /// Parses a comma-separated field list such as `headers,paragraphs`.
    pub fn parse(list: &str) -> Result<Self> {
        let mut mask = FieldMask {
            headers: false,
            paragraphs: false,
            keywords: false,
            link_texts: false,
        };
        for field in list.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            match field {
                "headers" => mask.headers = true,
                "paragraphs" => mask.paragraphs = true,
                "keywords" => mask.keywords = true,
                "link_texts" | "links" => mask.link_texts = true,
                "all" => mask = FieldMask::ALL,
                other => return Err(Error::Config(format!("unknown text field {other:?}"))),
            }
        }
        Ok(mask)
    }
}

/// Stable 128-bit document identity derived from `(url, timestamp)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DocId(pub u128);

impl DocId {
    pub fn new(url: &str, timestamp: Option<&str>) -> Self {
        let mut key = Vec::with_capacity(url.len() + 1 + timestamp.map_or(0, str::len));
        key.extend_from_slice(url.as_bytes());
        // NUL cannot occur in a URL, so the split point is unambiguous.
        key.push(0);
        if let Some(ts) = timestamp {
            key.extend_from_slice(ts.as_bytes());
        }
        DocId(xxh3_128(&key))
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub doc_id: DocId,
    pub source_url: String,
    pub text_blocks: Vec<String>,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn sentence_texts(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(|s| s.text.as_str())
    }
}

/// Builds a document from the selected fields, in the fixed order
/// headers, paragraphs, keywords, link texts.
pub fn assemble_document(rec: &RawRecord, mask: FieldMask) -> Document {
    let selected = [
        (mask.headers, &rec.headers),
        (mask.paragraphs, &rec.paragraphs),
        (mask.keywords, &rec.keywords),
        (mask.link_texts, &rec.link_texts),
    ];
    let text_blocks = selected
        .into_iter()
        .filter(|(on, _)| *on)
        .flat_map(|(_, blocks)| blocks.iter())
        .map(|b| b.trim())
        .filter(|b| !b.is_empty())
        .map(str::to_owned)
        .collect();
    Document {
        doc_id: DocId::new(&rec.url, rec.timestamp.as_deref()),
        source_url: rec.url.clone(),
        text_blocks,
        sentences: Vec::new(),
    }
}

/// Opens a file for buffered reading, decompressing `.gz` files.
pub fn open_text(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|ext| ext == "gz") {
        Ok(Box::new(BufReader::with_capacity(
            1 << 16,
            MultiGzDecoder::new(file),
        )))
    } else {
        Ok(Box::new(BufReader::with_capacity(1 << 16, file)))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// Malformed lines are reported and skipped.
    #[default]
    Lenient,
    /// The first malformed line ends the stream.
    Strict,
}

/// Streaming JSON-lines reader. Yields `(line_no, record)` pairs with
/// 1-based line numbers; blank lines are skipped silently.
pub struct JsonlReader {
    path: PathBuf,
    inner: Box<dyn BufRead + Send>,
    buf: Vec<u8>,
    line_no: u64,
    mode: ParseMode,
    done: bool,
}

pub fn read_jsonl(path: &Path, mode: ParseMode) -> Result<JsonlReader> {
    Ok(JsonlReader {
        path: path.to_path_buf(),
        inner: open_text(path)?,
        buf: Vec::new(),
        line_no: 0,
        mode,
        done: false,
    })
}

impl JsonlReader {
    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Iterator for JsonlReader {
    type Item = Result<(u64, RawRecord)>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.inner.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::io(&self.path, e)));
                }
            }
            self.line_no += 1;
            let line = match std::str::from_utf8(&self.buf) {
                Ok(s) => s,
                Err(_) => {
                    self.done = self.mode == ParseMode::Strict;
                    return Some(Err(Error::InvalidUtf8 {
                        path: self.path.clone(),
                        line: self.line_no,
                    }));
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let res = RawRecord::from_json_line(line, &self.path, self.line_no);
            if res.is_err() && self.mode == ParseMode::Strict {
                self.done = true;
            }
            return Some(res.map(|r| (self.line_no, r)));
        }
        None
    }
}
