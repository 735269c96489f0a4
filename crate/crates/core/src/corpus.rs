//! The cleaned-corpus text format.
//!
//! UTF-8, one sentence per line, documents separated by exactly one blank
//! line, and every non-empty file ends with a newline. Shards are named
//! `part-00000.txt`, `part-00001.txt`, ... Readers tolerate runs of blank
//! lines and a missing final newline; writers always emit the canonical
//! form.

use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::ingest::open_text;
use crate::{Error, Result};

pub fn shard_name(index: usize) -> String {
    format!("part-{index:05}.txt")
}

/// Parses corpus text into documents of sentences.
pub fn parse_documents(text: &str) -> Vec<Vec<String>> {
    let mut docs = Vec::new();
    let mut current = Vec::new();
    for line in text.lines() {
        if line.is_empty() {
            if !current.is_empty() {
                docs.push(std::mem::take(&mut current));
            }
        } else {
            current.push(line.to_string());
        }
    }
    if !current.is_empty() {
        docs.push(current);
    }
    docs
}

/// Renders documents in canonical form. Empty documents are skipped.
pub fn render_documents<D, S>(docs: D) -> String
where
    D: IntoIterator,
    D::Item: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = String::new();
    for doc in docs {
        let mut first = true;
        for s in doc {
            if first && !out.is_empty() {
                out.push('\n');
            }
            first = false;
            out.push_str(s.as_ref());
            out.push('\n');
        }
    }
    out
}

/// Streams documents out of a corpus file without loading it whole.
pub struct DocumentReader {
    path: PathBuf,
    inner: Box<dyn BufRead + Send>,
    line: String,
}

impl DocumentReader {
    pub fn open(path: &Path) -> Result<Self> {
        Ok(DocumentReader {
            path: path.to_path_buf(),
            inner: open_text(path)?,
            line: String::new(),
        })
    }
}

impl Iterator for DocumentReader {
    type Item = Result<Vec<String>>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut doc = Vec::new();
        loop {
            self.line.clear();
            match self.inner.read_line(&mut self.line) {
                Ok(0) => return (!doc.is_empty()).then_some(Ok(doc)),
                Ok(_) => {}
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            }
            let line = self.line.trim_end_matches(['\n', '\r']);
            if line.is_empty() {
                if !doc.is_empty() {
                    return Some(Ok(doc));
                }
            } else {
                doc.push(line.to_string());
            }
        }
    }
}

/// Writes documents in canonical form.
pub struct DocumentWriter<W: Write> {
    out: W,
    docs: u64,
    sentences: u64,
    bytes: u64,
}

impl DocumentWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(DocumentWriter::new(BufWriter::with_capacity(1 << 16, file)))
    }
}

impl<W: Write> DocumentWriter<W> {
    pub fn new(out: W) -> Self {
        DocumentWriter {
            out,
            docs: 0,
            sentences: 0,
            bytes: 0,
        }
    }

    /// Writes one document; empty documents are ignored.
    pub fn write_document<S: AsRef<str>>(&mut self, sentences: &[S]) -> io::Result<()> {
        if sentences.is_empty() {
            return Ok(());
        }
        if self.docs > 0 {
            self.out.write_all(b"\n")?;
            self.bytes += 1;
        }
        for s in sentences {
            let s = s.as_ref();
            debug_assert!(!s.is_empty() && !s.contains('\n'));
            self.out.write_all(s.as_bytes())?;
            self.out.write_all(b"\n")?;
            self.bytes += s.len() as u64 + 1;
        }
        self.docs += 1;
        self.sentences += sentences.len() as u64;
        Ok(())
    }

    pub fn documents(&self) -> u64 {
        self.docs
    }

    pub fn sentences(&self) -> u64 {
        self.sentences
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Lists corpus shards: a file stands for itself, a directory contributes
/// its `*.txt` files sorted by name.
pub fn list_shards(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

/// Reads a shard order file: one path per line, relative paths resolved
/// against the file's directory, `#` comments allowed.
pub fn read_shard_list(list: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(list).map_err(|e| Error::io(list, e))?;
    let base = list.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = Path::new(l);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        })
        .collect())
}
