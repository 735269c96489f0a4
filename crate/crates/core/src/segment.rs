//! Rule-based sentence splitting tuned for Spanish.
//!
//! A boundary is placed after a run of terminal punctuation (`.`, `!`, `?`,
//! `…`), plus any closing quotes or brackets, when it is followed by a space
//! and a sentence starter: an uppercase letter, a digit, `¿`, `¡`, or an
//! opening quote or bracket in front of one of those. A lone period does not
//! end a sentence when it closes a listed abbreviation, a single-letter
//! initial, or a list number at the start of a block. Two consecutive
//! newlines always end a sentence; single newlines are plain whitespace.

use std::path::Path;

use crate::dedup::Fingerprint;
use crate::langid::LangLabel;
use crate::quality::FilterVerdict;
use crate::{Document, Error, Result};

const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations.es.txt");

#[derive(Clone, Debug, PartialEq)]
pub struct Sentence {
    pub text: String,
    pub byte_len: usize,
    pub fingerprint: Option<Fingerprint>,
    pub lang: Option<LangLabel>,
    pub verdict: Option<FilterVerdict>,
}

impl Sentence {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        Sentence {
            byte_len: text.len(),
            text,
            fingerprint: None,
            lang: None,
            verdict: None,
        }
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '»' | '”' | '’' | ')' | ']')
}

fn is_opener(c: char) -> bool {
    matches!(c, '«' | '"' | '“' | '\'' | '‘' | '(' | '[')
}

fn is_starter(c: char) -> bool {
    c.is_uppercase() || c.is_numeric() || c == '¿' || c == '¡'
}

fn lower(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

#[derive(Clone, Debug)]
pub struct Segmenter {
    /// Lowercased abbreviations, one char vector per entry.
    abbreviations: Vec<Vec<char>>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Segmenter::from_list(DEFAULT_ABBREVIATIONS)
    }
}

impl Segmenter {
    /// Builds a segmenter from list-file text: one abbreviation per line,
    /// `#` starts a comment.
    pub fn from_list(list: &str) -> Self {
        let mut abbreviations: Vec<Vec<char>> = list
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| l.contains('.'))
            .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
            .map(|l| l.chars().map(lower).collect())
            .collect();
        abbreviations.sort();
        abbreviations.dedup();
        Segmenter { abbreviations }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let list = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Segmenter::from_list(&list))
    }

    pub fn abbreviation_count(&self) -> usize {
        self.abbreviations.len()
    }

    pub fn split_sentences(&self, text: &str) -> Vec<Sentence> {
        let mut out = Vec::new();
        for chunk in hard_chunks(text) {
            self.split_chunk(&chunk, &mut out);
        }
        out
    }

    pub fn segment_document(&self, mut doc: Document) -> Document {
        doc.sentences = doc
            .text_blocks
            .iter()
            .flat_map(|b| self.split_sentences(b))
            .collect();
        doc
    }

    fn split_chunk(&self, chunk: &[char], out: &mut Vec<Sentence>) {
        let n = chunk.len();
        let mut start = 0;
        let mut i = 0;
        while i < n {
            if !is_terminal(chunk[i]) {
                i += 1;
                continue;
            }
            let run_start = i;
            let mut end = i;
            while end < n && is_terminal(chunk[end]) {
                end += 1;
            }
            let run_len = end - run_start;
            while end < n && is_closer(chunk[end]) {
                end += 1;
            }
            i = end;
            if end + 1 >= n || chunk[end] != ' ' {
                continue;
            }
            let next = chunk[end + 1];
            let starts = is_starter(next)
                || (is_opener(next) && end + 2 < n && is_starter(chunk[end + 2]));
            if !starts {
                continue;
            }
            if run_len == 1 && chunk[run_start] == '.' && self.period_is_internal(chunk, run_start) {
                continue;
            }
            out.push(Sentence::new(chunk[start..end].iter().collect::<String>()));
            start = end + 1;
        }
        if start < n {
            out.push(Sentence::new(chunk[start..].iter().collect::<String>()));
        }
    }

    /// True when the period at `dot` belongs to an abbreviation, an initial
    /// or a leading list number.
    fn period_is_internal(&self, chunk: &[char], dot: usize) -> bool {
        let token_start = chunk[..dot]
            .iter()
            .rposition(|&c| c == ' ')
            .map_or(0, |p| p + 1);
        let token = &chunk[token_start..dot];
        let token = match token.iter().position(|&c| !is_opener(c)) {
            Some(p) => &token[p..],
            None => token,
        };
        if token.len() == 1 && token[0].is_alphabetic() && token[0].is_uppercase() {
            return true;
        }
        if token_start == 0 && !token.is_empty() && token.iter().all(|c| c.is_ascii_digit()) {
            return true;
        }
        self.abbreviations.iter().any(|abbr| {
            abbr.iter().enumerate().any(|(k, &c)| {
                if c != '.' || k > dot {
                    return false;
                }
                let from = dot - k;
                let to = from + abbr.len();
                to <= chunk.len()
                    && (from == 0 || chunk[from - 1] == ' ' || is_opener(chunk[from - 1]))
                    && chunk[from..to].iter().zip(abbr).all(|(&a, &b)| lower(a) == b)
            })
        })
    }
}

/// Splits at blank lines and collapses all remaining whitespace runs to a
/// single space.
fn hard_chunks(text: &str) -> Vec<Vec<char>> {
    let mut chunks = Vec::new();
    let mut current: Vec<char> = Vec::new();
    for line in text.split('\n') {
        if line.trim().is_empty() {
            if !current.is_empty() {
                chunks.push(std::mem::take(&mut current));
            }
            continue;
        }
        for word in line.split_whitespace() {
            if !current.is_empty() {
                current.push(' ');
            }
            current.extend(word.chars());
        }
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

/// Splits with the built-in abbreviation list.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    Segmenter::default().split_sentences(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::DocId;

    fn texts(s: &str) -> Vec<String> {
        split_sentences(s).into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn basic_question() {
        assert_eq!(texts("Hola. ¿Qué tal?"), vec!["Hola.", "¿Qué tal?"]);
    }

    #[test]
    fn title_abbreviation() {
        assert_eq!(texts("El Sr. García llegó."), vec!["El Sr. García llegó."]);
    }

    #[test]
    fn empty_and_blank() {
        assert!(texts("").is_empty());
        assert!(texts("   \n\n  \t").is_empty());
    }

    #[test]
    fn byte_len_matches() {
        for s in split_sentences("Año nuevo. ¡Ñandú! Él vino.") {
            assert_eq!(s.byte_len, s.text.len());
        }
    }

    #[test]
    fn newlines() {
        assert_eq!(texts("una frase\npartida en dos."), vec!["una frase partida en dos."]);
        assert_eq!(texts("Sin punto\n\nOtra línea"), vec!["Sin punto", "Otra línea"]);
        assert_eq!(texts("Sin punto\n  \nOtra línea"), vec!["Sin punto", "Otra línea"]);
    }

    #[test]
    fn lowercase_continuation_is_not_a_boundary() {
        assert_eq!(texts("¿Vienes? preguntó ella."), vec!["¿Vienes? preguntó ella."]);
        assert_eq!(texts("Pues... no sé."), vec!["Pues... no sé."]);
    }

    #[test]
    fn multiword_abbreviation() {
        assert_eq!(
            texts("Viajó a EE. UU. el lunes. Volvió pronto."),
            vec!["Viajó a EE. UU. el lunes.", "Volvió pronto."]
        );
        assert_eq!(
            texts("Vive en EE. UU. Trabaja allí."),
            vec!["Vive en EE. UU. Trabaja allí."]
        );
    }

    #[test]
    fn custom_list_overrides_default() {
        let seg = Segmenter::from_list("# only one\nSr.\n");
        assert_eq!(seg.abbreviation_count(), 1);
        let t: Vec<_> = seg
            .split_sentences("Vino el Dr. Pérez.")
            .into_iter()
            .map(|s| s.text)
            .collect();
        assert_eq!(t, vec!["Vino el Dr.", "Pérez."]);
    }

    #[test]
    fn segment_document_respects_blocks() {
        let doc = Document {
            doc_id: DocId(1),
            source_url: "u".into(),
            text_blocks: vec!["A.".into(), "B.".into()],
            sentences: vec![],
        };
        let doc = Segmenter::default().segment_document(doc);
        assert_eq!(doc.sentence_texts().collect::<Vec<_>>(), vec!["A.", "B."]);

        let doc = Document {
            doc_id: DocId(1),
            source_url: "u".into(),
            text_blocks: vec!["Uno va. Dos van. Tres van.".into()],
            sentences: vec![],
        };
        let doc = Segmenter::default().segment_document(doc);
        assert_eq!(
            doc.sentence_texts().collect::<Vec<_>>(),
            vec!["Uno va.", "Dos van.", "Tres van."]
        );

        let empty = Document {
            doc_id: DocId(1),
            source_url: "u".into(),
            text_blocks: vec![],
            sentences: vec![],
        };
        assert!(Segmenter::default().segment_document(empty).sentences.is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn token() -> impl Strategy<Value = String> {
            prop_oneof![
                "[a-zñáéí]{1,8}",
                "[A-ZÑÁ][a-zé]{0,6}",
                "[0-9]{1,4}",
                Just("Sr.".to_string()),
                Just("EE.".to_string()),
                Just("UU.".to_string()),
                Just("3.14".to_string()),
                Just("¿".to_string()),
                Just("¡".to_string()),
                Just("«".to_string()),
                Just("»".to_string()),
                Just("\n".to_string()),
                Just("\n\n".to_string()),
                "[a-z]{1,6}[.!?…]{1,3}",
                "[A-Z][.]",
            ]
        }

        fn text() -> impl Strategy<Value = String> {
            proptest::collection::vec(token(), 0..25).prop_map(|t| t.join(" "))
        }

        proptest! {
            #[test]
            fn lossless_modulo_whitespace(t in text()) {
                let joined = texts(&t).join(" ");
                let normalized = t.split_whitespace().collect::<Vec<_>>().join(" ");
                prop_assert_eq!(joined, normalized);
            }

            #[test]
            fn idempotent_and_nonempty(t in text()) {
                for s in split_sentences(&t) {
                    prop_assert!(!s.text.trim().is_empty());
                    prop_assert_eq!(s.text.trim(), s.text.as_str());
                    prop_assert!(!s.text.contains('\n'));
                    let again = texts(&s.text);
                    prop_assert_eq!(again, vec![s.text.clone()]);
                }
            }
        }
    }
}
