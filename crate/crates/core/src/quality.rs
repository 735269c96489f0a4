//! Heuristic sentence quality filter.
//!
//! Every heuristic runs on the raw sentence text, and all of them are
//! evaluated so a verdict lists each reason that applies. Ratios count
//! Unicode scalar values over the non-whitespace characters of the
//! sentence, except the uppercase ratio, which is taken over letters.
//! A word is a maximal run of alphabetic characters.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Document, Error, Result, Sentence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Reason {
    TooShort,
    TooLong,
    LowAlphaRatio,
    HighDigitRatio,
    HighUpperRatio,
    HighPunctRatio,
    RepeatedChars,
    BoilerplateMatch,
    NoTerminalPunct,
    WrongLanguage,
}

impl Reason {
    pub const ALL: [Reason; 10] = [
        Reason::TooShort,
        Reason::TooLong,
        Reason::LowAlphaRatio,
        Reason::HighDigitRatio,
        Reason::HighUpperRatio,
        Reason::HighPunctRatio,
        Reason::RepeatedChars,
        Reason::BoilerplateMatch,
        Reason::NoTerminalPunct,
        Reason::WrongLanguage,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Reason::TooShort => "TOO_SHORT",
            Reason::TooLong => "TOO_LONG",
            Reason::LowAlphaRatio => "LOW_ALPHA_RATIO",
            Reason::HighDigitRatio => "HIGH_DIGIT_RATIO",
            Reason::HighUpperRatio => "HIGH_UPPER_RATIO",
            Reason::HighPunctRatio => "HIGH_PUNCT_RATIO",
            Reason::RepeatedChars => "REPEATED_CHARS",
            Reason::BoilerplateMatch => "BOILERPLATE_MATCH",
            Reason::NoTerminalPunct => "NO_TERMINAL_PUNCT",
            Reason::WrongLanguage => "WRONG_LANGUAGE",
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Accept/reject decision; accepted exactly when no reason is set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct FilterVerdict {
    reasons: u16,
}

impl FilterVerdict {
    pub fn accepted(&self) -> bool {
        self.reasons == 0
    }

    pub fn add(&mut self, reason: Reason) {
        self.reasons |= reason.bit();
    }

    pub fn has(&self, reason: Reason) -> bool {
        self.reasons & reason.bit() != 0
    }

    pub fn reasons(&self) -> impl Iterator<Item = Reason> + '_ {
        Reason::ALL.into_iter().filter(|r| self.has(*r))
    }

    pub fn reason_count(&self) -> usize {
        self.reasons.count_ones() as usize
    }

    /// The only reason, when exactly one applies.
    pub fn single_reason(&self) -> Option<Reason> {
        if self.reason_count() == 1 {
            self.reasons().next()
        } else {
            None
        }
    }
}

impl FromIterator<Reason> for FilterVerdict {
    fn from_iter<I: IntoIterator<Item = Reason>>(iter: I) -> Self {
        let mut v = FilterVerdict::default();
        for r in iter {
            v.add(r);
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConfig {
    pub min_words: usize,
    pub max_words: usize,
    pub min_alpha_ratio: f64,
    pub max_digit_ratio: f64,
    pub max_upper_ratio: f64,
    pub max_punct_ratio: f64,
    pub max_char_run: usize,
    pub require_terminal_punct: bool,
    pub boilerplate_patterns: Vec<String>,
}

const DEFAULT_BOILERPLATE: &str = include_str!("../data/boilerplate.es.txt");

/// Reads a pattern list: one literal per line, `#` comment lines skipped.
pub fn parse_pattern_list(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn load_pattern_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_pattern_list(&text))
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            min_words: 3,
            max_words: 300,
            min_alpha_ratio: 0.5,
            max_digit_ratio: 0.3,
            max_upper_ratio: 0.6,
            max_punct_ratio: 0.3,
            max_char_run: 5,
            require_terminal_punct: false,
            boilerplate_patterns: parse_pattern_list(DEFAULT_BOILERPLATE),
        }
    }
}

impl QualityConfig {
    pub fn validate(&self) -> Result<()> {
        let ratios = [
            ("min_alpha_ratio", self.min_alpha_ratio),
            ("max_digit_ratio", self.max_digit_ratio),
            ("max_upper_ratio", self.max_upper_ratio),
            ("max_punct_ratio", self.max_punct_ratio),
        ];
        for (name, r) in ratios {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("quality.{name} must be in [0, 1], got {r}")));
            }
        }
        if self.min_words > self.max_words {
            return Err(Error::Config("quality.min_words exceeds max_words".into()));
        }
        if self.max_char_run < 2 {
            return Err(Error::Config("quality.max_char_run must be at least 2".into()));
        }
        Ok(())
    }
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '¿' | '¡' | '«' | '»' | '…' | '–' | '—' | '‘' | '’' | '“' | '”' | '·' | '•' | '„' | '‹' | '›'
        )
}

/// Character-class counts the heuristics are computed from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TextProfile {
    pub chars: usize,
    pub alpha: usize,
    pub upper: usize,
    pub digits: usize,
    pub punct: usize,
    pub words: usize,
    pub longest_run: usize,
}

impl TextProfile {
    pub fn of(text: &str) -> Self {
        let mut p = TextProfile::default();
        let mut in_word = false;
        let mut prev = None;
        let mut run = 0;
        for c in text.chars() {
            if prev == Some(c) {
                run += 1;
            } else {
                run = 1;
                prev = Some(c);
            }
            p.longest_run = p.longest_run.max(run);
            let alpha = c.is_alphabetic();
            if alpha && !in_word {
                p.words += 1;
            }
            in_word = alpha;
            if c.is_whitespace() {
                continue;
            }
            p.chars += 1;
            if alpha {
                p.alpha += 1;
                if c.is_uppercase() {
                    p.upper += 1;
                }
            } else if c.is_numeric() {
                p.digits += 1;
            } else if is_punctuation(c) {
                p.punct += 1;
            }
        }
        p
    }

    fn ratio(num: usize, den: usize) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }
}

pub fn assess(s: &Sentence, cfg: &QualityConfig) -> FilterVerdict {
    assess_text(&s.text, cfg)
}

pub fn assess_text(text: &str, cfg: &QualityConfig) -> FilterVerdict {
    let p = TextProfile::of(text);
    let mut v = FilterVerdict::default();
    if p.words < cfg.min_words {
        v.add(Reason::TooShort);
    }
    if p.words > cfg.max_words {
        v.add(Reason::TooLong);
    }
    if TextProfile::ratio(p.alpha, p.chars) < cfg.min_alpha_ratio {
        v.add(Reason::LowAlphaRatio);
    }
    if TextProfile::ratio(p.digits, p.chars) > cfg.max_digit_ratio {
        v.add(Reason::HighDigitRatio);
    }
    if TextProfile::ratio(p.upper, p.alpha) > cfg.max_upper_ratio {
        v.add(Reason::HighUpperRatio);
    }
    if TextProfile::ratio(p.punct, p.chars) > cfg.max_punct_ratio {
        v.add(Reason::HighPunctRatio);
    }
    if p.longest_run > cfg.max_char_run {
        v.add(Reason::RepeatedChars);
    }
    if cfg.boilerplate_patterns.iter().any(|pat| text.contains(pat.as_str())) {
        v.add(Reason::BoilerplateMatch);
    }
    if cfg.require_terminal_punct {
        let last = text.trim_end_matches(['"', '\'', '»', '”', '’', ')', ']']).chars().last();
        if !matches!(last, Some('.' | '!' | '?' | '…')) {
            v.add(Reason::NoTerminalPunct);
        }
    }
    v
}

/// Per-reason drop accounting. A sentence rejected for one reason counts
/// under that reason; one rejected for several counts once under
/// `multi_reason`, with each of its reasons also tallied in `reason_hits`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub input: u64,
    pub kept: u64,
    pub single_reason: BTreeMap<Reason, u64>,
    pub multi_reason: u64,
    pub reason_hits: BTreeMap<Reason, u64>,
}

impl FilterStats {
    pub fn record(&mut self, verdict: &FilterVerdict) {
        self.input += 1;
        if verdict.accepted() {
            self.kept += 1;
            return;
        }
        for r in verdict.reasons() {
            *self.reason_hits.entry(r).or_insert(0) += 1;
        }
        match verdict.single_reason() {
            Some(r) => *self.single_reason.entry(r).or_insert(0) += 1,
            None => self.multi_reason += 1,
        }
    }

    pub fn dropped(&self) -> u64 {
        self.single_reason.values().sum::<u64>() + self.multi_reason
    }

    pub fn merge(&mut self, other: &FilterStats) {
        self.input += other.input;
        self.kept += other.kept;
        self.multi_reason += other.multi_reason;
        for (r, n) in &other.single_reason {
            *self.single_reason.entry(*r).or_insert(0) += n;
        }
        for (r, n) in &other.reason_hits {
            *self.reason_hits.entry(*r).or_insert(0) += n;
        }
    }
}

/// Drops sentences that fail [`assess`] or carry a `WRONG_LANGUAGE` verdict
/// from language filtering. Survivors keep their order and get their
/// verdict filled in.
pub fn filter_document(mut doc: Document, cfg: &QualityConfig, stats: &mut FilterStats) -> Document {
    doc.sentences = std::mem::take(&mut doc.sentences)
        .into_iter()
        .filter_map(|mut s| {
            let mut verdict = assess(&s, cfg);
            if s.verdict.is_some_and(|v| v.has(Reason::WrongLanguage)) {
                verdict.add(Reason::WrongLanguage);
            }
            stats.record(&verdict);
            s.verdict = Some(verdict);
            verdict.accepted().then_some(s)
        })
        .collect();
    doc
}
