//! Language identification with character n-gram profiles.
//!
//! Text is lowercased and reduced to words of alphabetic characters. Each
//! word is padded with one space on both sides and contributes all of its
//! character n-grams of order `1..=n_max`. A profile stores add-alpha
//! smoothed n-gram probabilities per order, with one reserved slot of mass
//! for every unseen n-gram of that order. A text's score under a profile is
//! its total n-gram log-probability divided by its number of letters, so
//! scores are comparable across lengths and a text and its repetition get
//! the same decision.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::{Error, Result};

pub const PROFILE_FORMAT_VERSION: u32 = 1;
pub const UNDETERMINED: &str = "und";

/// Language code attached to a sentence (ISO 639-1, or `und`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LangLabel(pub String);

impl LangLabel {
    pub fn undetermined() -> Self {
        LangLabel(UNDETERMINED.to_string())
    }

    pub fn is_undetermined(&self) -> bool {
        self.0 == UNDETERMINED
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LangLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Lowercased NFC alphabetic words of `text`; everything else separates
/// words. Combining marks stay attached, so decomposed accents compose.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphabetic() && !is_combining_mark(c))
        .filter(|w| w.chars().any(char::is_alphabetic))
        .map(|w| w.nfc().collect::<String>().to_lowercase())
}

fn letter_count(text: &str) -> usize {
    text.chars().filter(|c| c.is_alphabetic()).count()
}

/// Calls `f(order, gram)` for every n-gram of the space-padded word.
fn for_each_gram(word: &str, n_max: usize, mut f: impl FnMut(usize, &str)) {
    let padded = format!(" {word} ");
    let bounds: Vec<usize> = padded
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(padded.len()))
        .collect();
    let chars = bounds.len() - 1;
    for n in 1..=n_max.min(chars) {
        for start in 0..=chars - n {
            f(n, &padded[bounds[start]..bounds[start + n]]);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ProfileFile {
    version: u32,
    lang: String,
    n_max: usize,
    alpha: f64,
    counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug)]
pub struct LangProfile {
    lang: String,
    n_max: usize,
    alpha: f64,
    counts: BTreeMap<String, u64>,
    logprob: HashMap<String, f64>,
    /// Log-probability of an unseen n-gram, indexed by order - 1.
    unseen_logprob: Vec<f64>,
}

impl PartialEq for LangProfile {
    fn eq(&self, other: &Self) -> bool {
        self.lang == other.lang
            && self.n_max == other.n_max
            && self.alpha == other.alpha
            && self.counts == other.counts
    }
}

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_N_MAX: usize = 4;

impl LangProfile {
    pub fn train<S: AsRef<str>>(samples: &[S], lang: &str, n_max: usize, alpha: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if !(1..=5).contains(&n_max) {
            return Err(Error::Config(format!("n_max must be in 1..=5, got {n_max}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        let mut counts = BTreeMap::new();
        for sample in samples {
            for word in words(sample.as_ref()) {
                for_each_gram(&word, n_max, |_, g| {
                    *counts.entry(g.to_string()).or_insert(0u64) += 1;
                });
            }
        }
        if counts.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        Ok(Self::from_counts(lang.to_string(), n_max, alpha, counts))
    }

    fn from_counts(lang: String, n_max: usize, alpha: f64, counts: BTreeMap<String, u64>) -> Self {
        let mut total = vec![0u64; n_max];
        let mut distinct = vec![0u64; n_max];
        for (g, &c) in &counts {
            let n = g.chars().count();
            total[n - 1] += c;
            distinct[n - 1] += 1;
        }
        let denom: Vec<f64> = (0..n_max)
            .map(|i| total[i] as f64 + alpha * (distinct[i] + 1) as f64)
            .collect();
        let logprob = counts
            .iter()
            .map(|(g, &c)| {
                let n = g.chars().count();
                (g.clone(), ((c as f64 + alpha) / denom[n - 1]).ln())
            })
            .collect();
        let unseen_logprob = denom.iter().map(|d| (alpha / d).ln()).collect();
        LangProfile {
            lang,
            n_max,
            alpha,
            counts,
            logprob,
            unseen_logprob,
        }
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Probability reserved for unseen n-grams of the given order.
    pub fn smoothing_mass(&self, order: usize) -> f64 {
        self.unseen_logprob[order - 1].exp()
    }

    pub fn logprob(&self, gram: &str) -> f64 {
        match self.logprob.get(gram) {
            Some(&lp) => lp,
            None => self.unseen_logprob[gram.chars().count() - 1],
        }
    }

    /// Iterates `(gram, log-probability)` over observed n-grams.
    pub fn observed(&self) -> impl Iterator<Item = (&str, f64)> {
        self.logprob.iter().map(|(g, &lp)| (g.as_str(), lp))
    }

    fn word_score(&self, word: &str) -> f64 {
        let mut score = 0.0;
        for_each_gram(word, self.n_max, |_, g| score += self.logprob(g));
        score
    }

    pub fn to_json(&self) -> String {
        let file = ProfileFile {
            version: PROFILE_FORMAT_VERSION,
            lang: self.lang.clone(),
            n_max: self.n_max,
            alpha: self.alpha,
            counts: self.counts.clone(),
        };
        serde_json::to_string_pretty(&file).expect("profile serialization cannot fail")
    }

    pub fn from_json(json: &str, path: &Path) -> Result<Self> {
        let format_err = |msg: String| Error::Format {
            path: path.to_path_buf(),
            msg,
        };
        let file: ProfileFile = serde_json::from_str(json).map_err(|e| format_err(e.to_string()))?;
        if file.version != PROFILE_FORMAT_VERSION {
            return Err(format_err(format!("unsupported profile version {}", file.version)));
        }
        if !(1..=5).contains(&file.n_max) || !(file.alpha > 0.0) || file.counts.is_empty() {
            return Err(format_err("invalid profile parameters".into()));
        }
        if file
            .counts
            .keys()
            .any(|g| g.is_empty() || g.chars().count() > file.n_max)
        {
            return Err(format_err("n-gram longer than n_max".into()));
        }
        Ok(Self::from_counts(file.lang, file.n_max, file.alpha, file.counts))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json, path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentifyConfig {
    /// Texts with fewer letters are undetermined.
    pub min_chars: usize,
    /// Minimum score gap, in nats per letter, between the two best languages.
    pub margin_threshold: f64,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        IdentifyConfig {
            min_chars: 20,
            margin_threshold: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Identification {
    pub lang: LangLabel,
    /// Score gap between the best and second-best language; infinite with a
    /// single profile, zero for texts below `min_chars`.
    pub margin: f64,
    /// Per-profile scores in profile order, empty for short texts.
    pub scores: Vec<f64>,
}

static NEXT_IDENTIFIER: AtomicU64 = AtomicU64::new(0);
const WORD_CACHE_LIMIT: usize = 1 << 18;

thread_local! {
    static WORD_CACHE: RefCell<(u64, HashMap<String, Box<[f64]>>)> =
        RefCell::new((u64::MAX, HashMap::new()));
}

/// A set of profiles plus thresholds. Per-word scores are memoized in a
/// thread-local cache, which never changes results.
#[derive(Debug)]
pub struct LanguageIdentifier {
    id: u64,
    profiles: Vec<LangProfile>,
    config: IdentifyConfig,
}

impl Clone for LanguageIdentifier {
    fn clone(&self) -> Self {
        LanguageIdentifier::new(self.profiles.clone(), self.config).expect("already validated")
    }
}

impl LanguageIdentifier {
    pub fn new(profiles: Vec<LangProfile>, config: IdentifyConfig) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::NoProfiles);
        }
        Ok(LanguageIdentifier {
            id: NEXT_IDENTIFIER.fetch_add(1, Ordering::Relaxed),
            profiles,
            config,
        })
    }

    pub fn profiles(&self) -> &[LangProfile] {
        &self.profiles
    }

    pub fn config(&self) -> IdentifyConfig {
        self.config
    }

    pub fn identify(&self, text: &str) -> Identification {
        self.identify_with(text, true)
    }

    fn identify_with(&self, text: &str, cached: bool) -> Identification {
        if letter_count(text) < self.config.min_chars {
            return Identification {
                lang: LangLabel::undetermined(),
                margin: 0.0,
                scores: Vec::new(),
            };
        }
        let mut bag: BTreeMap<String, u64> = BTreeMap::new();
        for w in words(text) {
            *bag.entry(w).or_insert(0) += 1;
        }
        let letters: u64 = bag.iter().map(|(w, c)| c * w.chars().count() as u64).sum();

        let mut totals = vec![0.0f64; self.profiles.len()];
        let mut add = |count: u64, scores: &[f64]| {
            for (t, s) in totals.iter_mut().zip(scores) {
                *t += count as f64 * s;
            }
        };
        if cached {
            WORD_CACHE.with(|cell| {
                let mut cache = cell.borrow_mut();
                if cache.0 != self.id || cache.1.len() > WORD_CACHE_LIMIT {
                    cache.0 = self.id;
                    cache.1.clear();
                }
                for (w, &c) in &bag {
                    if let Some(scores) = cache.1.get(w) {
                        add(c, scores);
                    } else {
                        let scores = self.word_scores(w);
                        add(c, &scores);
                        cache.1.insert(w.clone(), scores);
                    }
                }
            });
        } else {
            for (w, &c) in &bag {
                add(c, &self.word_scores(w));
            }
        }
        let scores: Vec<f64> = totals.iter().map(|t| t / letters as f64).collect();
        self.decide(scores)
    }

    fn word_scores(&self, word: &str) -> Box<[f64]> {
        self.profiles.iter().map(|p| p.word_score(word)).collect()
    }

    fn decide(&self, scores: Vec<f64>) -> Identification {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| self.profiles[a].lang.cmp(&self.profiles[b].lang))
        });
        let best = order[0];
        let margin = match order.get(1) {
            Some(&second) => scores[best] - scores[second],
            None => f64::INFINITY,
        };
        let lang = if margin < self.config.margin_threshold {
            LangLabel::undetermined()
        } else {
            LangLabel(self.profiles[best].lang.clone())
        };
        Identification {
            lang,
            margin,
            scores,
        }
    }
}

/// One-shot identification with the default margin threshold.
pub fn identify(text: &str, profiles: &[LangProfile], min_chars: usize) -> Result<(LangLabel, f64)> {
    let ident = LanguageIdentifier::new(
        profiles.to_vec(),
        IdentifyConfig {
            min_chars,
            ..IdentifyConfig::default()
        },
    )?;
    let id = ident.identify_with(text, false);
    Ok((id.lang, id.margin))
}

/// Training text shipped with the crate, one `(lang, text)` pair per
/// language. Held-out evaluation text must not be drawn from these.
pub const BUNDLED_TRAINING_TEXT: [(&str, &str); 5] = [
    ("ca", include_str!("../data/langid/ca.txt")),
    ("en", include_str!("../data/langid/en.txt")),
    ("es", include_str!("../data/langid/es.txt")),
    ("fr", include_str!("../data/langid/fr.txt")),
    ("pt", include_str!("../data/langid/pt.txt")),
];

/// Profiles trained on the bundled text with default parameters.
pub fn bundled_profiles() -> Vec<LangProfile> {
    BUNDLED_TRAINING_TEXT
        .iter()
        .map(|(lang, text)| {
            let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
            LangProfile::train(&lines, lang, DEFAULT_N_MAX, DEFAULT_ALPHA)
                .expect("bundled training text is non-empty")
        })
        .collect()
}

/// Loads every `*.profile.json` (or `*.json`) file in a directory, sorted
/// by file name, or a single profile file.
pub fn load_profiles(path: &Path) -> Result<Vec<LangProfile>> {
    if path.is_file() {
        return Ok(vec![LangProfile::load(path)?]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    let profiles = files
        .iter()
        .map(|p| LangProfile::load(p))
        .collect::<Result<Vec<_>>>()?;
    if profiles.is_empty() {
        return Err(Error::NoProfiles);
    }
    Ok(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_symbol_distribution() {
        let p = LangProfile::train(&["aa"], "xx", 1, 0.5).unwrap();
        // unigrams of " aa ": ' ' x2, 'a' x2; D = 4 + 0.5 * 3 = 5.5
        assert!((p.logprob("a") - (2.5f64 / 5.5).ln()).abs() < 1e-12);
        assert!((p.smoothing_mass(1) - 0.5 / 5.5).abs() < 1e-12);
        assert!((p.logprob("z") - (0.5f64 / 5.5).ln()).abs() < 1e-12);
        assert!(p.logprob("a") > p.logprob("z"));
    }

    #[test]
    fn probabilities_sum_to_one_per_order() {
        let p = LangProfile::train(&["la casa de la pradera", "el perro"], "es", 4, 0.5).unwrap();
        for n in 1..=4 {
            let observed: f64 = p
                .observed()
                .filter(|(g, _)| g.chars().count() == n)
                .map(|(_, lp)| lp.exp())
                .sum();
            assert!((observed + p.smoothing_mass(n) - 1.0).abs() < 1e-9, "order {n}");
        }
        assert!(p.observed().all(|(_, lp)| lp.is_finite() && lp <= 0.0));
    }

    #[test]
    fn training_errors() {
        let empty: [&str; 0] = [];
        assert!(matches!(LangProfile::train(&empty, "es", 3, 0.5), Err(Error::EmptyTrainingSet)));
        assert!(matches!(LangProfile::train(&["123"], "es", 3, 0.5), Err(Error::EmptyTrainingSet)));
        assert!(LangProfile::train(&["abc"], "es", 0, 0.5).is_err());
        assert!(LangProfile::train(&["abc"], "es", 6, 0.5).is_err());
    }

    #[test]
    fn disjoint_alphabets_separate() {
        let a = LangProfile::train(&["abc abcabc cab bca"], "aa", 3, 0.5).unwrap();
        let x = LangProfile::train(&["xyz xyzxyz zyx yzx"], "xx", 3, 0.5).unwrap();
        let ident = LanguageIdentifier::new(
            vec![a, x],
            IdentifyConfig {
                min_chars: 3,
                margin_threshold: 0.02,
            },
        )
        .unwrap();
        assert_eq!(ident.identify("cab bac abc").lang.as_str(), "aa");
        assert_eq!(ident.identify("zyx xzy yyz").lang.as_str(), "xx");
    }

    #[test]
    fn short_text_is_undetermined() {
        let profiles = bundled_profiles();
        let (lang, margin) = identify("Hola, ¿qué tal? 12345", &profiles, 20).unwrap();
        assert!(lang.is_undetermined());
        assert_eq!(margin, 0.0);
    }

    #[test]
    fn decomposed_accents_score_like_composed() {
        let nfc = "La niña pidió un café en la estación";
        let nfd: String = nfc.nfd().collect();
        assert_ne!(nfc, nfd);
        assert_eq!(words(nfc).collect::<Vec<_>>(), words(&nfd).collect::<Vec<_>>());
        let profiles = bundled_profiles();
        assert_eq!(identify(nfc, &profiles, 20).unwrap(), identify(&nfd, &profiles, 20).unwrap());
    }

    #[test]
    fn singleton_profile_wins() {
        let p = LangProfile::train(&["el perro come en casa"], "es", 3, 0.5).unwrap();
        let (lang, _) = identify("the quick brown fox jumps over the dog", &[p], 20).unwrap();
        assert_eq!(lang.as_str(), "es");
    }

    #[test]
    fn no_profiles() {
        assert!(matches!(identify("abc", &[], 1), Err(Error::NoProfiles)));
    }

    #[test]
    fn ties_break_by_code() {
        let a = LangProfile::train(&["abc"], "zz", 2, 0.5).unwrap();
        let b = LangProfile::train(&["abc"], "aa", 2, 0.5).unwrap();
        let ident = LanguageIdentifier::new(
            vec![a, b],
            IdentifyConfig {
                min_chars: 1,
                margin_threshold: 0.0,
            },
        )
        .unwrap();
        let id = ident.identify("abc");
        assert_eq!(id.margin, 0.0);
        assert_eq!(id.lang.as_str(), "aa");
    }

    #[test]
    fn bundled_profiles_spanish_news() {
        let profiles = bundled_profiles();
        let text = "El Ayuntamiento aprobó ayer por la tarde un nuevo plan para mejorar \
                    el transporte público de la ciudad, que incluye más autobuses nocturnos \
                    y la ampliación de los carriles para bicicletas en los barrios del sur.";
        assert!(text.chars().count() >= 200);
        let (lang, margin) = identify(text, &profiles, 20).unwrap();
        assert_eq!(lang.as_str(), "es");
        assert!(margin > 0.02);
    }

    #[test]
    fn cached_equals_uncached() {
        let ident = LanguageIdentifier::new(bundled_profiles(), IdentifyConfig::default()).unwrap();
        for text in [
            "La biblioteca abre a las nueve de la mañana.",
            "The library opens at nine in the morning.",
            "La bibliothèque ouvre à neuf heures du matin.",
        ] {
            let a = ident.identify(text);
            let b = ident.identify(text);
            let c = ident.identify_with(text, false);
            assert_eq!(a, b);
            assert_eq!(a, c);
        }
    }

    #[test]
    fn profile_json_roundtrip() {
        let p = LangProfile::train(&["el perro come en casa"], "es", 3, 0.5).unwrap();
        let back = LangProfile::from_json(&p.to_json(), Path::new("p.json")).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.logprob("per"), p.logprob("per"));
        let bad = p.to_json().replace("\"version\": 1", "\"version\": 9");
        assert!(LangProfile::from_json(&bad, Path::new("p.json")).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use std::sync::OnceLock;

        fn ident() -> &'static LanguageIdentifier {
            static IDENT: OnceLock<LanguageIdentifier> = OnceLock::new();
            IDENT.get_or_init(|| {
                LanguageIdentifier::new(bundled_profiles(), IdentifyConfig::default()).unwrap()
            })
        }

        proptest! {
            #[test]
            fn repetition_keeps_decision(t in "[a-záéíóúñçàèò ]{0,80}") {
                let once = ident().identify(&t);
                let twice = ident().identify(&format!("{t} {t}"));
                if !once.scores.is_empty() {
                    prop_assert_eq!(&once.lang, &twice.lang);
                    prop_assert_eq!(once.scores, twice.scores);
                }
            }

            #[test]
            fn deterministic(t in "\\PC{0,60}") {
                prop_assert_eq!(ident().identify(&t), ident().identify(&t));
            }
        }
    }
}
