//! Sectioned key-value configuration file (TOML).
//!
//! ```toml
//! [pipeline]
//! inputs = ["crawl/"]
//! output_dir = "clean/"
//! fields = "headers,paragraphs"
//! target_language = "es"
//! workers = 4
//!
//! [langid]
//! min_chars = 20
//!
//! [quality]
//! min_words = 3
//!
//! [dedup]
//! mem_cap = "4GiB"
//! ```
//!
//! Every key is optional. Command-line flags override the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bpe::BpeConfig;
use crate::dedup::{parse_byte_size, DedupOptions, FingerprintWidth};
use crate::embeddings::TrainConfig;
use crate::ingest::{FieldMask, ParseMode};
use crate::langid::IdentifyConfig;
use crate::pipeline::PipelineConfig;
use crate::quality::QualityConfig;
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub pipeline: PipelineSection,
    pub langid: IdentifyConfig,
    pub quality: QualityConfig,
    pub dedup: DedupSection,
    pub bpe: BpeConfig,
    pub embeddings: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub inputs: Vec<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub fields: String,
    pub target_language: String,
    pub langid_profiles: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub boilerplate: Option<PathBuf>,
    pub drop_undetermined: bool,
    pub parse_mode: ParseMode,
    pub workers: usize,
    pub deterministic: bool,
    pub batch_size: usize,
    pub shard_max_bytes: String,
    pub global_dedup: bool,
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            inputs: Vec::new(),
            output_dir: None,
            fields: "headers,paragraphs".into(),
            target_language: "es".into(),
            langid_profiles: None,
            abbreviations: None,
            boilerplate: None,
            drop_undetermined: false,
            parse_mode: ParseMode::Lenient,
            workers: 1,
            deterministic: true,
            batch_size: 1024,
            shard_max_bytes: "256MiB".into(),
            global_dedup: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupSection {
    pub width: FingerprintWidth,
    pub mem_cap: String,
    pub spill_dir: Option<PathBuf>,
}

impl Default for DedupSection {
    fn default() -> Self {
        DedupSection {
            width: FingerprintWidth::Bits64,
            mem_cap: "4GiB".into(),
            spill_dir: None,
        }
    }
}

impl DedupSection {
    pub fn to_options(&self, workers: usize) -> Result<DedupOptions> {
        Ok(DedupOptions {
            width: self.width,
            mem_cap: parse_byte_size(&self.mem_cap)?,
            workers,
            spill_dir: self.spill_dir.clone(),
        })
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // relative paths in the file are relative to the file
        if let Some(base) = path.parent() {
            cfg.resolve_relative_to(base);
        }
        Ok(cfg)
    }

    fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let section = &mut self.pipeline;
        section.inputs.iter_mut().for_each(fix);
        for p in [
            &mut section.output_dir,
            &mut section.langid_profiles,
            &mut section.abbreviations,
            &mut section.boilerplate,
            &mut self.dedup.spill_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Builds a pipeline configuration; the caller has already applied
    /// command-line overrides to `self`.
    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let p = &self.pipeline;
        let output_dir = p
            .output_dir
            .clone()
            .ok_or_else(|| Error::Config("pipeline.output_dir is required".into()))?;
        let mut quality = self.quality.clone();
        if let Some(path) = &p.boilerplate {
            quality.boilerplate_patterns = crate::quality::load_pattern_list(path)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(PipelineConfig {
            inputs: p.inputs.clone(),
            output_dir,
            fields: FieldMask::parse(&p.fields)?,
            target_language: p.target_language.clone(),
            langid_profiles: p.langid_profiles.clone(),
            abbreviations: p.abbreviations.clone(),
            identify: self.langid,
            drop_undetermined: p.drop_undetermined,
            quality,
            dedup: self.dedup.to_options(p.workers)?,
            parse_mode: p.parse_mode,
            workers: p.workers,
            deterministic: p.deterministic,
            batch_size: p.batch_size,
            shard_max_bytes: parse_byte_size(&p.shard_max_bytes)?,
            global_dedup: p.global_dedup,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(ConfigFile::parse("").unwrap(), ConfigFile::default());
    }

    #[test]
    fn sections_parse() {
        let cfg = ConfigFile::parse(
            r#"
            [pipeline]
            inputs = ["a/", "b.jsonl"]
            output_dir = "out"
            fields = "paragraphs"
            workers = 4

            [langid]
            min_chars = 30

            [quality]
            min_words = 5
            max_char_run = 4

            [dedup]
            width = "128"
            mem_cap = "1GiB"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.langid.min_chars, 30);
        assert_eq!(cfg.langid.margin_threshold, 0.02);
        assert_eq!(cfg.quality.min_words, 5);
        assert_eq!(cfg.quality.max_words, 300);
        let pc = cfg.pipeline_config().unwrap();
        assert_eq!(pc.workers, 4);
        assert_eq!(pc.fields, FieldMask::PARAGRAPHS);
        assert_eq!(pc.dedup.mem_cap, 1 << 30);
        assert_eq!(pc.dedup.width, FingerprintWidth::Bits128);
        assert_eq!(pc.shard_max_bytes, 256 << 20);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ConfigFile::parse("[quality]\nmin_wrds = 3\n").is_err());
        assert!(ConfigFile::parse("[nope]\n").is_err());
    }

    #[test]
    fn output_dir_required() {
        assert!(matches!(
            ConfigFile::default().pipeline_config(),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn relative_paths_follow_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[pipeline]\ninputs = [\"in\"]\noutput_dir = \"/abs/out\"\n").unwrap();
        let cfg = ConfigFile::load(&path).unwrap();
        assert_eq!(cfg.pipeline.inputs, vec![dir.path().join("in")]);
        assert_eq!(cfg.pipeline.output_dir, Some(PathBuf::from("/abs/out")));
    }
}
