//! Pipeline configuration: one JSON file with per-command sections.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathsConfig {
    pub articles: PathBuf,
    pub events: PathBuf,
    /// User-level reward log consumed by the insights command.
    #[serde(default)]
    pub rewards: Option<PathBuf>,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default)]
    pub lemmas: Option<PathBuf>,
    pub artifacts_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub min_doc_count: usize,
    pub max_doc_fraction: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            min_doc_count: crate::corpus::DEFAULT_MIN_DOC_COUNT,
            max_doc_fraction: crate::corpus::DEFAULT_MAX_DOC_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicsConfig {
    pub num_topics: usize,
    /// Defaults to 50 / num_topics when absent.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub infer_iterations: usize,
    pub seed: u64,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        TopicsConfig {
            // convergence point observed at production scale; desk-scale
            // fixtures override this
            num_topics: 50,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            infer_iterations: 100,
            seed: 42,
        }
    }
}

impl TopicsConfig {
    pub fn effective_alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.num_topics as f64)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfilesConfig {
    pub window_days: i64,
    pub min_articles_score: usize,
    pub min_pageviews_train: usize,
    /// Window end, UTC seconds; defaults to just past the newest event.
    pub reference_time: Option<i64>,
}

impl Default for ProfilesConfig {
    fn default() -> Self {
        ProfilesConfig {
            window_days: 14,
            min_articles_score: 2,
            min_pageviews_train: 5,
            reference_time: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentsConfig {
    pub k: usize,
    pub variant: String,
    pub section: Option<String>,
    pub seed: u64,
    pub inner_iters: usize,
}

impl Default for SegmentsConfig {
    fn default() -> Self {
        SegmentsConfig {
            k: 10,
            variant: "general".into(),
            section: None,
            seed: 7,
            inner_iters: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BanditConfig {
    /// Knowledge window l, seconds.
    pub window_secs: i64,
    pub epsilon: f64,
    pub ttl_secs: i64,
    pub list_len: usize,
    pub seed: u64,
    /// Optional article availability span for serving, seconds after
    /// publication; absent means articles never expire.
    pub item_lifetime_secs: Option<i64>,
}

impl Default for BanditConfig {
    fn default() -> Self {
        BanditConfig {
            window_secs: 3_600,
            epsilon: 0.1,
            ttl_secs: 30,
            list_len: 5,
            seed: 17,
            item_lifetime_secs: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridPoint {
    pub window_secs: i64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub scenario: Option<PathBuf>,
    pub grid: Vec<GridPoint>,
    pub repetitions: usize,
    pub trials_per_day: u64,
    pub seed: u64,
    /// A/B horizon override; defaults to the scenario horizon.
    pub horizon: Option<u64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            scenario: None,
            grid: vec![
                GridPoint { window_secs: 25, epsilon: 0.05 },
                GridPoint { window_secs: 25, epsilon: 0.1 },
                GridPoint { window_secs: 100, epsilon: 0.05 },
                GridPoint { window_secs: 100, epsilon: 0.1 },
                GridPoint { window_secs: 100_000, epsilon: 0.05 },
                GridPoint { window_secs: 100_000, epsilon: 0.1 },
            ],
            repetitions: 50,
            trials_per_day: 50,
            seed: 99,
            horizon: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub topics: TopicsConfig,
    #[serde(default)]
    pub profiles: ProfilesConfig,
    #[serde(default)]
    pub segments: SegmentsConfig,
    #[serde(default)]
    pub bandit: BanditConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: PipelineConfig = serde_json::from_slice(&bytes)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics.num_topics < 2 {
            return Err(Error::InvalidConfig("topics.num_topics must be >= 2".into()));
        }
        if self.topics.iterations < 1 || self.topics.infer_iterations < 1 {
            return Err(Error::InvalidConfig("topics iterations must be >= 1".into()));
        }
        if let Some(alpha) = self.topics.alpha {
            if alpha <= 0.0 || alpha.is_nan() {
                return Err(Error::InvalidConfig("topics.alpha must be > 0".into()));
            }
        }
        if self.topics.beta <= 0.0 || self.topics.beta.is_nan() {
            return Err(Error::InvalidConfig("topics.beta must be > 0".into()));
        }
        if self.corpus.min_doc_count < 1 {
            return Err(Error::InvalidConfig("corpus.min_doc_count must be >= 1".into()));
        }
        if !(self.corpus.max_doc_fraction > 0.0 && self.corpus.max_doc_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "corpus.max_doc_fraction must be in (0, 1]".into(),
            ));
        }
        if self.profiles.window_days < 1 {
            return Err(Error::InvalidConfig("profiles.window_days must be >= 1".into()));
        }
        if self.segments.k < 1 {
            return Err(Error::InvalidConfig("segments.k must be >= 1".into()));
        }
        if !matches!(self.segments.variant.as_str(), "general" | "hot" | "site") {
            return Err(Error::InvalidConfig(format!(
                "segments.variant must be one of general|hot|site, got {:?}",
                self.segments.variant
            )));
        }
        if self.segments.variant == "site" && self.segments.section.is_none() {
            return Err(Error::InvalidConfig(
                "segments.section is required for the site variant".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.bandit.epsilon) {
            return Err(Error::InvalidConfig("bandit.epsilon must be in [0, 1]".into()));
        }
        if self.bandit.window_secs < 1 || self.bandit.ttl_secs < 1 || self.bandit.list_len < 1 {
            return Err(Error::InvalidConfig(
                "bandit window, ttl and list_len must be >= 1".into(),
            ));
        }
        if self.simulation.repetitions < 1 || self.simulation.trials_per_day < 1 {
            return Err(Error::InvalidConfig(
                "simulation repetitions and trials_per_day must be >= 1".into(),
            ));
        }
        Ok(())
    }
}
