//! Generative simulation scenarios: traffic, item pool dynamics, and
//! per-(segment, item) reward distributions.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation noise around an item's per-segment mean reward.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum RewardNoise {
    /// Reward 1 with probability mean (clamped into [0, 1]), else 0.
    Bernoulli,
    /// Gaussian around the mean with this std, clipped into [0, 1].
    ClippedGaussian { std: f64 },
}

impl RewardNoise {
    pub fn draw(&self, mean: f64, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            RewardNoise::Bernoulli => {
                let p = mean.clamp(0.0, 1.0);
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            RewardNoise::ClippedGaussian { std } => {
                let normal = Normal::new(mean, *std).expect("std validated at scenario load");
                normal.sample(rng).clamp(0.0, 1.0)
            }
        }
    }
}

/// Where an item's per-segment mean rewards come from when it is born (and
/// again on every drift step).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum MeanSource {
    /// Independent uniform draw per (segment, item).
    Uniform { low: f64, high: f64 },
    /// Item number `i` gets row `i % table.len()`; each row holds one mean
    /// per segment. Deterministic, so drift has no effect on it.
    Cycle { table: Vec<Vec<f64>> },
}

impl MeanSource {
    pub fn draw(&self, item_seq: u64, num_segments: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            MeanSource::Uniform { low, high } => (0..num_segments)
                .map(|_| low + (high - low) * rng.random::<f64>())
                .collect(),
            MeanSource::Cycle { table } => table[(item_seq as usize) % table.len()].clone(),
        }
    }
}

/// Per-(segment, item) reward generator, optionally re-randomized every
/// `drift_period` trials.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RewardLaw {
    pub noise: RewardNoise,
    pub means: MeanSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_period: Option<u64>,
}

/// Generative description of one recommendation setting.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimulationScenario {
    /// Number of trials T.
    pub horizon: u64,
    /// Expected views per trial (Poisson mean).
    pub traffic_per_trial: f64,
    /// Item pool size |A_t|, held constant by replacing expired items.
    pub pool_size: usize,
    /// Trials an item stays in the pool before being replaced.
    pub article_lifetime: u64,
    pub num_segments: usize,
    /// Traffic share per segment; must sum to 1.
    pub segment_mix: Vec<f64>,
    pub reward_law: RewardLaw,
}

impl SimulationScenario {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 || self.pool_size < 1 || self.article_lifetime < 1 {
            return Err(Error::InvalidScenario(
                "horizon, pool_size and article_lifetime must be >= 1".into(),
            ));
        }
        if self.traffic_per_trial <= 0.0 || self.traffic_per_trial.is_nan() {
            return Err(Error::InvalidScenario(
                "traffic_per_trial must be positive".into(),
            ));
        }
        if self.num_segments < 1 || self.segment_mix.len() != self.num_segments {
            return Err(Error::InvalidScenario(format!(
                "segment_mix has {} entries for {} segments",
                self.segment_mix.len(),
                self.num_segments
            )));
        }
        let total: f64 = self.segment_mix.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.segment_mix.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidScenario("segment_mix must sum to 1".into()));
        }
        if let RewardNoise::ClippedGaussian { std } = self.reward_law.noise {
            if std <= 0.0 || std.is_nan() {
                return Err(Error::InvalidScenario("gaussian std must be positive".into()));
            }
        }
        if let MeanSource::Cycle { table } = &self.reward_law.means {
            if table.is_empty() || table.iter().any(|row| row.len() != self.num_segments) {
                return Err(Error::InvalidScenario(
                    "cycle table rows must match num_segments".into(),
                ));
            }
        }
        if self.reward_law.drift_period == Some(0) {
            return Err(Error::InvalidScenario("drift_period must be >= 1".into()));
        }
        Ok(())
    }
}

/// Load and validate a scenario JSON file.
pub fn load_scenario(path: &Path) -> Result<SimulationScenario> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let scenario: SimulationScenario = serde_json::from_slice(&bytes)?;
    scenario.validate()?;
    Ok(scenario)
}
