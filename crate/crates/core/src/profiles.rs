//! Per-user topic-interest profiles.
//!
//! A raw profile is the arithmetic mean of the theta vectors of the distinct
//! articles a user viewed inside the profile window, so it is independent of
//! how often each article was re-read. Raw profiles are then standardized per
//! topic dimension across the user population (zero mean, unit population
//! std), which keeps popular topics from dominating every profile.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Event;
use crate::error::{Error, Result};
use crate::util::population_stats;

/// Distinct articles a user viewed within the window `[start, end)`.
#[derive(Debug, Clone)]
pub struct UserHistory {
    pub user_id: String,
    pub article_ids: Vec<String>,
    pub window: (i64, i64),
}

/// A standardized user profile plus the probability-scale mean it came from.
#[derive(Debug, Clone)]
pub struct UserProfile {
    pub user_id: String,
    /// Population-standardized interest vector.
    pub theta: Vec<f64>,
    /// Mean of article thetas, before standardization.
    pub raw_theta: Vec<f64>,
}

/// Per-dimension standardization statistics. `std == 0` marks a degenerate
/// (constant) dimension, which standardizes to zero.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DimStats {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub dims: Vec<DimStats>,
    /// Indices of zero-variance dimensions.
    pub degenerate: Vec<usize>,
}

impl StandardizationStats {
    /// Map a raw probability-scale vector into standardized space.
    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                got: raw.len(),
            });
        }
        Ok(raw
            .iter()
            .zip(&self.dims)
            .map(|(&v, d)| if d.std > 0.0 { (v - d.mean) / d.std } else { 0.0 })
            .collect())
    }

    /// Invert [`apply`](Self::apply): recover the raw vector from a
    /// standardized one. Degenerate dimensions recover the constant mean.
    pub fn invert(&self, standardized: &[f64]) -> Result<Vec<f64>> {
        if standardized.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                got: standardized.len(),
            });
        }
        Ok(standardized
            .iter()
            .zip(&self.dims)
            .map(|(&z, d)| if d.std > 0.0 { z * d.std + d.mean } else { d.mean })
            .collect())
    }
}

/// Group in-window events into per-user histories of distinct articles.
///
/// Only users with at least `min_articles` distinct in-window articles are
/// emitted; repeated views of one article count once. Output is sorted by
/// user id.
pub fn build_histories(
    events: &[Event],
    window: (i64, i64),
    min_articles: usize,
) -> Result<Vec<UserHistory>> {
    let (start, end) = window;
    if start >= end {
        return Err(Error::InvalidParameter(
            "profile window start must be before end".into(),
        ));
    }
    let mut per_user: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for ev in events {
        if ev.timestamp >= start && ev.timestamp < end {
            per_user
                .entry(ev.user_id.as_str())
                .or_default()
                .insert(ev.article_id.as_str());
        }
    }
    Ok(per_user
        .into_iter()
        .filter(|(_, articles)| articles.len() >= min_articles)
        .map(|(user_id, articles)| UserHistory {
            user_id: user_id.to_string(),
            article_ids: articles.into_iter().map(String::from).collect(),
            window,
        })
        .collect())
}

/// Raw in-window pageview counts per user (repeat views all count).
pub fn pageview_counts(events: &[Event], window: (i64, i64)) -> BTreeMap<String, usize> {
    let (start, end) = window;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for ev in events {
        if ev.timestamp >= start && ev.timestamp < end {
            *counts.entry(ev.user_id.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Mean of the theta vectors of the history's resolvable articles.
///
/// Articles missing from `doc_topics` are skipped; returns `None` when no
/// article resolves (the caller drops the user and counts the warning).
pub fn build_raw_profile(
    history: &UserHistory,
    doc_topics: &HashMap<&str, &[f64]>,
) -> Option<Vec<f64>> {
    let mut sum: Option<Vec<f64>> = None;
    let mut count = 0usize;
    for id in &history.article_ids {
        let Some(theta) = doc_topics.get(id.as_str()) else {
            continue;
        };
        match &mut sum {
            None => sum = Some(theta.to_vec()),
            Some(acc) => {
                for (a, &t) in acc.iter_mut().zip(theta.iter()) {
                    *a += t;
                }
            }
        }
        count += 1;
    }
    sum.map(|mut acc| {
        for a in &mut acc {
            *a /= count as f64;
        }
        acc
    })
}

/// Standardize raw profiles per topic dimension across the population.
///
/// Requires at least two users. Zero-variance dimensions map to all-zeros
/// and are reported in the returned stats.
pub fn standardize_profiles(
    raw: &[(String, Vec<f64>)],
) -> Result<(Vec<UserProfile>, StandardizationStats)> {
    if raw.len() < 2 {
        return Err(Error::TooFewUsers(raw.len()));
    }
    let dims = raw[0].1.len();
    for (_, v) in raw {
        if v.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: v.len(),
            });
        }
    }

    let mut stats = Vec::with_capacity(dims);
    let mut degenerate = Vec::new();
    let mut column = vec![0.0f64; raw.len()];
    for d in 0..dims {
        for (i, (_, v)) in raw.iter().enumerate() {
            column[i] = v[d];
        }
        let (mean, std) = population_stats(&column);
        if std <= 1e-12 * mean.abs().max(1.0) {
            degenerate.push(d);
            stats.push(DimStats { mean, std: 0.0 });
        } else {
            stats.push(DimStats { mean, std });
        }
    }
    let stats = StandardizationStats {
        dims: stats,
        degenerate,
    };

    let profiles = raw
        .iter()
        .map(|(user_id, v)| UserProfile {
            user_id: user_id.clone(),
            theta: stats.apply(v).expect("dims checked above"),
            raw_theta: v.clone(),
        })
        .collect();
    Ok((profiles, stats))
}

#[derive(Serialize)]
struct ProfileLine<'a> {
    user_id: &'a str,
    theta: &'a [f64],
}

#[derive(Deserialize)]
struct ProfileLineOwned {
    user_id: String,
    theta: Vec<f64>,
}

/// Write `profiles.jsonl` (standardized vectors) and `standardization.json`.
pub fn save_profiles(
    dir: &Path,
    profiles: &[UserProfile],
    stats: &StandardizationStats,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;

    let path = dir.join("profiles.jsonl");
    let file = File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    for p in profiles {
        serde_json::to_writer(
            &mut w,
            &ProfileLine {
                user_id: &p.user_id,
                theta: &p.theta,
            },
        )?;
        w.write_all(b"\n")
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;

    let stats_path = dir.join("standardization.json");
    let mut out = serde_json::to_vec_pretty(&stats.dims)?;
    out.push(b'\n');
    fs::write(&stats_path, out).map_err(|e| Error::io(stats_path.display().to_string(), e))?;
    Ok(())
}

/// Standardized (user_id, theta) rows as stored in `profiles.jsonl`.
pub type StoredProfiles = Vec<(String, Vec<f64>)>;

/// Load the profile artifact back: standardized vectors plus statistics.
pub fn load_profiles(dir: &Path) -> Result<(StoredProfiles, StandardizationStats)> {
    let stats_path = dir.join("standardization.json");
    let bytes =
        fs::read(&stats_path).map_err(|e| Error::io(stats_path.display().to_string(), e))?;
    let dims: Vec<DimStats> = serde_json::from_slice(&bytes)?;
    let degenerate = dims
        .iter()
        .enumerate()
        .filter(|(_, d)| d.std == 0.0)
        .map(|(i, _)| i)
        .collect();
    let stats = StandardizationStats { dims, degenerate };

    let path = dir.join("profiles.jsonl");
    let file = File::open(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut profiles = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ProfileLineOwned = serde_json::from_str(&line)?;
        profiles.push((parsed.user_id, parsed.theta));
    }
    Ok((profiles, stats))
}
