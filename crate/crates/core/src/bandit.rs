//! Contextual ε-greedy bandit over a sliding reward window.
//!
//! Knowledge is keyed by (segment, placement) context and item. Estimates
//! are windowed sample means recomputed from the retained event log, so they
//! match a brute-force recomputation exactly: the window is anchored at the
//! newest recorded timestamp, and an event is in scope while
//! `newest - timestamp <= window`. Older events are evicted lazily.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The recommendation context: a user segment and a placement section.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Context {
    pub segment: usize,
    pub placement: String,
}

impl Context {
    pub fn new(segment: usize, placement: impl Into<String>) -> Self {
        Context {
            segment,
            placement: placement.into(),
        }
    }
}

/// One realized payoff for an item shown in a context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardEvent {
    pub segment: usize,
    pub placement: String,
    pub item_id: String,
    /// UTC epoch seconds.
    pub timestamp: i64,
    pub reward: f64,
}

impl RewardEvent {
    pub fn context(&self) -> Context {
        Context::new(self.segment, self.placement.clone())
    }
}

/// Sliding-window reward statistics per (context, item).
#[derive(Debug, Clone)]
pub struct BanditKnowledge {
    /// Knowledge window l as a wall-clock duration, seconds.
    window: i64,
    /// Exploration probability.
    epsilon: f64,
    newest: Option<i64>,
    events: HashMap<Context, HashMap<String, Vec<(i64, f64)>>>,
}

impl BanditKnowledge {
    pub fn new(window_secs: i64, epsilon: f64) -> Result<Self> {
        if window_secs <= 0 {
            return Err(Error::InvalidParameter("window must be positive".into()));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter("epsilon must be in [0, 1]".into()));
        }
        Ok(BanditKnowledge {
            window: window_secs,
            epsilon,
            newest: None,
            events: HashMap::new(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn window_secs(&self) -> i64 {
        self.window
    }

    pub fn newest_timestamp(&self) -> Option<i64> {
        self.newest
    }

    /// Record one reward observation. Rejects non-finite or negative rewards.
    pub fn record_reward(&mut self, event: RewardEvent) -> Result<()> {
        if !event.reward.is_finite() || event.reward < 0.0 {
            return Err(Error::InvalidReward(event.reward));
        }
        self.newest = Some(self.newest.map_or(event.timestamp, |n| n.max(event.timestamp)));
        let cutoff = self.newest.unwrap() - self.window;
        let per_item = self
            .events
            .entry(event.context())
            .or_default()
            .entry(event.item_id)
            .or_default();
        per_item.push((event.timestamp, event.reward));
        // evict what can never re-enter the window; `newest` only grows
        if per_item.first().is_some_and(|&(ts, _)| ts < cutoff) {
            per_item.retain(|&(ts, _)| ts >= cutoff);
        }
        Ok(())
    }

    /// Windowed mean and event count for (context, item), or `None` when no
    /// in-window data exists. The mean sums rewards in arrival order.
    pub fn stats(&self, context: &Context, item_id: &str) -> Option<(f64, usize)> {
        let newest = self.newest?;
        let cutoff = newest - self.window;
        let events = self.events.get(context)?.get(item_id)?;
        let mut sum = 0.0;
        let mut count = 0usize;
        for &(ts, reward) in events {
            if ts >= cutoff {
                sum += reward;
                count += 1;
            }
        }
        (count > 0).then(|| (sum / count as f64, count))
    }

    /// Windowed mean reward, or `None` for "no data".
    pub fn estimate(&self, context: &Context, item_id: &str) -> Option<f64> {
        self.stats(context, item_id).map(|(mean, _)| mean)
    }

    /// Contexts with any retained events, in sorted order.
    pub fn contexts(&self) -> Vec<Context> {
        let mut ctxs: Vec<Context> = self.events.keys().cloned().collect();
        ctxs.sort();
        ctxs
    }

    /// Write one `item_id,count,mean_reward` CSV per context under `dir`.
    pub fn write_snapshot(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        for ctx in self.contexts() {
            let sanitized: String = ctx
                .placement
                .chars()
                .map(|c| if c.is_alphanumeric() { c } else { '_' })
                .collect();
            let path = dir.join(format!("knowledge-s{}-{}.csv", ctx.segment, sanitized));
            let file = File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
            let mut w = BufWriter::new(file);
            writeln!(w, "item_id,count,mean_reward")
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            let mut items: Vec<&String> = self.events[&ctx].keys().collect();
            items.sort();
            for item in items {
                if let Some((mean, count)) = self.stats(&ctx, item) {
                    writeln!(w, "{item},{count},{mean}")
                        .map_err(|e| Error::io(path.display().to_string(), e))?;
                }
            }
            w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        Ok(())
    }
}

/// ε-greedy ranked list over `pool`, built position by position without
/// replacement.
///
/// Exploit picks the highest windowed mean among remaining items; items with
/// no data rank below any estimated item; ties prefer the larger event
/// count, then the lexicographically smaller item id. Explore picks a
/// uniform random remaining item. Each position flips its own ε coin.
pub fn select<R: Rng>(
    knowledge: &BanditKnowledge,
    context: &Context,
    pool: &[String],
    list_len: usize,
    rng: &mut R,
) -> Result<Vec<String>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if list_len < 1 {
        return Err(Error::InvalidParameter("list_len must be >= 1".into()));
    }
    let mut remaining: Vec<&String> = pool.iter().collect();
    let mut out = Vec::with_capacity(list_len.min(pool.len()));
    while !remaining.is_empty() && out.len() < list_len {
        let pick = if knowledge.epsilon > 0.0 && rng.random::<f64>() < knowledge.epsilon {
            rng.random_range(0..remaining.len())
        } else {
            best_index(knowledge, context, &remaining)
        };
        out.push(remaining.swap_remove(pick).clone());
    }
    Ok(out)
}

fn best_index(knowledge: &BanditKnowledge, context: &Context, items: &[&String]) -> usize {
    let mut best = 0usize;
    let mut best_key = rank_key(knowledge, context, items[0]);
    for (i, item) in items.iter().enumerate().skip(1) {
        let key = rank_key(knowledge, context, item);
        if better(&key, items[i], &best_key, items[best]) {
            best = i;
            best_key = key;
        }
    }
    best
}

type RankKey = Option<(f64, usize)>;

/// Is (a_key, a_id) preferable to (b_key, b_id)?
fn better(a_key: &RankKey, a_id: &str, b_key: &RankKey, b_id: &str) -> bool {
    match (a_key, b_key) {
        (Some((ae, ac)), Some((be, bc))) => {
            if ae != be {
                return ae > be;
            }
            if ac != bc {
                return ac > bc;
            }
            a_id < b_id
        }
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => a_id < b_id,
    }
}

fn rank_key(knowledge: &BanditKnowledge, context: &Context, item: &str) -> RankKey {
    knowledge.stats(context, item)
}

/// Uniform random ranking without replacement (the A/B baseline policy).
pub fn random_policy<R: Rng>(pool: &[String], list_len: usize, rng: &mut R) -> Result<Vec<String>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if list_len < 1 {
        return Err(Error::InvalidParameter("list_len must be >= 1".into()));
    }
    let mut remaining: Vec<&String> = pool.iter().collect();
    let mut out = Vec::with_capacity(list_len.min(pool.len()));
    while !remaining.is_empty() && out.len() < list_len {
        let pick = rng.random_range(0..remaining.len());
        out.push(remaining.swap_remove(pick).clone());
    }
    Ok(out)
}

/// Items available for recommendation, with availability intervals
/// `[from, until)`; `until == None` means open-ended.
#[derive(Debug, Clone, Default)]
pub struct ItemPool {
    entries: BTreeMap<String, (i64, Option<i64>)>,
}

impl ItemPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, item_id: impl Into<String>, from: i64, until: Option<i64>) {
        self.entries.insert(item_id.into(), (from, until));
    }

    pub fn remove(&mut self, item_id: &str) {
        self.entries.remove(item_id);
    }

    /// Item ids available at `now`, in sorted order.
    pub fn available_at(&self, now: i64) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(_, &(from, until))| now >= from && until.is_none_or(|u| now < u))
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A raw user-item interaction, input to the pluggable reward function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Interaction {
    pub pageview: bool,
    pub dwell_seconds: f64,
    pub bounce: bool,
}

/// Maps raw interactions to non-negative payoffs. The production KPI is a
/// business secret, so deployments plug their own implementation here.
pub trait RewardFn {
    fn reward(&self, interaction: &Interaction) -> f64;
}

/// Stand-in engagement KPI:
/// `pageview (1.0) + min(dwell_seconds, 300)/300 − bounce (0.5)`,
/// clamped at zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceKpi;

impl RewardFn for ReferenceKpi {
    fn reward(&self, interaction: &Interaction) -> f64 {
        let pageview = if interaction.pageview { 1.0 } else { 0.0 };
        let dwell = interaction.dwell_seconds.clamp(0.0, 300.0) / 300.0;
        let bounce = if interaction.bounce { 0.5 } else { 0.0 };
        (pageview + dwell - bounce).max(0.0)
    }
}
