//! Publishing insights: find segments whose daily performance falls more
//! than one population standard deviation below the cross-segment mean, and
//! report their interest topics together with the articles that historically
//! performed best for them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segments::Segmentation;
use crate::util::population_stats;

/// One user-level reward observation (input JSONL line).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserReward {
    pub user_id: String,
    pub article_id: String,
    /// UTC epoch seconds.
    pub timestamp: i64,
    pub reward: f64,
}

/// Mean per-user daily performance of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPerformance {
    pub segment: usize,
    /// Mean of per-user reward sums over the segment's active users.
    pub mean_performance: f64,
    /// Active users that day.
    pub member_count: usize,
}

/// Flags raised while aggregating a day.
#[derive(Debug, Clone, Default)]
pub struct DayReport {
    /// Users outside segments 1..=K (cold-start or unassigned), skipped.
    pub cold_start_users: usize,
    /// Known segments with no active member that day, omitted.
    pub inactive_segments: Vec<usize>,
}

fn day_bounds(day: NaiveDate) -> (i64, i64) {
    let start = day
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp();
    (start, start + 86_400)
}

/// Read user-level reward events from a JSONL file.
pub fn load_user_rewards(path: &Path) -> Result<Vec<UserReward>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str::<UserReward>(&line)?);
    }
    Ok(out)
}

/// Per-segment mean of per-user daily reward sums.
///
/// A user's daily performance is the sum of their rewards within the day;
/// the segment value averages over its users active that day. Users mapped
/// to segment 0 (or absent from `assignments`) are skipped and counted;
/// segments with no active member are omitted and flagged.
pub fn segment_performance(
    rewards: &[UserReward],
    assignments: &BTreeMap<String, usize>,
    day: NaiveDate,
) -> (Vec<SegmentPerformance>, DayReport) {
    let (start, end) = day_bounds(day);
    let mut per_user: BTreeMap<&str, f64> = BTreeMap::new();
    for r in rewards {
        if r.timestamp >= start && r.timestamp < end {
            *per_user.entry(r.user_id.as_str()).or_insert(0.0) += r.reward;
        }
    }

    let mut report = DayReport::default();
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (user, total) in per_user {
        match assignments.get(user) {
            Some(&segment) if segment >= 1 => {
                let entry = sums.entry(segment).or_insert((0.0, 0));
                entry.0 += total;
                entry.1 += 1;
            }
            _ => report.cold_start_users += 1,
        }
    }

    let known_segments: BTreeSet<usize> =
        assignments.values().copied().filter(|&s| s >= 1).collect();
    report.inactive_segments = known_segments
        .iter()
        .filter(|s| !sums.contains_key(s))
        .copied()
        .collect();

    let perfs = sums
        .into_iter()
        .map(|(segment, (sum, count))| SegmentPerformance {
            segment,
            mean_performance: sum / count as f64,
            member_count: count,
        })
        .collect();
    (perfs, report)
}

/// Segments performing below mean-minus-one-population-std of the
/// per-segment means (strict inequality). Needs at least two segments.
pub fn detect_unsatisfied(perfs: &[SegmentPerformance]) -> Result<BTreeSet<usize>> {
    if perfs.len() < 2 {
        return Err(Error::TooFewSegments(perfs.len()));
    }
    let values: Vec<f64> = perfs.iter().map(|p| p.mean_performance).collect();
    let (mean, std) = population_stats(&values);
    let threshold = mean - std;
    Ok(perfs
        .iter()
        .filter(|p| p.mean_performance < threshold)
        .map(|p| p.segment)
        .collect())
}

/// Total reward each article earned per segment within `[start, end)`.
pub fn article_segment_performance(
    rewards: &[UserReward],
    assignments: &BTreeMap<String, usize>,
    window: (i64, i64),
) -> BTreeMap<String, BTreeMap<usize, f64>> {
    let mut matrix: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    for r in rewards {
        if r.timestamp < window.0 || r.timestamp >= window.1 {
            continue;
        }
        let Some(&segment) = assignments.get(&r.user_id) else {
            continue;
        };
        if segment < 1 {
            continue;
        }
        *matrix
            .entry(r.article_id.clone())
            .or_default()
            .entry(segment)
            .or_insert(0.0) += r.reward;
    }
    matrix
}

/// An article's score for one segment. `standardized` is false when the
/// article was scored in a single segment only, in which case `score` is
/// the raw per-segment performance.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticleScore {
    pub article_id: String,
    pub score: f64,
    pub standardized: bool,
}

/// Rank articles for segment `k` by per-article performance standardized
/// across segments (population std). Ties break on the article id.
pub fn top_articles_for_segment(
    matrix: &BTreeMap<String, BTreeMap<usize, f64>>,
    k: usize,
    top_n: usize,
) -> Vec<ArticleScore> {
    let mut scored = Vec::new();
    for (article_id, per_segment) in matrix {
        let Some(&own) = per_segment.get(&k) else {
            continue;
        };
        let score = if per_segment.len() >= 2 {
            let values: Vec<f64> = per_segment.values().copied().collect();
            let (mean, std) = population_stats(&values);
            ArticleScore {
                article_id: article_id.clone(),
                score: if std > 0.0 { (own - mean) / std } else { 0.0 },
                standardized: true,
            }
        } else {
            ArticleScore {
                article_id: article_id.clone(),
                score: own,
                standardized: false,
            }
        };
        scored.push(score);
    }
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.article_id.cmp(&b.article_id))
    });
    scored.truncate(top_n);
    scored
}

/// One ranked article inside an insight.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InsightArticle {
    pub id: String,
    pub title: String,
    pub score: f64,
    /// True when `score` is a raw (non-standardized) value.
    pub raw: bool,
}

/// A publishing insight for one unsatisfied segment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Insight {
    pub segment: usize,
    pub cardinality: usize,
    /// Top-word lists of the segment's above-average topics.
    pub topics: Vec<Vec<String>>,
    pub top_articles: Vec<InsightArticle>,
    #[serde(skip)]
    pub day: NaiveDate,
}

/// Deterministic plain-text rendering of one insight.
pub fn render_insight(insight: &Insight) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Unsatisfied segment {} ({} users) on {}\n",
        insight.segment, insight.cardinality, insight.day
    ));
    out.push_str("Interest topics:\n");
    if insight.topics.is_empty() {
        out.push_str("  (no distinctive topics)\n");
    } else {
        for words in &insight.topics {
            out.push_str(&format!("  - {}\n", words.join(", ")));
        }
    }
    out.push_str("Top past articles:\n");
    if insight.top_articles.is_empty() {
        out.push_str("  (no scored articles)\n");
    } else {
        for (i, a) in insight.top_articles.iter().enumerate() {
            let marker = if a.raw { ", raw" } else { "" };
            out.push_str(&format!(
                "  {}. {} (id={}, score={:.4}{})\n",
                i + 1,
                a.title,
                a.id,
                a.score,
                marker
            ));
        }
    }
    out
}

/// Build the day's insights for every unsatisfied segment.
///
/// `titles` maps article ids to display titles (missing ids fall back to the
/// id itself); `past_window_days` bounds the "articles they liked in the
/// past" lookback, ending at the end of `day`.
pub fn build_insights(
    day: NaiveDate,
    rewards: &[UserReward],
    segmentation: &Segmentation,
    titles: &HashMap<String, String>,
    top_n: usize,
    past_window_days: i64,
) -> Result<(Vec<Insight>, DayReport)> {
    let (perfs, report) = segment_performance(rewards, &segmentation.assignments, day);
    let unsatisfied = detect_unsatisfied(&perfs)?;

    let (_, day_end) = day_bounds(day);
    let window = (day_end - past_window_days * 86_400, day_end);
    let matrix = article_segment_performance(rewards, &segmentation.assignments, window);

    let insights = unsatisfied
        .into_iter()
        .map(|segment| {
            let topics = segmentation
                .descriptions
                .get(segment - 1)
                .map(|descs| descs.iter().map(|d| d.top_words.clone()).collect())
                .unwrap_or_default();
            let top_articles = top_articles_for_segment(&matrix, segment, top_n)
                .into_iter()
                .map(|a| InsightArticle {
                    title: titles.get(&a.article_id).cloned().unwrap_or_else(|| a.article_id.clone()),
                    id: a.article_id,
                    score: a.score,
                    raw: !a.standardized,
                })
                .collect();
            Insight {
                segment,
                cardinality: segmentation.sizes.get(segment - 1).copied().unwrap_or(0),
                topics,
                top_articles,
                day,
            }
        })
        .collect();
    Ok((insights, report))
}

/// Write `insights-YYYY-MM-DD.txt` and `.json` under `dir`; returns the two
/// paths. The JSON twin is an array of insight objects.
pub fn save_insights(dir: &Path, day: NaiveDate, insights: &[Insight]) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let txt_path = dir.join(format!("insights-{day}.txt"));
    let text: String = insights
        .iter()
        .map(render_insight)
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(&txt_path, text).map_err(|e| Error::io(txt_path.display().to_string(), e))?;

    let json_path = dir.join(format!("insights-{day}.json"));
    let mut bytes = serde_json::to_vec_pretty(insights)?;
    bytes.push(b'\n');
    fs::write(&json_path, bytes).map_err(|e| Error::io(json_path.display().to_string(), e))?;
    Ok((txt_path, json_path))
}
