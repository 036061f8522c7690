//! User segmentation: bisecting k-means over standardized profiles, segment
//! descriptions, nearest-centroid assignment, and the three variant
//! pipelines (general, hot-topics, site-specific).
//!
//! Bisecting construction starts from one cluster holding every profile and
//! repeatedly 2-means-splits the cluster with the most members (ties go to
//! the lowest cluster index) until the requested number of clusters exists.
//! Segment indices start at 1; index 0 is reserved for users without a
//! recent profile.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Article, Event, LemmaMap, StopwordSet};
use crate::error::{Error, Result};
use crate::profiles::{
    build_histories, build_raw_profile, pageview_counts, standardize_profiles, DimStats,
    UserProfile,
};
use crate::topics::{train_lda, DocTopics, TopicDescription, TopicModel};

/// Which article population feeds topic training and profiling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Topics over the entire article set; profiles from windowed activity.
    General,
    /// Topics only over articles that were actually viewed in the window.
    HotTopics,
    /// Topics and profiles restricted to one site section.
    SiteSpecific(String),
}

/// One bisecting step, recorded for traceability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitRecord {
    /// Cluster index that was split.
    pub selected: usize,
    /// Its cardinality at selection time.
    pub selected_size: usize,
    /// All (cluster, size) pairs at selection time.
    pub sizes: Vec<(usize, usize)>,
    /// Index given to the new half.
    pub new_index: usize,
    /// Re-initializations needed before both halves were non-empty.
    pub retries: u32,
}

/// A trained segmentation: centroids, per-segment mean profiles,
/// assignments, and descriptions.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub k: usize,
    pub variant: Variant,
    pub num_topics: usize,
    /// Row `i` belongs to segment `i + 1`.
    pub centroids: Vec<Vec<f64>>,
    /// Mean standardized profile per segment; equals `centroids` by
    /// construction and is recomputable from assignments.
    pub seg_theta_bar: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub assignments: BTreeMap<String, usize>,
    /// Per segment: descriptions of topics above the global average,
    /// ordered by descending segment mean.
    pub descriptions: Vec<Vec<TopicDescription>>,
    pub split_trace: Vec<SplitRecord>,
    /// Training-time standardization, persisted so daily scoring maps raw
    /// profiles into the same space as the centroids.
    pub standardization: Vec<DimStats>,
}

/// A user's segment; 0 is the cold-start segment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SegmentAssignment {
    pub user_id: String,
    pub segment: usize,
}

const SPLIT_RETRIES: u32 = 3;
/// Restarts per bisection; the lowest-WCSS split wins.
const SPLIT_INITS: usize = 8;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_of(points: &[&[f64]]) -> Vec<f64> {
    let dims = points[0].len();
    let mut mean = vec![0.0; dims];
    for p in points {
        for (m, &v) in mean.iter_mut().zip(p.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= points.len() as f64;
    }
    mean
}

/// One 2-means attempt: seeded init from two distinct member points, Lloyd
/// iterations until fixpoint or `inner_iters`. Returns the per-point half
/// assignment and its within-split WCSS, or `None` when a half came up
/// empty or no two distinct points exist.
fn two_means(
    points: &[&[f64]],
    inner_iters: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<usize>, f64)> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let first = rng.random_range(0..n);
    let mut second = None;
    for _ in 0..32 {
        let cand = rng.random_range(0..n);
        if points[cand] != points[first] {
            second = Some(cand);
            break;
        }
    }
    let second = second.or_else(|| (0..n).find(|&i| points[i] != points[first]))?;

    let mut centers = [points[first].to_vec(), points[second].to_vec()];
    let mut assignment = vec![0usize; n];
    for _ in 0..inner_iters {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let side = if sq_dist(p, &centers[1]) < sq_dist(p, &centers[0]) {
                1
            } else {
                0
            };
            if assignment[i] != side {
                assignment[i] = side;
                changed = true;
            }
        }
        let halves: [Vec<&[f64]>; 2] = [
            points
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == 0)
                .map(|(p, _)| *p)
                .collect(),
            points
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == 1)
                .map(|(p, _)| *p)
                .collect(),
        ];
        if halves[0].is_empty() || halves[1].is_empty() {
            return None;
        }
        centers = [mean_of(&halves[0]), mean_of(&halves[1])];
        if !changed {
            break;
        }
    }
    let wcss = points
        .iter()
        .zip(&assignment)
        .map(|(p, &side)| sq_dist(p, &centers[side]))
        .sum();
    Some((assignment, wcss))
}

struct Cluster {
    index: usize,
    members: Vec<usize>,
    splittable: bool,
}

/// Divisive clustering of standardized profiles into exactly `k` non-empty
/// segments. Deterministic under `seed`.
pub fn bisecting_kmeans(
    profiles: &[UserProfile],
    k: usize,
    seed: u64,
    inner_iters: usize,
) -> Result<Segmentation> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if profiles.len() < k {
        return Err(Error::TooFewProfiles {
            have: profiles.len(),
            need: k,
        });
    }
    let dims = profiles[0].theta.len();
    for p in profiles {
        if p.theta.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: p.theta.len(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clusters = vec![Cluster {
        index: 1,
        members: (0..profiles.len()).collect(),
        splittable: true,
    }];
    let mut trace = Vec::new();

    while clusters.len() < k {
        // largest splittable cluster; ties by lowest index
        let Some(pos) = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.splittable)
            .max_by(|(_, a), (_, b)| {
                a.members
                    .len()
                    .cmp(&b.members.len())
                    .then(b.index.cmp(&a.index))
            })
            .map(|(i, _)| i)
        else {
            return Err(Error::UnsplittableClusters { need: k });
        };

        let sizes: Vec<(usize, usize)> = clusters
            .iter()
            .map(|c| (c.index, c.members.len()))
            .collect();
        let points: Vec<&[f64]> = clusters[pos]
            .members
            .iter()
            .map(|&i| profiles[i].theta.as_slice())
            .collect();

        // restart the 2-means a few times and keep the best split; empty
        // halves count against the retry budget before the split is abandoned
        let mut split: Option<(Vec<usize>, f64)> = None;
        let mut retries = 0u32;
        let mut successes = 0usize;
        while successes < SPLIT_INITS && retries <= SPLIT_RETRIES {
            match two_means(&points, inner_iters, &mut rng) {
                Some((assignment, wcss)) => {
                    successes += 1;
                    if split.as_ref().is_none_or(|(_, best)| wcss < *best) {
                        split = Some((assignment, wcss));
                    }
                }
                None => retries += 1,
            }
        }
        let split = split.map(|(assignment, _)| assignment);

        match split {
            None => {
                clusters[pos].splittable = false;
            }
            Some(assignment) => {
                let members = std::mem::take(&mut clusters[pos].members);
                let (keep, spun): (Vec<usize>, Vec<usize>) = members
                    .into_iter()
                    .zip(&assignment)
                    .fold((Vec::new(), Vec::new()), |(mut a, mut b), (m, &side)| {
                        if side == 0 {
                            a.push(m);
                        } else {
                            b.push(m);
                        }
                        (a, b)
                    });
                let new_index = clusters.len() + 1;
                trace.push(SplitRecord {
                    selected: clusters[pos].index,
                    selected_size: keep.len() + spun.len(),
                    sizes,
                    new_index,
                    retries,
                });
                clusters[pos].members = keep;
                clusters[pos].splittable = true;
                clusters.push(Cluster {
                    index: new_index,
                    members: spun,
                    splittable: true,
                });
            }
        }
    }

    clusters.sort_by_key(|c| c.index);
    let mut centroids = Vec::with_capacity(k);
    let mut sizes = Vec::with_capacity(k);
    let mut assignments = BTreeMap::new();
    for c in &clusters {
        let points: Vec<&[f64]> = c.members.iter().map(|&i| profiles[i].theta.as_slice()).collect();
        centroids.push(mean_of(&points));
        sizes.push(c.members.len());
        for &i in &c.members {
            assignments.insert(profiles[i].user_id.clone(), c.index);
        }
    }

    Ok(Segmentation {
        k,
        variant: Variant::General,
        num_topics: dims,
        seg_theta_bar: centroids.clone(),
        centroids,
        sizes,
        assignments,
        descriptions: Vec::new(),
        split_trace: trace,
        standardization: Vec::new(),
    })
}

/// Descriptions of the topics a segment cares about more than the global
/// average: every topic with a strictly positive standardized segment mean,
/// ordered by descending mean.
pub fn describe_segment(
    seg: &Segmentation,
    k: usize,
    model: &TopicModel,
) -> Result<Vec<TopicDescription>> {
    if k < 1 || k > seg.k {
        return Err(Error::InvalidParameter(format!(
            "segment index {k} out of range 1..={}",
            seg.k
        )));
    }
    let row = &seg.seg_theta_bar[k - 1];
    let mut topics: Vec<(usize, f64)> = row
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(n, &v)| (n, v))
        .collect();
    topics.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    topics
        .into_iter()
        .map(|(n, _)| model.describe_topic(n))
        .collect()
}

/// Nearest-centroid assignment; users without a profile land in segment 0.
/// Ties go to the lowest segment index.
pub fn assign_user(profile: Option<&[f64]>, seg: &Segmentation) -> Result<usize> {
    let Some(theta) = profile else {
        return Ok(0);
    };
    if theta.len() != seg.num_topics {
        return Err(Error::DimensionMismatch {
            expected: seg.num_topics,
            got: theta.len(),
        });
    }
    let mut best = 1usize;
    let mut best_dist = f64::INFINITY;
    for (i, c) in seg.centroids.iter().enumerate() {
        let d = sq_dist(theta, c);
        if d < best_dist {
            best_dist = d;
            best = i + 1;
        }
    }
    Ok(best)
}

/// Inputs shared by the three segmentation variant pipelines.
#[derive(Debug, Clone)]
pub struct VariantConfig {
    pub stopwords: StopwordSet,
    pub lemmas: LemmaMap,
    pub min_doc_count: usize,
    pub max_doc_fraction: f64,
    pub num_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub topic_seed: u64,
    /// Profile window `[start, end)`, UTC seconds.
    pub window: (i64, i64),
    /// Pageview floor for a user to enter clustering.
    pub min_pageviews_train: usize,
    /// Distinct-article floor for a user to be scored at all.
    pub min_articles_score: usize,
    pub k: usize,
    pub cluster_seed: u64,
    pub inner_iters: usize,
}

/// Everything a variant pipeline produces.
#[derive(Debug)]
pub struct VariantOutput {
    pub model: TopicModel,
    pub doc_topics: Vec<DocTopics>,
    pub segmentation: Segmentation,
    pub train_profiles: Vec<UserProfile>,
    /// Users dropped because none of their articles had a theta vector.
    pub dropped_users: usize,
}

/// Run one segmentation variant end to end: select the article population,
/// train topics, profile and standardize training users, cluster, then
/// score the remaining profiled users by nearest centroid.
pub fn run_variant_pipeline(
    variant: &Variant,
    articles: &[Article],
    events: &[Event],
    cfg: &VariantConfig,
) -> Result<VariantOutput> {
    let selected: Vec<&Article> = match variant {
        Variant::General => articles.iter().collect(),
        Variant::HotTopics => {
            let viewed: HashSet<&str> = events
                .iter()
                .filter(|e| e.timestamp >= cfg.window.0 && e.timestamp < cfg.window.1)
                .map(|e| e.article_id.as_str())
                .collect();
            articles.iter().filter(|a| viewed.contains(a.id.as_str())).collect()
        }
        Variant::SiteSpecific(section) => {
            let subset: Vec<&Article> = articles
                .iter()
                .filter(|a| a.section.as_deref() == Some(section.as_str()))
                .collect();
            if subset.is_empty() {
                return Err(Error::UnknownSection(section.clone()));
            }
            subset
        }
    };

    let owned: Vec<Article> = selected.iter().map(|a| (*a).clone()).collect();
    let (corpus, _report) = corpus::preprocess(
        &owned,
        &cfg.stopwords,
        &cfg.lemmas,
        cfg.min_doc_count,
        cfg.max_doc_fraction,
    )?;
    let trained = train_lda(
        &corpus,
        cfg.num_topics,
        cfg.alpha,
        cfg.beta,
        cfg.iterations,
        cfg.topic_seed,
    )?;

    let selected_ids: HashSet<&str> = selected.iter().map(|a| a.id.as_str()).collect();
    let relevant: Vec<Event> = events
        .iter()
        .filter(|e| selected_ids.contains(e.article_id.as_str()))
        .cloned()
        .collect();

    let theta_by_id: HashMap<&str, &[f64]> = trained
        .doc_topics
        .iter()
        .map(|dt| (dt.article_id.as_str(), dt.theta.as_slice()))
        .collect();

    let pageviews = pageview_counts(&relevant, cfg.window);
    let histories = build_histories(&relevant, cfg.window, cfg.min_articles_score)?;

    let mut train_raw = Vec::new();
    let mut score_raw = Vec::new();
    let mut dropped_users = 0usize;
    for h in &histories {
        let Some(raw) = build_raw_profile(h, &theta_by_id) else {
            dropped_users += 1;
            continue;
        };
        if pageviews.get(&h.user_id).copied().unwrap_or(0) >= cfg.min_pageviews_train {
            train_raw.push((h.user_id.clone(), raw));
        } else {
            score_raw.push((h.user_id.clone(), raw));
        }
    }

    let (train_profiles, stats) = standardize_profiles(&train_raw)?;
    let mut segmentation = bisecting_kmeans(&train_profiles, cfg.k, cfg.cluster_seed, cfg.inner_iters)?;
    segmentation.variant = variant.clone();
    segmentation.standardization = stats.dims.clone();

    for (user_id, raw) in &score_raw {
        let theta = stats.apply(raw)?;
        let segment = assign_user(Some(&theta), &segmentation)?;
        segmentation.assignments.insert(user_id.clone(), segment);
    }

    segmentation.descriptions = (1..=cfg.k)
        .map(|k| describe_segment(&segmentation, k, &trained.model))
        .collect::<Result<Vec<_>>>()?;

    Ok(VariantOutput {
        model: trained.model,
        doc_topics: trained.doc_topics,
        segmentation,
        train_profiles,
        dropped_users,
    })
}

#[derive(Serialize, Deserialize)]
struct SegmentsFile {
    k: usize,
    variant: Variant,
    num_topics: usize,
    centroids: Vec<Vec<f64>>,
    seg_theta_bar: Vec<Vec<f64>>,
    sizes: Vec<usize>,
    descriptions: Vec<Vec<TopicDescription>>,
    split_trace: Vec<SplitRecord>,
    standardization: Vec<DimStats>,
}

/// Write `segments.json` and `assignments.jsonl` under `dir`.
pub fn save_segmentation(dir: &Path, seg: &Segmentation) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let file = SegmentsFile {
        k: seg.k,
        variant: seg.variant.clone(),
        num_topics: seg.num_topics,
        centroids: seg.centroids.clone(),
        seg_theta_bar: seg.seg_theta_bar.clone(),
        sizes: seg.sizes.clone(),
        descriptions: seg.descriptions.clone(),
        split_trace: seg.split_trace.clone(),
        standardization: seg.standardization.clone(),
    };
    let path = dir.join("segments.json");
    let mut out = serde_json::to_vec_pretty(&file)?;
    out.push(b'\n');
    fs::write(&path, out).map_err(|e| Error::io(path.display().to_string(), e))?;

    let path = dir.join("assignments.jsonl");
    let f = File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(f);
    for (user_id, segment) in &seg.assignments {
        serde_json::to_writer(
            &mut w,
            &SegmentAssignment {
                user_id: user_id.clone(),
                segment: *segment,
            },
        )?;
        w.write_all(b"\n")
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Load a segmentation artifact written by [`save_segmentation`].
pub fn load_segmentation(dir: &Path) -> Result<Segmentation> {
    let path = dir.join("segments.json");
    let bytes = fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: SegmentsFile = serde_json::from_slice(&bytes)?;

    let path = dir.join("assignments.jsonl");
    let f = File::open(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut assignments = BTreeMap::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let a: SegmentAssignment = serde_json::from_str(&line)?;
        assignments.insert(a.user_id, a.segment);
    }

    Ok(Segmentation {
        k: file.k,
        variant: file.variant,
        num_topics: file.num_topics,
        centroids: file.centroids,
        seg_theta_bar: file.seg_theta_bar,
        sizes: file.sizes,
        assignments,
        descriptions: file.descriptions,
        split_trace: file.split_trace,
        standardization: file.standardization,
    })
}
