//! Synthetic fixtures: planted-topic corpora and alignment scoring.
//!
//! These generators produce desk-scale data with known ground truth, used by
//! the test suites and by the CLI examples. Generated words are lowercase
//! alphabetic and at least three characters long, so they survive the text
//! preprocessing filters unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Article, TokenizedCorpus, TokenizedDoc, Vocabulary};
use crate::simulator::{MeanSource, RewardLaw, RewardNoise, SimulationScenario};

fn letters(mut n: usize) -> String {
    let mut s = String::new();
    for _ in 0..3 {
        s.push((b'a' + (n % 26) as u8) as char);
        n /= 26;
    }
    s
}

/// Deterministic word for (topic, index); disjoint across topics.
pub fn planted_word(topic: usize, index: usize) -> String {
    format!("z{}{}", letters(topic), letters(index))
}

/// Generate a corpus of `groups` planted topics over disjoint word sets.
///
/// Each document draws all its tokens uniformly from one topic's word set.
/// Returns the indexed corpus and the generating topic label per document.
pub fn planted_corpus(
    groups: usize,
    words_per_topic: usize,
    docs_per_topic: usize,
    tokens_per_doc: usize,
    seed: u64,
) -> (TokenizedCorpus, Vec<usize>) {
    let mut terms = Vec::new();
    for g in 0..groups {
        for w in 0..words_per_topic {
            terms.push(planted_word(g, w));
        }
    }
    terms.sort();
    let vocabulary = Vocabulary {
        doc_freq: vec![docs_per_topic as u32; terms.len()],
        terms,
    };
    let index = vocabulary.term_index();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for g in 0..groups {
        for d in 0..docs_per_topic {
            let tokens = (0..tokens_per_doc)
                .map(|_| {
                    let w = rng.random_range(0..words_per_topic);
                    index[planted_word(g, w).as_str()]
                })
                .collect();
            docs.push(TokenizedDoc {
                article_id: format!("doc-{g}-{d}"),
                tokens,
            });
            labels.push(g);
        }
    }
    (TokenizedCorpus { docs, vocabulary }, labels)
}

/// Generate raw articles whose text is a planted-topic word stream, for
/// exercising the full ingest → tokenize → train pipeline.
///
/// Publication days are drawn randomly from `days` consecutive days starting
/// at `start_epoch` (UTC seconds), so the per-day group mix fluctuates and
/// daily topic trends stay non-degenerate. Sections cycle through
/// `sections`.
#[allow(clippy::too_many_arguments)]
pub fn planted_articles(
    groups: usize,
    words_per_topic: usize,
    docs_per_topic: usize,
    tokens_per_doc: usize,
    start_epoch: i64,
    days: i64,
    sections: &[&str],
    seed: u64,
) -> (Vec<Article>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut articles = Vec::new();
    let mut labels = Vec::new();
    let mut i = 0usize;
    for g in 0..groups {
        for d in 0..docs_per_topic {
            let words: Vec<String> = (0..tokens_per_doc)
                .map(|_| planted_word(g, rng.random_range(0..words_per_topic)))
                .collect();
            let day = rng.random_range(0..days.max(1));
            articles.push(Article {
                id: format!("doc-{g}-{d}"),
                text: words.join(" "),
                section: sections.get(i % sections.len().max(1)).map(|s| s.to_string()),
                published_at: start_epoch + day * 86_400 + 3_600,
                title: Some(format!("Story {g}-{d}")),
            });
            labels.push(g);
            i += 1;
        }
    }
    (articles, labels)
}

/// Best document-label accuracy over all bijective topic↔label matchings.
pub fn best_permutation_accuracy(assigned: &[usize], labels: &[usize], groups: usize) -> f64 {
    assert_eq!(assigned.len(), labels.len());
    let mut perm: Vec<usize> = (0..groups).collect();
    let mut best = 0.0f64;
    heap_permutations(&mut perm, groups, &mut |p| {
        let hits = assigned
            .iter()
            .zip(labels)
            .filter(|&(&a, &l)| a < groups && p[a] == l)
            .count();
        best = best.max(hits as f64 / labels.len() as f64);
    });
    best
}

fn heap_permutations(arr: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        visit(arr);
        return;
    }
    for i in 0..k {
        heap_permutations(arr, k - 1, visit);
        if k.is_multiple_of(2) {
            arr.swap(i, k - 1);
        } else {
            arr.swap(0, k - 1);
        }
    }
}

/// Within-cluster sum of squared distances to cluster means for a given
/// assignment of points to `k` clusters.
pub fn wcss(points: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let dims = points[0].len();
    let mut sums = vec![vec![0.0f64; dims]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignment) {
        counts[a] += 1;
        for (s, &v) in sums[a].iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    let mut total = 0.0;
    for (p, &a) in points.iter().zip(assignment) {
        total += p
            .iter()
            .zip(&sums[a])
            .map(|(&v, &s)| {
                let d = v - s / counts[a] as f64;
                d * d
            })
            .sum::<f64>();
    }
    total
}

/// Brute-force optimal within-cluster sum of squares over every partition of
/// the points into exactly `k` non-empty clusters. Exponential; intended for
/// instances of at most ~12 points.
pub fn optimal_wcss_exhaustive(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    assert!(n >= k && k >= 1);
    assert!(k.pow(n as u32) <= 20_000_000, "instance too large to enumerate");
    let mut best = f64::INFINITY;
    let mut assignment = vec![0usize; n];
    loop {
        let mut used = vec![false; k];
        for &a in &assignment {
            used[a] = true;
        }
        if used.iter().all(|&u| u) {
            best = best.min(wcss(points, &assignment, k));
        }
        // next assignment in base-k counting order
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            assignment[i] += 1;
            if assignment[i] < k {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}

/// Scenario with a single everlasting item: no policy has a choice to make,
/// so every policy earns exactly the same reward stream.
pub fn single_item_scenario() -> SimulationScenario {
    SimulationScenario {
        horizon: 200,
        traffic_per_trial: 2.0,
        pool_size: 1,
        article_lifetime: 1_000_000,
        num_segments: 2,
        segment_mix: vec![0.5, 0.5],
        reward_law: RewardLaw {
            noise: RewardNoise::Bernoulli,
            means: MeanSource::Cycle {
                table: vec![vec![0.7, 0.4]],
            },
            drift_period: None,
        },
    }
}

/// Two segments with exactly opposite preferences over a mirrored item pair,
/// plus three uniformly mediocre filler items. Segment 0 earns 1.0 on the
/// first item and 0.0 on the second; segment 1 is reversed; fillers pay 0.2
/// to both. The fillers keep the global and random baselines apart: with
/// only the mirrored pair every policy would average the same 0.5 per view.
pub fn mirrored_pair_scenario(horizon: u64) -> SimulationScenario {
    SimulationScenario {
        horizon,
        traffic_per_trial: 2.0,
        pool_size: 5,
        article_lifetime: 1_000_000,
        num_segments: 2,
        segment_mix: vec![0.5, 0.5],
        reward_law: RewardLaw {
            noise: RewardNoise::Bernoulli,
            means: MeanSource::Cycle {
                table: vec![
                    vec![1.0, 0.0],
                    vec![0.0, 1.0],
                    vec![0.2, 0.2],
                    vec![0.2, 0.2],
                    vec![0.2, 0.2],
                ],
            },
            drift_period: None,
        },
    }
}

/// Single-segment scenario whose item means re-randomize every 50 trials;
/// long memories chase stale estimates here.
pub fn drifting_scenario(horizon: u64) -> SimulationScenario {
    SimulationScenario {
        horizon,
        traffic_per_trial: 5.0,
        pool_size: 10,
        article_lifetime: 1_000_000,
        num_segments: 1,
        segment_mix: vec![1.0],
        reward_law: RewardLaw {
            noise: RewardNoise::Bernoulli,
            means: MeanSource::Uniform { low: 0.0, high: 1.0 },
            drift_period: Some(50),
        },
    }
}

/// The drifting scenario with drift disabled; longer memories can only help.
pub fn stationary_scenario(horizon: u64) -> SimulationScenario {
    let mut scenario = drifting_scenario(horizon);
    scenario.reward_law.drift_period = None;
    scenario
}

/// A planted clustering instance: `k` well-separated clusters in `dims`
/// dimensions. Cluster centers sit `2 * separation` apart while points
/// scatter at most 0.5 per coordinate around their center, so the
/// center-gap-to-spread ratio is at least `separation` for separation >= 1.
/// Points are distributed round-robin, so every cluster is non-empty when
/// `n_points >= k`. Returns (points, labels).
pub fn planted_cluster_instance(
    k: usize,
    n_points: usize,
    dims: usize,
    separation: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    assert!(n_points >= k && dims >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points);
    let mut labels = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let c = i % k;
        let mut p: Vec<f64> = (0..dims).map(|_| rng.random::<f64>() - 0.5).collect();
        p[0] += c as f64 * 2.0 * separation;
        points.push(p);
        labels.push(c);
    }
    (points, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_words_are_alphabetic_and_disjoint() {
        let a = planted_word(0, 0);
        let b = planted_word(1, 0);
        assert_ne!(a, b);
        assert!(a.chars().all(char::is_alphabetic));
        assert!(a.len() >= 3);
    }

    #[test]
    fn planted_corpus_shape() {
        let (corpus, labels) = planted_corpus(3, 10, 20, 15, 1);
        assert_eq!(corpus.docs.len(), 60);
        assert_eq!(labels.len(), 60);
        assert_eq!(corpus.vocabulary.len(), 30);
        assert!(corpus.docs.iter().all(|d| d.tokens.len() == 15));
    }

    #[test]
    fn permutation_accuracy_finds_relabeling() {
        // assigned is labels with 0<->1 swapped; perfect under permutation
        let labels = vec![0, 0, 1, 1, 2];
        let assigned = vec![1, 1, 0, 0, 2];
        assert_eq!(best_permutation_accuracy(&assigned, &labels, 3), 1.0);
    }

    #[test]
    fn exhaustive_wcss_finds_obvious_partition() {
        let points = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 0.0],
            vec![10.0, 1.0],
        ];
        // optimal 2-partition is the left/right pairs: each pair contributes
        // 2 * 0.5^2 = 0.5
        let best = optimal_wcss_exhaustive(&points, 2);
        assert!((best - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planted_instance_is_separated_and_covers_all_clusters() {
        let (points, labels) = planted_cluster_instance(3, 10, 2, 5.0, 1);
        assert_eq!(points.len(), 10);
        for c in 0..3 {
            assert!(labels.contains(&c));
        }
        // planted partition beats any coarser mixing by a wide margin
        let planted = wcss(&points, &labels, 3);
        let lumped = wcss(&points, &[0; 10], 1);
        assert!(planted * 10.0 < lumped);
    }
}
