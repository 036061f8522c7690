//! Collapsed Gibbs sampling for LDA training and fold-in inference.
//!
//! Training is single-threaded and fully determined by the seed. Final
//! phi/theta estimates come from smoothed counts of the last sweep, so two
//! runs with the same seed produce bitwise-identical models.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::TokenizedCorpus;
use crate::error::{Error, Result};
use crate::util::sample_index;

use super::{DocTopics, TopicModel};

/// Result of a full training run.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: TopicModel,
    pub doc_topics: Vec<DocTopics>,
    /// Corpus log-likelihood after each sweep, under the smoothed
    /// count estimates current at that sweep.
    pub log_likelihood: Vec<f64>,
}

/// Result of inferring a topic mixture for one document.
#[derive(Debug, Clone)]
pub struct InferOutcome {
    pub doc: DocTopics,
    /// Tokens skipped because they were not in the model vocabulary.
    pub skipped_oov: usize,
    /// True when every token was out of vocabulary (theta is uniform).
    pub all_oov: bool,
}

struct GibbsState {
    z: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<Vec<u32>>,
    topic_total: Vec<u32>,
}

impl GibbsState {
    fn init(corpus: &TokenizedCorpus, num_topics: usize, rng: &mut ChaCha8Rng) -> Self {
        use rand::Rng;
        let vocab_size = corpus.vocabulary.len();
        let mut state = GibbsState {
            z: Vec::with_capacity(corpus.docs.len()),
            doc_topic: vec![vec![0; num_topics]; corpus.docs.len()],
            topic_word: vec![vec![0; vocab_size]; num_topics],
            topic_total: vec![0; num_topics],
        };
        for (d, doc) in corpus.docs.iter().enumerate() {
            let mut zs = Vec::with_capacity(doc.tokens.len());
            for &v in &doc.tokens {
                let k = rng.random_range(0..num_topics);
                zs.push(k);
                state.doc_topic[d][k] += 1;
                state.topic_word[k][v as usize] += 1;
                state.topic_total[k] += 1;
            }
            state.z.push(zs);
        }
        state
    }

    fn sweep(
        &mut self,
        corpus: &TokenizedCorpus,
        alpha: f64,
        beta: f64,
        rng: &mut ChaCha8Rng,
        weights: &mut Vec<f64>,
    ) {
        let num_topics = self.topic_total.len();
        let vocab_beta = corpus.vocabulary.len() as f64 * beta;
        for (d, doc) in corpus.docs.iter().enumerate() {
            for (i, &v) in doc.tokens.iter().enumerate() {
                let v = v as usize;
                let old = self.z[d][i];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old][v] -= 1;
                self.topic_total[old] -= 1;

                weights.clear();
                for k in 0..num_topics {
                    let w = (self.doc_topic[d][k] as f64 + alpha)
                        * (self.topic_word[k][v] as f64 + beta)
                        / (self.topic_total[k] as f64 + vocab_beta);
                    weights.push(w);
                }
                let new = sample_index(weights, rng);

                self.z[d][i] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new][v] += 1;
                self.topic_total[new] += 1;
            }
        }
    }

    fn phi(&self, beta: f64, vocab_size: usize) -> Vec<Vec<f64>> {
        let vocab_beta = vocab_size as f64 * beta;
        self.topic_word
            .iter()
            .zip(&self.topic_total)
            .map(|(row, &total)| {
                row.iter()
                    .map(|&c| (c as f64 + beta) / (total as f64 + vocab_beta))
                    .collect()
            })
            .collect()
    }

    fn theta(&self, d: usize, doc_len: usize, alpha: f64, num_topics: usize) -> Vec<f64> {
        let denom = doc_len as f64 + num_topics as f64 * alpha;
        self.doc_topic[d]
            .iter()
            .map(|&c| (c as f64 + alpha) / denom)
            .collect()
    }

    /// Corpus log-likelihood under current smoothed estimates:
    /// sum over tokens of log sum_k theta_dk * phi_kv.
    fn log_likelihood(&self, corpus: &TokenizedCorpus, alpha: f64, beta: f64) -> f64 {
        let num_topics = self.topic_total.len();
        let vocab_beta = corpus.vocabulary.len() as f64 * beta;
        let mut ll = 0.0;
        for (d, doc) in corpus.docs.iter().enumerate() {
            let denom = doc.tokens.len() as f64 + num_topics as f64 * alpha;
            for &v in &doc.tokens {
                let v = v as usize;
                let mut p = 0.0;
                for k in 0..num_topics {
                    let theta = (self.doc_topic[d][k] as f64 + alpha) / denom;
                    let phi = (self.topic_word[k][v] as f64 + beta)
                        / (self.topic_total[k] as f64 + vocab_beta);
                    p += theta * phi;
                }
                ll += p.ln();
            }
        }
        ll
    }
}

/// Train an LDA model with collapsed Gibbs sampling.
///
/// Requires at least `num_topics` documents and `num_topics >= 2`.
pub fn train_lda(
    corpus: &TokenizedCorpus,
    num_topics: usize,
    alpha: f64,
    beta: f64,
    iterations: usize,
    seed: u64,
) -> Result<TrainOutput> {
    if num_topics < 2 {
        return Err(Error::InvalidParameter("num_topics must be >= 2".into()));
    }
    if iterations < 1 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }
    if alpha <= 0.0 || beta <= 0.0 || alpha.is_nan() || beta.is_nan() {
        return Err(Error::InvalidParameter("alpha and beta must be > 0".into()));
    }
    if corpus.docs.len() < num_topics {
        return Err(Error::TooFewDocuments {
            have: corpus.docs.len(),
            need: num_topics,
        });
    }
    if corpus.vocabulary.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = GibbsState::init(corpus, num_topics, &mut rng);
    let mut weights = Vec::with_capacity(num_topics);
    let mut log_likelihood = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        state.sweep(corpus, alpha, beta, &mut rng, &mut weights);
        log_likelihood.push(state.log_likelihood(corpus, alpha, beta));
    }

    let phi = state.phi(beta, corpus.vocabulary.len());
    let doc_topics = corpus
        .docs
        .iter()
        .enumerate()
        .map(|(d, doc)| DocTopics {
            article_id: doc.article_id.clone(),
            theta: state.theta(d, doc.tokens.len(), alpha, num_topics),
        })
        .collect();

    Ok(TrainOutput {
        model: TopicModel {
            num_topics,
            alpha,
            beta,
            phi,
            vocabulary: corpus.vocabulary.clone(),
            seed,
        },
        doc_topics,
        log_likelihood,
    })
}

/// Fold-in inference over vocabulary token indices with phi held fixed.
pub(super) fn infer_theta_indices(
    model: &TopicModel,
    tokens: &[u32],
    iterations: usize,
    seed: u64,
) -> Vec<f64> {
    use rand::Rng;
    let n = model.num_topics;
    let denom_prior = n as f64 * model.alpha;
    if tokens.is_empty() {
        return vec![1.0 / n as f64; n];
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<usize> = Vec::with_capacity(tokens.len());
    let mut counts = vec![0u32; n];
    for _ in tokens {
        let k = rng.random_range(0..n);
        z.push(k);
        counts[k] += 1;
    }
    let mut weights = Vec::with_capacity(n);
    for _ in 0..iterations {
        for (i, &v) in tokens.iter().enumerate() {
            let old = z[i];
            counts[old] -= 1;
            weights.clear();
            for (k, &c) in counts.iter().enumerate() {
                weights.push((c as f64 + model.alpha) * model.phi[k][v as usize]);
            }
            let new = sample_index(&weights, &mut rng);
            z[i] = new;
            counts[new] += 1;
        }
    }
    let denom = tokens.len() as f64 + denom_prior;
    counts
        .iter()
        .map(|&c| (c as f64 + model.alpha) / denom)
        .collect()
}

/// Infer a topic mixture for an arbitrary document given as terms.
///
/// Out-of-vocabulary tokens are skipped; an all-OOV (or empty) document gets
/// the uniform mixture and is flagged.
pub fn infer_theta(
    model: &TopicModel,
    article_id: &str,
    terms: &[String],
    iterations: usize,
    seed: u64,
) -> InferOutcome {
    let index = model.vocabulary.term_index();
    let tokens: Vec<u32> = terms
        .iter()
        .filter_map(|t| index.get(t.as_str()))
        .copied()
        .collect();
    let skipped_oov = terms.len() - tokens.len();
    let all_oov = tokens.is_empty() && !terms.is_empty();
    let theta = infer_theta_indices(model, &tokens, iterations, seed);
    InferOutcome {
        doc: DocTopics {
            article_id: article_id.to_string(),
            theta,
        },
        skipped_oov,
        all_oov,
    }
}
