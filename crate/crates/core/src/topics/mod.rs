//! LDA topic modeling: training, inference, evaluation, descriptions, trends.

mod artifact;
mod eval;
mod gibbs;
mod trend;

pub use artifact::{load_doc_topics, load_model, save_model};
pub use eval::{perplexity, unigram_perplexity};
pub use gibbs::{infer_theta, train_lda, InferOutcome, TrainOutput};
pub use trend::{daily_topic_trend, TrendPoint};

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Number of top words in a topic description.
pub const DESCRIPTION_WORDS: usize = 4;

/// A trained topic model: topic-word distributions plus the hyperparameters
/// and vocabulary needed to reuse it.
#[derive(Debug, Clone)]
pub struct TopicModel {
    pub num_topics: usize,
    /// Symmetric document-topic Dirichlet prior.
    pub alpha: f64,
    /// Symmetric topic-word Dirichlet prior.
    pub beta: f64,
    /// Row-stochastic topic-word matrix, `num_topics x vocabulary.len()`.
    pub phi: Vec<Vec<f64>>,
    pub vocabulary: Vocabulary,
    pub seed: u64,
}

/// Per-document topic mixture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocTopics {
    pub article_id: String,
    pub theta: Vec<f64>,
}

/// The top words of one topic, highest-probability first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicDescription {
    pub topic_index: usize,
    pub top_words: Vec<String>,
}

impl TopicModel {
    /// Top-4 words of topic `n` by descending probability, ties broken
    /// lexicographically. Returns fewer words only if the vocabulary itself
    /// is smaller than four terms.
    pub fn describe_topic(&self, n: usize) -> Result<TopicDescription> {
        if n >= self.num_topics {
            return Err(Error::TopicIndexOutOfRange {
                index: n,
                num_topics: self.num_topics,
            });
        }
        let row = &self.phi[n];
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .partial_cmp(&row[a])
                .unwrap()
                .then_with(|| self.vocabulary.terms[a].cmp(&self.vocabulary.terms[b]))
        });
        let top_words = order
            .into_iter()
            .take(DESCRIPTION_WORDS)
            .map(|v| self.vocabulary.terms[v].clone())
            .collect();
        Ok(TopicDescription {
            topic_index: n,
            top_words,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_with_phi(terms: &[&str], phi: Vec<Vec<f64>>) -> TopicModel {
        TopicModel {
            num_topics: phi.len(),
            alpha: 0.1,
            beta: 0.01,
            phi,
            vocabulary: Vocabulary {
                terms: terms.iter().map(|t| t.to_string()).collect(),
                doc_freq: vec![1; terms.len()],
            },
            seed: 0,
        }
    }

    #[test]
    fn describe_topic_sorts_by_descending_weight() {
        let model = model_with_phi(
            &["coach", "goal", "match", "other", "player"],
            vec![vec![0.2, 0.4, 0.3, 0.05, 0.05]],
        );
        let desc = model.describe_topic(0).unwrap();
        assert_eq!(desc.top_words, vec!["goal", "match", "coach", "other"]);
    }

    #[test]
    fn describe_topic_breaks_ties_lexicographically() {
        // "apple" and "zebra" tie at 4th place; "apple" wins
        let model = model_with_phi(
            &["apple", "big", "cat", "dog", "zebra"],
            vec![vec![0.1, 0.3, 0.25, 0.25, 0.1]],
        );
        let desc = model.describe_topic(0).unwrap();
        assert_eq!(desc.top_words, vec!["big", "cat", "dog", "apple"]);
    }

    #[test]
    fn describe_topic_with_four_term_vocabulary_returns_all() {
        let model = model_with_phi(&["aaa", "bbb", "ccc", "ddd"], vec![vec![0.1, 0.2, 0.3, 0.4]]);
        let desc = model.describe_topic(0).unwrap();
        assert_eq!(desc.top_words, vec!["ddd", "ccc", "bbb", "aaa"]);
    }

    #[test]
    fn describe_topic_rejects_out_of_range_index() {
        let model = model_with_phi(&["aaa"], vec![vec![1.0]]);
        assert!(matches!(
            model.describe_topic(1),
            Err(Error::TopicIndexOutOfRange { .. })
        ));
    }
}
