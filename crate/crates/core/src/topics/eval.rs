//! Held-out perplexity via document completion.
//!
//! Theta is estimated on the first half of each held-out document and the
//! likelihood is evaluated on the second half, which avoids the optimistic
//! bias of scoring the tokens used for estimation.

use crate::corpus::TokenizedCorpus;
use crate::error::{Error, Result};
use crate::util::derive_seed;

use super::gibbs::infer_theta_indices;
use super::TopicModel;

const COMPLETION_INFER_ITERS: usize = 100;

/// exp(− held-out log-likelihood / held-out token count), lower is better.
pub fn perplexity(model: &TopicModel, held_out: &TokenizedCorpus) -> Result<f64> {
    if held_out.docs.is_empty() {
        return Err(Error::EmptyHeldOut);
    }
    let mut ll = 0.0f64;
    let mut tokens = 0usize;
    for (d, doc) in held_out.docs.iter().enumerate() {
        let split = doc.tokens.len() / 2;
        let (estimate_half, eval_half) = doc.tokens.split_at(split);
        let theta = infer_theta_indices(
            model,
            estimate_half,
            COMPLETION_INFER_ITERS,
            derive_seed(model.seed, d as u64),
        );
        for &v in eval_half {
            let p: f64 = (0..model.num_topics)
                .map(|k| theta[k] * model.phi[k][v as usize])
                .sum();
            ll += p.ln();
            tokens += 1;
        }
    }
    if tokens == 0 {
        return Err(Error::EmptyHeldOut);
    }
    Ok((-ll / tokens as f64).exp())
}

/// Perplexity of a single aggregated topic fit on `train`, evaluated with the
/// same document-completion routine. This is the one-topic baseline against
/// which multi-topic models are compared.
pub fn unigram_perplexity(
    train: &TokenizedCorpus,
    held_out: &TokenizedCorpus,
    beta: f64,
) -> Result<f64> {
    if held_out.docs.is_empty() {
        return Err(Error::EmptyHeldOut);
    }
    let vocab_size = train.vocabulary.len();
    let mut counts = vec![0u64; vocab_size];
    let mut total = 0u64;
    for doc in &train.docs {
        for &v in &doc.tokens {
            counts[v as usize] += 1;
            total += 1;
        }
    }
    let denom = total as f64 + vocab_size as f64 * beta;
    let phi: Vec<f64> = counts.iter().map(|&c| (c as f64 + beta) / denom).collect();

    let mut ll = 0.0f64;
    let mut tokens = 0usize;
    for doc in &held_out.docs {
        let split = doc.tokens.len() / 2;
        for &v in &doc.tokens[split..] {
            ll += phi[v as usize].ln();
            tokens += 1;
        }
    }
    if tokens == 0 {
        return Err(Error::EmptyHeldOut);
    }
    Ok((-ll / tokens as f64).exp())
}
