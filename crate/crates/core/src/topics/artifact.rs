//! On-disk topic model artifact.
//!
//! A model directory holds `model.json` (hyperparameters and vocabulary),
//! `phi.bin` (row-major little-endian f64, num_topics × vocab), and
//! `theta.jsonl` (one `{article_id, theta}` object per line).

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

use super::{DocTopics, TopicModel};

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    num_topics: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    vocabulary: Vocabulary,
}

pub fn save_model(dir: &Path, model: &TopicModel, doc_topics: &[DocTopics]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;

    let meta = ModelMeta {
        num_topics: model.num_topics,
        alpha: model.alpha,
        beta: model.beta,
        seed: model.seed,
        vocabulary: model.vocabulary.clone(),
    };
    let meta_path = dir.join("model.json");
    let mut out = serde_json::to_vec_pretty(&meta)?;
    out.push(b'\n');
    fs::write(&meta_path, out).map_err(|e| Error::io(meta_path.display().to_string(), e))?;

    let phi_path = dir.join("phi.bin");
    let file = File::create(&phi_path).map_err(|e| Error::io(phi_path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    for row in &model.phi {
        for &value in row {
            w.write_all(&value.to_le_bytes())
                .map_err(|e| Error::io(phi_path.display().to_string(), e))?;
        }
    }
    w.flush().map_err(|e| Error::io(phi_path.display().to_string(), e))?;

    let theta_path = dir.join("theta.jsonl");
    let file =
        File::create(&theta_path).map_err(|e| Error::io(theta_path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    for dt in doc_topics {
        serde_json::to_writer(&mut w, dt)?;
        w.write_all(b"\n")
            .map_err(|e| Error::io(theta_path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(theta_path.display().to_string(), e))?;
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<TopicModel> {
    let meta_path = dir.join("model.json");
    let meta_bytes =
        fs::read(&meta_path).map_err(|e| Error::io(meta_path.display().to_string(), e))?;
    let meta: ModelMeta = serde_json::from_slice(&meta_bytes)?;

    let phi_path = dir.join("phi.bin");
    let mut bytes = Vec::new();
    File::open(&phi_path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(phi_path.display().to_string(), e))?;
    let expected = meta.num_topics * meta.vocabulary.len() * 8;
    if bytes.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "phi.bin has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let vocab_size = meta.vocabulary.len();
    let mut phi = Vec::with_capacity(meta.num_topics);
    for n in 0..meta.num_topics {
        let mut row = Vec::with_capacity(vocab_size);
        for v in 0..vocab_size {
            let off = (n * vocab_size + v) * 8;
            row.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
        }
        phi.push(row);
    }
    Ok(TopicModel {
        num_topics: meta.num_topics,
        alpha: meta.alpha,
        beta: meta.beta,
        phi,
        vocabulary: meta.vocabulary,
        seed: meta.seed,
    })
}

pub fn load_doc_topics(dir: &Path) -> Result<Vec<DocTopics>> {
    let path = dir.join("theta.jsonl");
    let file = File::open(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str::<DocTopics>(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::planted_corpus;
    use crate::topics::train_lda;

    #[test]
    fn model_round_trips_bitwise() {
        let (corpus, _) = planted_corpus(2, 8, 10, 12, 4);
        let out = train_lda(&corpus, 2, 0.3, 0.01, 15, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_model(dir.path(), &out.model, &out.doc_topics).unwrap();

        let model = load_model(dir.path()).unwrap();
        assert_eq!(model.phi, out.model.phi);
        assert_eq!(model.num_topics, out.model.num_topics);
        assert_eq!(model.vocabulary, out.model.vocabulary);
        assert_eq!(model.seed, out.model.seed);

        let docs = load_doc_topics(dir.path()).unwrap();
        assert_eq!(docs.len(), out.doc_topics.len());
        for (a, b) in docs.iter().zip(&out.doc_topics) {
            assert_eq!(a.article_id, b.article_id);
            assert_eq!(a.theta, b.theta);
        }
    }
}
