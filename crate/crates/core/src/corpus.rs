//! Article/event ingestion and text preprocessing.
//!
//! Preprocessing keeps a token only if, after lowercasing and lemma mapping,
//! it is at least three characters long, purely alphabetic (Unicode letters,
//! so diacritics survive) and not on the stopword list. Vocabulary terms are
//! additionally document-frequency filtered: a term must appear in at least
//! `min_doc_count` documents and in at most `max_doc_fraction` of them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One ingested news article.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub section: Option<String>,
    /// Publication time, UTC epoch seconds.
    pub published_at: i64,
    /// Optional display title; insight reports fall back to the id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

/// One user-article interaction (a pageview).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Event {
    pub user_id: String,
    pub article_id: String,
    /// UTC epoch seconds.
    pub timestamp: i64,
    /// Section label of the placement where the view occurred.
    pub placement: String,
}

/// Counters emitted by the ingestion routines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub parsed: usize,
    pub skipped_malformed: usize,
    pub dropped_unknown_article: usize,
}

pub type StopwordSet = HashSet<String>;
pub type LemmaMap = HashMap<String, String>;

/// Default document-frequency floor (a term must occur in at least this many docs).
pub const DEFAULT_MIN_DOC_COUNT: usize = 10;
/// Default document-frequency cap as a fraction of all documents.
pub const DEFAULT_MAX_DOC_FRACTION: f64 = 0.10;

/// Read articles from a JSONL file, skipping malformed lines.
///
/// A line is malformed if it fails to parse, has an empty id, duplicates an
/// earlier id, or carries a negative timestamp. Zero valid articles is fatal.
pub fn ingest_articles(path: &Path) -> Result<(Vec<Article>, IngestReport)> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);

    let mut articles = Vec::new();
    let mut seen = HashSet::new();
    let mut report = IngestReport::default();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Article>(&line) {
            Ok(a) if !a.id.is_empty() && a.published_at >= 0 && seen.insert(a.id.clone()) => {
                report.parsed += 1;
                articles.push(a);
            }
            _ => report.skipped_malformed += 1,
        }
    }
    if articles.is_empty() {
        return Err(Error::NoValidArticles(path.display().to_string()));
    }
    Ok((articles, report))
}

/// Read events from a JSONL file.
///
/// Events referencing an article id absent from `known_articles` are dropped
/// and counted; malformed lines are counted separately.
pub fn ingest_events(
    path: &Path,
    known_articles: &HashSet<String>,
) -> Result<(Vec<Event>, IngestReport)> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);

    let mut events = Vec::new();
    let mut report = IngestReport::default();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Event>(&line) {
            Ok(ev) if !ev.user_id.is_empty() => {
                if known_articles.contains(&ev.article_id) {
                    report.parsed += 1;
                    events.push(ev);
                } else {
                    report.dropped_unknown_article += 1;
                }
            }
            _ => report.skipped_malformed += 1,
        }
    }
    Ok((events, report))
}

/// Load a stopword list: UTF-8, one term per line, normalized to lowercase.
pub fn load_stopwords(path: &Path) -> Result<StopwordSet> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut set = HashSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let term = line.trim().to_lowercase();
        if !term.is_empty() {
            set.insert(term);
        }
    }
    Ok(set)
}

/// Load a lemma dictionary: UTF-8 TSV `surface<TAB>lemma`.
///
/// When a surface form maps to several base forms, the first form in
/// alphabetic order wins.
pub fn load_lemmas(path: &Path) -> Result<LemmaMap> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut map: LemmaMap = HashMap::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut parts = line.splitn(2, '\t');
        let (Some(surface), Some(lemma)) = (parts.next(), parts.next()) else {
            continue;
        };
        let surface = surface.trim().to_lowercase();
        let lemma = lemma.trim().to_lowercase();
        if surface.is_empty() || lemma.is_empty() {
            continue;
        }
        map.entry(surface)
            .and_modify(|existing| {
                if lemma < *existing {
                    *existing = lemma.clone();
                }
            })
            .or_insert(lemma);
    }
    Ok(map)
}

fn keeps_filters(term: &str, stopwords: &StopwordSet) -> bool {
    term.chars().count() >= 3
        && term.chars().all(char::is_alphabetic)
        && !stopwords.contains(term)
}

/// Split raw text into normalized terms.
///
/// Each whitespace-separated token is stripped of leading/trailing non-letter
/// characters (punctuation), lowercased, filtered, then lemma-mapped. The
/// lemma form must itself pass the filters, so every returned term is
/// lowercase, ≥3 characters, purely alphabetic and not a stopword.
pub fn tokenize(text: &str, stopwords: &StopwordSet, lemmas: &LemmaMap) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let trimmed = raw.trim_matches(|c: char| !c.is_alphabetic());
        if trimmed.is_empty() {
            continue;
        }
        let lowered = trimmed.to_lowercase();
        if !keeps_filters(&lowered, stopwords) {
            continue;
        }
        let term = match lemmas.get(&lowered) {
            Some(lemma) => lemma.clone(),
            None => lowered,
        };
        if keeps_filters(&term, stopwords) {
            out.push(term);
        }
    }
    out
}

/// The document-frequency filtered term set of a corpus.
///
/// Terms are kept in lexicographic order, which makes token indices
/// reproducible across runs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    pub doc_freq: Vec<u32>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Term → index lookup table. Build once, use many times.
    pub fn term_index(&self) -> HashMap<&str, u32> {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32))
            .collect()
    }
}

/// Filter tokenized documents down to a vocabulary.
///
/// A term survives iff it appears in at least `min_doc_count` documents and
/// in at most `max_doc_fraction` of all documents.
pub fn build_vocabulary(
    docs: &[Vec<String>],
    min_doc_count: usize,
    max_doc_fraction: f64,
) -> Result<Vocabulary> {
    if min_doc_count < 1 {
        return Err(Error::InvalidParameter("min_doc_count must be >= 1".into()));
    }
    if !(max_doc_fraction > 0.0 && max_doc_fraction <= 1.0) {
        return Err(Error::InvalidParameter(
            "max_doc_fraction must be in (0, 1]".into(),
        ));
    }

    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for doc in docs {
        let mut seen = HashSet::new();
        for term in doc {
            if seen.insert(term.as_str()) {
                *df.entry(term.as_str()).or_insert(0) += 1;
            }
        }
    }

    let num_docs = docs.len() as f64;
    let mut terms = Vec::new();
    let mut doc_freq = Vec::new();
    for (term, count) in df {
        if (count as usize) >= min_doc_count && (count as f64) <= max_doc_fraction * num_docs {
            terms.push(term.to_string());
            doc_freq.push(count);
        }
    }
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(Vocabulary { terms, doc_freq })
}

/// One document as vocabulary term indices, in original token order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub article_id: String,
    pub tokens: Vec<u32>,
}

/// A corpus indexed against a fixed vocabulary.
#[derive(Debug, Clone)]
pub struct TokenizedCorpus {
    pub docs: Vec<TokenizedDoc>,
    pub vocabulary: Vocabulary,
}

impl TokenizedCorpus {
    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(|d| d.tokens.len()).sum()
    }
}

/// Index tokenized documents against `vocabulary`.
///
/// Out-of-vocabulary tokens are dropped; documents that become empty are
/// excluded and counted in the returned report.
pub fn index_corpus(
    docs: &[(String, Vec<String>)],
    vocabulary: Vocabulary,
) -> (TokenizedCorpus, usize) {
    let index = vocabulary.term_index();
    let mut indexed = Vec::new();
    let mut dropped_empty = 0usize;
    for (article_id, terms) in docs {
        let tokens: Vec<u32> = terms.iter().filter_map(|t| index.get(t.as_str())).copied().collect();
        if tokens.is_empty() {
            dropped_empty += 1;
        } else {
            indexed.push(TokenizedDoc {
                article_id: article_id.clone(),
                tokens,
            });
        }
    }
    (
        TokenizedCorpus {
            docs: indexed,
            vocabulary,
        },
        dropped_empty,
    )
}

/// Counters from the full preprocessing pass.
#[derive(Debug, Clone, Default)]
pub struct PreprocessReport {
    pub dropped_empty_docs: usize,
}

/// Tokenize articles, build a vocabulary, and index the corpus in one pass.
pub fn preprocess(
    articles: &[Article],
    stopwords: &StopwordSet,
    lemmas: &LemmaMap,
    min_doc_count: usize,
    max_doc_fraction: f64,
) -> Result<(TokenizedCorpus, PreprocessReport)> {
    let tokenized: Vec<(String, Vec<String>)> = articles
        .iter()
        .map(|a| (a.id.clone(), tokenize(&a.text, stopwords, lemmas)))
        .collect();
    let term_docs: Vec<Vec<String>> = tokenized.iter().map(|(_, t)| t.clone()).collect();
    let vocabulary = build_vocabulary(&term_docs, min_doc_count, max_doc_fraction)?;
    let (corpus, dropped_empty_docs) = index_corpus(&tokenized, vocabulary);
    Ok((
        corpus,
        PreprocessReport { dropped_empty_docs },
    ))
}
