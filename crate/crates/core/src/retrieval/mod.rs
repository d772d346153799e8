//! First-stage template retrieval.
//!
//! Every requirement field is scored separately against the same field of each
//! historical document through two channels:
//!
//! * vocabulary: the mean of the summed weights of matched query terms and the
//!   fraction of query terms matched, where a term's weight is proportional
//!   to `1 / (postings + 1)` and weights are normalized over the query;
//! * embedding: cosine between the query text and the indexed field value,
//!   clamped below at zero.
//!
//! A document's score is the sum over queried fields of the mean of the two
//! channels. Postings are kept per field, so a term only matches inside the
//! field it was queried for.

mod index;
mod tokenize;

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize_key, PurchaseItem};
use crate::reranker::ItemMatch;
use crate::text_metrics::{cosine_similarity, EmbeddingError, EmbeddingProvider, EmbeddingVector};

pub use index::{
    build_index, EmbeddingIndex, Indexes, Postings, VocabularyIndex, SNAPSHOT_VERSION,
};
pub use tokenize::{is_cjk, query_terms, tokenize};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("query has no non-empty field")]
    EmptyQuery,
    #[error("index does not match corpus (expected fingerprint {expected}, found {found})")]
    IndexCorpusMismatch { expected: String, found: String },
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("index snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

impl RetrievalError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyQuery => "EmptyQuery",
            Self::IndexCorpusMismatch { .. } => "IndexCorpusMismatch",
            Self::EmptyCorpus => "EmptyCorpus",
            Self::InvalidK => "InvalidK",
            Self::Snapshot(_) => "SnapshotError",
            Self::Embedding(e) => e.code(),
        }
    }
}

/// A purchaser's query: field values plus an optional current purchase list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Requirement {
    pub fields: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_list: Option<Vec<PurchaseItem>>,
}

impl Requirement {
    pub fn new<K: Into<String>, V: Into<String>>(fields: impl IntoIterator<Item = (K, V)>) -> Self {
        Self {
            fields: fields
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
            c_list: None,
        }
    }

    pub fn with_items(mut self, items: Vec<PurchaseItem>) -> Self {
        self.c_list = Some(items);
        self
    }

    /// Fields with non-blank text, in requirement order.
    pub fn queried_fields(&self) -> impl Iterator<Item = (&str, &str)> {
        self.fields
            .iter()
            .filter(|(_, v)| !v.trim().is_empty())
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.queried_fields().next().is_none() {
            return Err(RetrievalError::EmptyQuery);
        }
        Ok(())
    }

    /// The purchase list, if present and non-empty.
    pub fn current_list(&self) -> Option<&[PurchaseItem]> {
        self.c_list.as_deref().filter(|c| !c.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldScore {
    pub field: String,
    pub embed_score: f64,
    pub vocab_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub doc_id: String,
    pub fields: Vec<FieldScore>,
    pub d_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list_dist: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list_matches: Option<Vec<ItemMatch>>,
}

impl ScoredCandidate {
    /// A candidate known only by id, e.g. when re-ranking an externally
    /// supplied id list.
    pub fn unscored(doc_id: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            fields: Vec::new(),
            d_score: 0.0,
            list_dist: None,
            list_matches: None,
        }
    }
}

/// Normalized inverse-posting weights, one per query term. Terms absent from
/// the postings count as `n = 0`.
pub fn term_weights(
    query_terms: &[String],
    postings: &Postings,
) -> Result<BTreeMap<String, f64>, RetrievalError> {
    if query_terms.is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    let inverse: Vec<f64> = query_terms
        .iter()
        .map(|t| 1.0 / (postings.get(t).map_or(0, |d| d.len()) as f64 + 1.0))
        .collect();
    let total: f64 = inverse.iter().sum();
    Ok(query_terms
        .iter()
        .zip(inverse)
        .map(|(t, w)| (t.clone(), w / total))
        .collect())
}

fn matches(doc_id: &str, term: &str, postings: &Postings) -> bool {
    postings.get(term).is_some_and(|d| d.contains(doc_id))
}

/// Fraction of query terms whose postings contain `doc_id`.
pub fn doc_frequency(doc_id: &str, query_terms: &[String], postings: &Postings) -> f64 {
    if query_terms.is_empty() {
        return 0.0;
    }
    let hit = query_terms
        .iter()
        .filter(|t| matches(doc_id, t, postings))
        .count();
    hit as f64 / query_terms.len() as f64
}

fn vocab_score_with(
    doc_id: &str,
    query_terms: &[String],
    weights: &BTreeMap<String, f64>,
    postings: &Postings,
) -> f64 {
    let matched_weight: f64 = query_terms
        .iter()
        .filter(|t| matches(doc_id, t, postings))
        .map(|t| weights[t])
        .sum();
    (matched_weight + doc_frequency(doc_id, query_terms, postings)) / 2.0
}

/// Mean of the matched term-weight mass and the document frequency.
pub fn vocab_score(
    doc_id: &str,
    query_terms: &[String],
    postings: &Postings,
) -> Result<f64, RetrievalError> {
    let weights = term_weights(query_terms, postings)?;
    Ok(vocab_score_with(doc_id, query_terms, &weights, postings))
}

fn embed_score_with(
    doc_id: &str,
    field_key: &str,
    query: &EmbeddingVector,
    index: &EmbeddingIndex,
) -> Result<f64, RetrievalError> {
    match index.vector(doc_id, field_key) {
        Some(v) => Ok(cosine_similarity(query, v)?.max(0.0)),
        None => Ok(0.0),
    }
}

/// Clamped cosine between `query_text` and the document's indexed field; 0
/// when the document lacks the field.
pub fn embed_score(
    doc_id: &str,
    field_name: &str,
    query_text: &str,
    index: &EmbeddingIndex,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, RetrievalError> {
    let key = normalize_key(field_name);
    if index.vector(doc_id, &key).is_none() {
        return Ok(0.0);
    }
    let query = provider.embed(query_text)?;
    embed_score_with(doc_id, &key, &query, index)
}

struct PreparedField {
    name: String,
    key: String,
    terms: Vec<String>,
    weights: BTreeMap<String, f64>,
    vector: EmbeddingVector,
}

/// Scores every indexed document and returns the top `k`, best first. Ties
/// are broken by ascending document id.
pub fn retrieve(
    requirement: &Requirement,
    indexes: &Indexes,
    provider: &dyn EmbeddingProvider,
    k: usize,
) -> Result<Vec<ScoredCandidate>, RetrievalError> {
    requirement.validate()?;
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    indexes.check_consistent()?;
    if provider.dimension() != indexes.embeddings.dimension() {
        return Err(EmbeddingError::DimensionMismatch {
            left: provider.dimension(),
            right: indexes.embeddings.dimension(),
        }
        .into());
    }

    let vocab = &indexes.vocabulary;
    let prepared = requirement
        .queried_fields()
        .map(|(name, text)| {
            let key = normalize_key(name);
            let terms = query_terms(text);
            let weights = if terms.is_empty() {
                BTreeMap::new()
            } else {
                term_weights(&terms, vocab.field(&key))?
            };
            Ok(PreparedField {
                name: name.to_string(),
                vector: provider.embed(text)?,
                key,
                terms,
                weights,
            })
        })
        .collect::<Result<Vec<_>, RetrievalError>>()?;

    let mut scored = Vec::with_capacity(vocab.doc_count());
    for doc_id in vocab.doc_ids() {
        let mut fields = Vec::with_capacity(prepared.len());
        let mut d_score = 0.0;
        for f in &prepared {
            let postings = vocab.field(&f.key);
            let vocab_score = if f.terms.is_empty() {
                0.0
            } else {
                vocab_score_with(doc_id, &f.terms, &f.weights, postings)
            };
            let embed_score = embed_score_with(doc_id, &f.key, &f.vector, &indexes.embeddings)?;
            d_score += (embed_score + vocab_score) / 2.0;
            fields.push(FieldScore {
                field: f.name.clone(),
                embed_score,
                vocab_score,
            });
        }
        scored.push(ScoredCandidate {
            doc_id: doc_id.clone(),
            fields,
            d_score,
            list_dist: None,
            list_matches: None,
        });
    }
    scored.sort_by(|a, b| {
        b.d_score
            .total_cmp(&a.d_score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    scored.truncate(k);
    Ok(scored)
}
