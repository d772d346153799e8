use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use super::RetrievalError;
use crate::corpus::{normalize_key, Corpus, TenderDocument};
use crate::text_metrics::{EmbeddingProvider, EmbeddingVector};

/// Term postings of one field: term → ids of documents whose value for that
/// field contains the term.
pub type Postings = BTreeMap<String, BTreeSet<String>>;

static EMPTY_POSTINGS: Postings = BTreeMap::new();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyIndex {
    corpus_fingerprint: String,
    doc_ids: Vec<String>,
    /// Normalized field name → postings.
    fields: BTreeMap<String, Postings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingIndex {
    corpus_fingerprint: String,
    dimension: usize,
    /// Document id → normalized field name → vector of the field value.
    vectors: BTreeMap<String, BTreeMap<String, EmbeddingVector>>,
}

/// Field values of `doc` keyed by normalized name. Fields that collapse to
/// the same key are joined with a newline.
pub(crate) fn normalized_fields(doc: &TenderDocument) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> = BTreeMap::new();
    for (name, value) in &doc.fields {
        out.entry(normalize_key(name))
            .and_modify(|v| {
                v.push('\n');
                v.push_str(value);
            })
            .or_insert_with(|| value.clone());
    }
    out
}

impl VocabularyIndex {
    pub fn build(corpus: &Corpus) -> Self {
        let mut fields: BTreeMap<String, Postings> = BTreeMap::new();
        for doc in corpus {
            for (key, value) in normalized_fields(doc) {
                let postings = fields.entry(key).or_default();
                for term in tokenize(&value) {
                    postings.entry(term).or_default().insert(doc.id.clone());
                }
            }
        }
        Self {
            corpus_fingerprint: corpus.fingerprint().to_string(),
            doc_ids: corpus.iter().map(|d| d.id.clone()).collect(),
            fields,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn corpus_fingerprint(&self) -> &str {
        &self.corpus_fingerprint
    }

    /// Postings for a normalized field name; empty when no document has it.
    pub fn field(&self, key: &str) -> &Postings {
        self.fields.get(key).unwrap_or(&EMPTY_POSTINGS)
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(String::as_str)
    }
}

impl EmbeddingIndex {
    pub fn build(
        corpus: &Corpus,
        provider: &dyn EmbeddingProvider,
    ) -> Result<Self, RetrievalError> {
        let mut vectors = BTreeMap::new();
        for doc in corpus {
            let fields = normalized_fields(doc);
            let texts: Vec<&str> = fields.values().map(String::as_str).collect();
            let embedded = provider.embed_batch(&texts)?;
            let per_field = fields.into_keys().zip(embedded).collect();
            vectors.insert(doc.id.clone(), per_field);
        }
        Ok(Self {
            corpus_fingerprint: corpus.fingerprint().to_string(),
            dimension: provider.dimension(),
            vectors,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn corpus_fingerprint(&self) -> &str {
        &self.corpus_fingerprint
    }

    pub fn vector(&self, doc_id: &str, field_key: &str) -> Option<&EmbeddingVector> {
        self.vectors.get(doc_id)?.get(field_key)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub const SNAPSHOT_VERSION: u32 = 1;

/// Both indexes plus the fingerprint of the corpus they were built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Indexes {
    pub version: u32,
    pub corpus_fingerprint: String,
    pub vocabulary: VocabularyIndex,
    pub embeddings: EmbeddingIndex,
}

impl Indexes {
    pub fn fingerprint(&self) -> &str {
        &self.corpus_fingerprint
    }

    /// Verifies that both indexes come from the same corpus and that the
    /// embedding index has one entry per indexed document.
    pub fn check_consistent(&self) -> Result<(), RetrievalError> {
        let fp = &self.corpus_fingerprint;
        if self.vocabulary.corpus_fingerprint() != fp || self.embeddings.corpus_fingerprint() != fp
        {
            return Err(RetrievalError::IndexCorpusMismatch {
                expected: fp.clone(),
                found: self.embeddings.corpus_fingerprint().to_string(),
            });
        }
        let emb_ids = self.embeddings.vectors.keys();
        let vocab_ids: BTreeSet<_> = self.vocabulary.doc_ids().iter().collect();
        if self.embeddings.len() != vocab_ids.len()
            || emb_ids.into_iter().any(|id| !vocab_ids.contains(id))
        {
            return Err(RetrievalError::IndexCorpusMismatch {
                expected: fp.clone(),
                found: "inconsistent document sets".into(),
            });
        }
        Ok(())
    }

    /// Stale-index check against the live corpus.
    pub fn check_corpus(&self, corpus: &Corpus) -> Result<(), RetrievalError> {
        if corpus.fingerprint() != self.corpus_fingerprint {
            return Err(RetrievalError::IndexCorpusMismatch {
                expected: corpus.fingerprint().to_string(),
                found: self.corpus_fingerprint.clone(),
            });
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        let json = serde_json::to_vec(self).map_err(|e| RetrievalError::Snapshot(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| RetrievalError::Snapshot(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RetrievalError> {
        let bytes = std::fs::read(path).map_err(|e| RetrievalError::Snapshot(e.to_string()))?;
        let idx: Self =
            serde_json::from_slice(&bytes).map_err(|e| RetrievalError::Snapshot(e.to_string()))?;
        if idx.version != SNAPSHOT_VERSION {
            return Err(RetrievalError::Snapshot(format!(
                "unsupported snapshot version {}",
                idx.version
            )));
        }
        idx.check_consistent()?;
        Ok(idx)
    }
}

pub fn build_index(
    corpus: &Corpus,
    provider: &dyn EmbeddingProvider,
) -> Result<Indexes, RetrievalError> {
    if corpus.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    Ok(Indexes {
        version: SNAPSHOT_VERSION,
        corpus_fingerprint: corpus.fingerprint().to_string(),
        vocabulary: VocabularyIndex::build(corpus),
        embeddings: EmbeddingIndex::build(corpus, provider)?,
    })
}
