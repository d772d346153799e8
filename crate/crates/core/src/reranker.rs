//! Second-stage re-ranking by purchase-list similarity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, PurchaseItem};
use crate::retrieval::ScoredCandidate;
use crate::text_metrics::{
    edit_dist, embedding_dist, ngram_dist, EmbeddingError, EmbeddingProvider,
};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Error)]
pub enum RerankError {
    #[error("current purchase list is empty")]
    EmptyCurrentList,
    #[error("length penalty alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

impl RerankError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyCurrentList => "EmptyCurrentList",
            Self::InvalidAlpha(_) => "InvalidAlpha",
            Self::Embedding(e) => e.code(),
        }
    }
}

/// Best historical match for one current item. `historical` is `None` when
/// the historical list is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMatch {
    pub current: usize,
    pub historical: Option<usize>,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListDistance {
    pub value: f64,
    pub per_item: Vec<ItemMatch>,
}

/// Mean of embedding, bigram and edit distance between two strings.
pub fn name_dist(
    a: &str,
    b: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, EmbeddingError> {
    if a == b {
        return Ok(0.0);
    }
    Ok((embedding_dist(a, b, provider)? + ngram_dist(a, b) + edit_dist(a, b)) / 3.0)
}

/// Item distance on names only; quantity, unit and spec are ignored.
pub fn item_dist(
    a: &PurchaseItem,
    b: &PurchaseItem,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, EmbeddingError> {
    name_dist(&a.name, &b.name, provider)
}

/// String-level list distance: each current entry takes its closest
/// historical entry, plus `alpha` per unit of length difference, all divided
/// by the current length.
pub fn list_dist_by_name<C, H>(
    current: &[C],
    historical: &[H],
    alpha: f64,
    provider: &dyn EmbeddingProvider,
) -> Result<ListDistance, RerankError>
where
    C: AsRef<str>,
    H: AsRef<str>,
{
    if current.is_empty() {
        return Err(RerankError::EmptyCurrentList);
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(RerankError::InvalidAlpha(alpha));
    }
    let mut per_item = Vec::with_capacity(current.len());
    for (i, c) in current.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (j, h) in historical.iter().enumerate() {
            let d = name_dist(c.as_ref(), h.as_ref(), provider)?;
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        per_item.push(match best {
            Some((j, d)) => ItemMatch {
                current: i,
                historical: Some(j),
                dist: d,
            },
            None => ItemMatch {
                current: i,
                historical: None,
                dist: 1.0,
            },
        });
    }
    let matched: f64 = per_item.iter().map(|m| m.dist).sum();
    let gap = historical.len().abs_diff(current.len()) as f64;
    Ok(ListDistance {
        value: (matched + alpha * gap) / current.len() as f64,
        per_item,
    })
}

pub fn list_dist(
    c_list: &[PurchaseItem],
    h_list: &[PurchaseItem],
    alpha: f64,
    provider: &dyn EmbeddingProvider,
) -> Result<ListDistance, RerankError> {
    let current: Vec<&str> = c_list.iter().map(|i| i.name.as_str()).collect();
    let historical: Vec<&str> = h_list.iter().map(|i| i.name.as_str()).collect();
    list_dist_by_name(&current, &historical, alpha, provider)
}

/// Annotates each candidate with its list distance and sorts ascending by it.
/// The sort is stable, so equal distances keep first-stage order. With no
/// current list (or an empty one) the input is returned unchanged.
///
/// Candidates whose document is missing from `corpus` are treated as having
/// an empty purchase list.
pub fn rerank(
    candidates: Vec<ScoredCandidate>,
    corpus: &Corpus,
    c_list: Option<&[PurchaseItem]>,
    alpha: f64,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<ScoredCandidate>, RerankError> {
    let Some(c_list) = c_list.filter(|c| !c.is_empty()) else {
        return Ok(candidates);
    };
    let mut annotated = Vec::with_capacity(candidates.len());
    for mut cand in candidates {
        let h_list = corpus
            .get(&cand.doc_id)
            .map(|d| d.purchase_items.as_slice())
            .unwrap_or_default();
        let dist = list_dist(c_list, h_list, alpha, provider)?;
        cand.list_dist = Some(dist.value);
        cand.list_matches = Some(dist.per_item);
        annotated.push(cand);
    }
    annotated.sort_by(|a, b| {
        let (a, b) = (
            a.list_dist.unwrap_or(f64::INFINITY),
            b.list_dist.unwrap_or(f64::INFINITY),
        );
        a.total_cmp(&b)
    });
    Ok(annotated)
}
