//! Tender document drafting from historical templates.
//!
//! The pipeline retrieves templates by hybrid field-wise scoring, re-ranks
//! them by purchase-list similarity, fills their smart tags through an agent
//! loop, refines the purchase list against a procurement knowledge base, and
//! scores the result against a gold document.

pub mod corpus;
pub mod evaluation;
pub mod generation;
pub mod knowledge_base;
pub mod reranker;
pub mod retrieval;
pub mod text_metrics;

use thiserror::Error;

pub use corpus::{
    Corpus, CorpusError, ParagraphBlock, PurchaseItem, SmartTag, TableBlock, TagKind,
    TenderDocument,
};
pub use evaluation::{EvalError, EvaluationReport, ExperimentConfig, ExperimentResult};
pub use generation::{AgentSession, GenerationError, LlmClient, MockLlm, SessionState};
pub use knowledge_base::{KbError, KnowledgeGraph};
pub use reranker::RerankError;
pub use retrieval::{Indexes, Requirement, RetrievalError, ScoredCandidate};
pub use text_metrics::{EmbeddingError, EmbeddingProvider, EmbeddingVector, TestEmbedder};

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Rerank(#[from] RerankError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl Error {
    /// Machine-readable error name.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Corpus(e) => e.code(),
            Self::Embedding(e) => e.code(),
            Self::Retrieval(e) => e.code(),
            Self::Rerank(e) => e.code(),
            Self::Generation(e) => e.code(),
            Self::Kb(e) => e.code(),
            Self::Eval(e) => e.code(),
        }
    }
}
