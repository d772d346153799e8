//! Document-quality metrics and the variant comparison harness.

mod experiment;
mod metrics;
pub mod synthetic;

use thiserror::Error;

pub use experiment::{
    draft_from_template, draft_with_reference, draft_without_template, run_experiment,
    run_synthetic_experiment, select_template, ExperimentCase, ExperimentConfig, ExperimentResult,
    PipelineContext, Variant, VariantRow, REFERENCE_PARA_SCORE, REFERENCE_SCORE,
    REFERENCE_TABLE_SCORE,
};
pub use metrics::{
    evaluate, field_similarity, match_tables, para_score, paragraph_score, row_similarity,
    table_score, table_score_single, EvaluationReport, ParaScore, TableComparison, TableScore,
};

use crate::corpus::CorpusError;
use crate::generation::{GenerationError, LlmError};
use crate::knowledge_base::KbError;
use crate::reranker::RerankError;
use crate::retrieval::RetrievalError;
use crate::text_metrics::EmbeddingError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold paragraph list is empty")]
    EmptyGold,
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Rerank(#[from] RerankError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyGold => "EmptyGold",
            Self::Config(_) => "ConfigError",
            Self::Embedding(e) => e.code(),
            Self::Rerank(e) => e.code(),
            Self::Retrieval(e) => e.code(),
            Self::Generation(e) => e.code(),
            Self::Llm(_) => "ProviderError",
            Self::Kb(e) => e.code(),
            Self::Corpus(e) => e.code(),
        }
    }
}
