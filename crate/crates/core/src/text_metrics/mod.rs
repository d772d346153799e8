//! Embedding provider contract and the string distances shared by re-ranking,
//! item classification and evaluation.

mod distance;
mod embedding;

pub use distance::{edit_dist, embedding_dist, levenshtein, ngram_dist};
pub use embedding::{
    cosine_similarity, CachedProvider, EmbeddingError, EmbeddingProvider, EmbeddingVector,
    TestEmbedder, DEFAULT_DIMENSION, TEST_EMBED_SEED,
};

/// Shorthand for [`TestEmbedder::default`]'s embedding of `text`.
pub fn test_embed(text: &str) -> EmbeddingVector {
    TestEmbedder::default()
        .embed(text)
        .expect("test provider is infallible")
}
