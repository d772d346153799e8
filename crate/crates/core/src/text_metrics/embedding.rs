use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embedding provider failed: {0}")]
    Provider(String),
    #[error("provider returned an invalid vector: {0}")]
    InvalidVector(String),
}

impl EmbeddingError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::DimensionMismatch { .. } => "DimensionMismatch",
            Self::Provider(_) | Self::InvalidVector(_) => "ProviderError",
        }
    }
}

/// Unit-length dense vector with finite components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// L2-normalizes `values`. Rejects empty, non-finite or all-zero input.
    /// Input already within 1e-12 of unit length is kept as is, so
    /// normalizing twice is exact.
    pub fn normalized(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::InvalidVector("empty vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::InvalidVector("non-finite component".into()));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(EmbeddingError::InvalidVector("zero vector".into()));
        }
        if (norm - 1.0).abs() <= 1e-12 {
            return Ok(Self(values));
        }
        Ok(Self(values.into_iter().map(|v| v / norm).collect()))
    }

    /// The basis vector `e_index` of the given dimension.
    pub fn basis(dimension: usize, index: usize) -> Self {
        let mut values = vec![0.0; dimension];
        values[index] = 1.0;
        Self(values)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Neg for &EmbeddingVector {
    type Output = EmbeddingVector;

    fn neg(self) -> EmbeddingVector {
        EmbeddingVector(self.0.iter().map(|v| -v).collect())
    }
}

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    if a.dimension() != b.dimension() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / denom).clamp(-1.0, 1.0))
}

/// Text encoder contract. Implementations must be deterministic and keep a
/// constant dimension.
pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Arc<P> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        (**self).embed(text)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        (**self).embed_batch(texts)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        (**self).embed(text)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        (**self).embed_batch(texts)
    }
}

pub const DEFAULT_DIMENSION: usize = 256;
pub const TEST_EMBED_SEED: u64 = 0x5EED;

/// Offline provider: hashed character-trigram counts, L2-normalized.
///
/// Text is lowercased first. Strings shorter than three characters hash as a
/// single gram; the empty string maps to `e_0`.
#[derive(Debug, Clone)]
pub struct TestEmbedder {
    dimension: usize,
    seed: u64,
}

impl Default for TestEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl TestEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self {
            dimension,
            seed: TEST_EMBED_SEED,
        }
    }

    /// Bucket a gram lands in. Exposed so tests can reason about collisions.
    pub fn bucket(&self, gram: &[char]) -> usize {
        // FNV-1a over the UTF-8 bytes, offset basis perturbed by the seed.
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325 ^ self.seed;
        let mut buf = [0u8; 4];
        for c in gram {
            for b in c.encode_utf8(&mut buf).bytes() {
                hash ^= u64::from(b);
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        }
        (hash % self.dimension as u64) as usize
    }

    pub fn grams(text: &str) -> Vec<Vec<char>> {
        let chars: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
        match chars.len() {
            0 => Vec::new(),
            1 | 2 => vec![chars],
            _ => chars.windows(3).map(<[char]>::to_vec).collect(),
        }
    }
}

impl EmbeddingProvider for TestEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        let grams = Self::grams(text);
        if grams.is_empty() {
            return Ok(EmbeddingVector::basis(self.dimension, 0));
        }
        let mut counts = vec![0.0; self.dimension];
        for gram in &grams {
            counts[self.bucket(gram)] += 1.0;
        }
        EmbeddingVector::normalized(counts)
    }
}

/// Memoizing wrapper. Safe to share across threads.
pub struct CachedProvider<P> {
    inner: P,
    cache: Mutex<HashMap<String, EmbeddingVector>>,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        if let Some(v) = self.cache.lock().expect("cache poisoned").get(text) {
            return Ok(v.clone());
        }
        let v = self.inner.embed(text)?;
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(text.to_string(), v.clone());
        Ok(v)
    }
}
