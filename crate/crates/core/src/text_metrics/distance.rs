use std::collections::HashMap;

use super::embedding::{cosine_similarity, EmbeddingError, EmbeddingProvider};

/// `1 - max(0, cos)` between the embeddings of `a` and `b`.
///
/// Identical strings are exactly 0 without consulting the provider.
pub fn embedding_dist(
    a: &str,
    b: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, EmbeddingError> {
    if a == b {
        return Ok(0.0);
    }
    let va = provider.embed(a)?;
    let vb = provider.embed(b)?;
    Ok(1.0 - cosine_similarity(&va, &vb)?.max(0.0))
}

fn gram_counts(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    for gram in chars.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// One minus the Dice coefficient over character-bigram multisets. Falls back
/// to unigrams when either side has a single character.
pub fn ngram_dist(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return 1.0,
        _ => {}
    }
    let n = if a.len() < 2 || b.len() < 2 { 1 } else { 2 };
    let ca = gram_counts(&a, n);
    let cb = gram_counts(&b, n);
    let shared: usize = ca
        .iter()
        .map(|(g, &count)| count.min(cb.get(g).copied().unwrap_or(0)))
        .sum();
    let total = (a.len() + 1 - n) + (b.len() + 1 - n);
    1.0 - (2 * shared) as f64 / total as f64
}

/// Levenshtein distance over unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let next = (row[j] + 1)
                .min(row[j + 1] + 1)
                .min(diag + usize::from(ca != cb));
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// Levenshtein distance divided by the longer length.
pub fn edit_dist(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / longest as f64
}
