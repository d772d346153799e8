//! Reference implementations and random fixtures shared by the integration
//! tests. Nothing here calls the library's scoring code; only the embedding
//! provider is shared.

#![allow(dead_code)]

use std::collections::BTreeMap;

use indexmap::IndexMap;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tenderforge_core::text_metrics::EmbeddingProvider;
use tenderforge_core::{PurchaseItem, TableBlock, TenderDocument};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const WORDS: &[&str] = &[
    "influenza",
    "virus",
    "detection",
    "kit",
    "reagent",
    "pcr",
    "hospital",
    "city",
    "central",
    "testing",
    "project",
    "supply",
    "bed",
    "server",
    "laptop",
    "ct",
    "scanner",
    "gloves",
    "swab",
    "annual",
    "procurement",
    "lab",
    "network",
    "office",
];

pub const FIELD_NAMES: &[&str] = &["project name", "purchaser unit", "purpose", "region"];

pub fn words(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.random_range(min..=max);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Short strings over a small alphabet, so distances take many values and
/// exact repeats happen.
pub fn short_name(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'k', 'i', 't', 'r', ' '];
    let n = rng.random_range(1..=8);
    (0..n)
        .map(|i| {
            let pool = if i == 0 { &ALPHABET[..6] } else { ALPHABET };
            *pool.choose(rng).unwrap()
        })
        .collect()
}

// ---- string distances ----

pub fn ref_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn ref_embedding_dist(a: &str, b: &str, p: &dyn EmbeddingProvider) -> f64 {
    if a == b {
        return 0.0;
    }
    let va = p.embed(a).unwrap();
    let vb = p.embed(b).unwrap();
    1.0 - ref_cosine(va.as_slice(), vb.as_slice()).max(0.0)
}

pub fn ref_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in m[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = m[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            m[i][j] = sub.min(m[i - 1][j] + 1).min(m[i][j - 1] + 1);
        }
    }
    m[a.len()][b.len()]
}

pub fn ref_edit_dist(a: &str, b: &str) -> f64 {
    let n = a.chars().count().max(b.chars().count());
    if n == 0 {
        0.0
    } else {
        ref_levenshtein(a, b) as f64 / n as f64
    }
}

fn grams(s: &str, n: usize) -> BTreeMap<String, usize> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = BTreeMap::new();
    if chars.len() >= n {
        for i in 0..=chars.len() - n {
            *out.entry(chars[i..i + n].iter().collect()).or_insert(0) += 1;
        }
    }
    out
}

pub fn ref_ngram_dist(a: &str, b: &str) -> f64 {
    let (la, lb) = (a.chars().count(), b.chars().count());
    if la == 0 && lb == 0 {
        return 0.0;
    }
    if la == 0 || lb == 0 {
        return 1.0;
    }
    let n = if la < 2 || lb < 2 { 1 } else { 2 };
    let (ga, gb) = (grams(a, n), grams(b, n));
    let mut shared = 0;
    for (g, ca) in &ga {
        if let Some(cb) = gb.get(g) {
            shared += ca.min(cb);
        }
    }
    let total: usize = ga.values().sum::<usize>() + gb.values().sum::<usize>();
    1.0 - 2.0 * shared as f64 / total as f64
}

pub fn ref_item_dist(a: &str, b: &str, p: &dyn EmbeddingProvider) -> f64 {
    if a == b {
        return 0.0;
    }
    (ref_embedding_dist(a, b, p) + ref_ngram_dist(a, b) + ref_edit_dist(a, b)) / 3.0
}

/// Length-penalized sum of per-item minima, enumerated over every pair.
pub fn ref_list_dist<C: AsRef<str>, H: AsRef<str>>(
    c: &[C],
    h: &[H],
    alpha: f64,
    p: &dyn EmbeddingProvider,
) -> f64 {
    let mut sum = 0.0;
    for ci in c {
        let all: Vec<f64> = h
            .iter()
            .map(|hj| ref_item_dist(ci.as_ref(), hj.as_ref(), p))
            .collect();
        sum += if all.is_empty() {
            1.0
        } else {
            all.into_iter().fold(f64::INFINITY, f64::min)
        };
    }
    let gap = (c.len() as f64 - h.len() as f64).abs();
    (sum + alpha * gap) / c.len() as f64
}

/// Candidate ids sorted ascending by list distance; equal distances keep
/// input order.
pub fn ref_rerank(
    candidates: &[(String, Vec<String>)],
    c: &[String],
    alpha: f64,
    p: &dyn EmbeddingProvider,
) -> Vec<(String, f64)> {
    let mut scored: Vec<(usize, String, f64)> = candidates
        .iter()
        .enumerate()
        .map(|(i, (id, h))| (i, id.clone(), ref_list_dist(c, h, alpha, p)))
        .collect();
    scored.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(_, id, d)| (id, d)).collect()
}

// ---- retrieval ----

/// Field key for the lowercase space-separated names used in fixtures.
pub fn ref_key(name: &str) -> String {
    name.trim().to_lowercase().replace(' ', "_")
}

/// Distinct lowercase ASCII words in first-seen order.
pub fn ref_terms(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for w in text
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        let w = w.to_lowercase();
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

pub struct OracleDoc {
    pub id: String,
    pub fields: Vec<(String, String)>,
}

impl OracleDoc {
    fn field(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| ref_key(k) == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_document(&self) -> TenderDocument {
        TenderDocument::new(
            self.id.clone(),
            self.fields.iter().cloned().collect::<IndexMap<_, _>>(),
            Vec::new(),
            Vec::new(),
            Vec::new(),
        )
        .unwrap()
    }
}

/// Exhaustive hybrid score for every document, best first, ties by id.
pub fn ref_retrieve(
    docs: &[OracleDoc],
    query: &[(String, String)],
    p: &dyn EmbeddingProvider,
) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = docs
        .iter()
        .map(|d| {
            let mut total = 0.0;
            for (name, text) in query.iter().filter(|(_, t)| !t.trim().is_empty()) {
                let key = ref_key(name);
                let terms = ref_terms(text);
                let vocab = if terms.is_empty() {
                    0.0
                } else {
                    let holds = |doc: &OracleDoc, t: &str| {
                        doc.field(&key)
                            .is_some_and(|v| ref_terms(v).iter().any(|w| w == t))
                    };
                    let inverse: Vec<f64> = terms
                        .iter()
                        .map(|t| 1.0 / (docs.iter().filter(|o| holds(o, t)).count() as f64 + 1.0))
                        .collect();
                    let denom: f64 = inverse.iter().sum();
                    let mut weight = 0.0;
                    let mut hits = 0;
                    for (t, inv) in terms.iter().zip(&inverse) {
                        if holds(d, t) {
                            weight += inv / denom;
                            hits += 1;
                        }
                    }
                    (weight + hits as f64 / terms.len() as f64) / 2.0
                };
                let embed = match d.field(&key) {
                    Some(v) => {
                        let q = p.embed(text).unwrap();
                        let e = p.embed(v).unwrap();
                        ref_cosine(q.as_slice(), e.as_slice()).max(0.0)
                    }
                    None => 0.0,
                };
                total += (embed + vocab) / 2.0;
            }
            (d.id.clone(), total)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored
}

/// Up to `max_docs` documents with distinct field names, each field holding
/// 1 to 5 words from a small vocabulary.
pub fn random_oracle_corpus(rng: &mut ChaCha8Rng, max_docs: usize) -> Vec<OracleDoc> {
    let n = rng.random_range(1..=max_docs);
    (0..n)
        .map(|i| {
            let mut fields = Vec::new();
            for name in FIELD_NAMES {
                if rng.random_bool(0.7) {
                    fields.push((name.to_string(), words(rng, 1, 5)));
                }
            }
            if fields.is_empty() {
                fields.push((FIELD_NAMES[0].to_string(), words(rng, 1, 5)));
            }
            OracleDoc {
                id: format!("d{:02}", i),
                fields,
            }
        })
        .collect()
}

pub fn random_query(rng: &mut ChaCha8Rng) -> Vec<(String, String)> {
    let mut q = Vec::new();
    for name in FIELD_NAMES {
        if rng.random_bool(0.5) {
            q.push((name.to_string(), words(rng, 1, 4)));
        }
    }
    if q.is_empty() {
        q.push((FIELD_NAMES[0].to_string(), words(rng, 1, 4)));
    }
    q
}

// ---- documents ----

pub fn random_table(rng: &mut ChaCha8Rng) -> TableBlock {
    let cols = rng.random_range(1..=4);
    let rows = rng.random_range(0..=4);
    TableBlock::new(
        (0..cols).map(|_| words(rng, 1, 2)).collect(),
        (0..rows)
            .map(|_| (0..cols).map(|_| words(rng, 0, 3)).collect())
            .collect(),
    )
}

pub fn random_document(rng: &mut ChaCha8Rng, id: &str) -> TenderDocument {
    let paragraphs = (0..rng.random_range(0..=6))
        .map(|_| words(rng, 1, 12))
        .collect();
    let tables = (0..rng.random_range(0..=3))
        .map(|_| random_table(rng))
        .collect();
    let items = (0..rng.random_range(0..=3))
        .map(|_| PurchaseItem::named(words(rng, 1, 3)))
        .collect();
    TenderDocument::new(
        id,
        IndexMap::from([("project name".to_string(), words(rng, 1, 4))]),
        paragraphs,
        tables,
        items,
    )
    .unwrap()
}
