//! Shared fixtures for the benchmarks.

use tenderforge_core::evaluation::synthetic::{generate, SyntheticConfig, SyntheticSet};
use tenderforge_core::retrieval::build_index;
use tenderforge_core::text_metrics::CachedProvider;
use tenderforge_core::{Indexes, TestEmbedder};

pub struct Fixture {
    pub set: SyntheticSet,
    pub indexes: Indexes,
}

/// Synthetic corpus of `templates` documents with its indexes.
pub fn fixture(templates: usize) -> Fixture {
    let set = generate(&SyntheticConfig {
        templates,
        cases: 8,
        seed: 1,
    });
    let indexes =
        build_index(&set.corpus, &TestEmbedder::default()).expect("synthetic corpus indexes");
    Fixture { set, indexes }
}

/// Provider with a warm cache, as in a long-running service.
pub fn cached_provider() -> CachedProvider<TestEmbedder> {
    CachedProvider::new(TestEmbedder::default())
}

/// Purchase-item names of length `n` drawn from the fixture's taxonomy.
pub fn item_names(set: &SyntheticSet, n: usize, offset: usize) -> Vec<String> {
    set.taxonomy
        .iter()
        .cycle()
        .skip(offset)
        .take(n)
        .map(|i| i.name.clone())
        .collect()
}
