//! Loading of the on-disk artifacts named by the config.

use std::path::Path;

use tenderforge_core::corpus::{load_corpus, Corpus, CorpusError};
use tenderforge_core::knowledge_base::{load_taxonomy, load_triples, KbError};
use tenderforge_core::{KnowledgeGraph, PurchaseItem};

/// Corpus at `path`, or an empty corpus when the file does not exist yet.
pub fn corpus_or_empty(path: Option<&Path>) -> Result<Corpus, CorpusError> {
    match path {
        Some(p) if p.exists() => load_corpus(p),
        _ => Corpus::new(Vec::new()),
    }
}

/// Writes the corpus as JSONL via a temporary file and a rename.
pub fn write_corpus(path: &Path, corpus: &Corpus) -> std::io::Result<()> {
    write_atomic(path, corpus.to_jsonl().as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

pub struct KnowledgeBase {
    pub graph: KnowledgeGraph,
    pub taxonomy: Vec<PurchaseItem>,
}

/// Graph and taxonomy from their optional files; absent files give empty
/// structures.
pub fn knowledge_base(
    triples: Option<&Path>,
    taxonomy: Option<&Path>,
) -> Result<KnowledgeBase, KbError> {
    let graph = match triples {
        Some(p) => {
            let (g, report) = load_triples(p)?;
            tracing::info!(
                entities = report.entities,
                relations = report.relations,
                duplicates = report.duplicate_relations,
                "loaded knowledge graph"
            );
            g
        }
        None => KnowledgeGraph::default(),
    };
    let taxonomy = match taxonomy {
        Some(p) => load_taxonomy(p)?,
        None => Vec::new(),
    };
    Ok(KnowledgeBase { graph, taxonomy })
}
