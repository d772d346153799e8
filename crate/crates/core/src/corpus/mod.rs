//! Document model, smart-tag grammar and the historical document store.

mod document;
pub mod tags;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use document::{
    extract_smart_tags, parse_document, serialize_document, Format, ParagraphBlock, PurchaseItem,
    TableBlock, TenderDocument,
};
pub use tags::{SmartTag, TagGrammarIssue, TagKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagLocation {
    Paragraph(usize),
    Cell {
        table: usize,
        row: usize,
        column: usize,
    },
}

impl fmt::Display for TagLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Paragraph(i) => write!(f, "paragraph {i}"),
            Self::Cell { table, row, column } => {
                write!(f, "table {table} row {row} column {column}")
            }
        }
    }
}

fn line_suffix(line: &Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("schema error at `{path}`: {message}{}", line_suffix(.line))]
    Schema {
        path: String,
        message: String,
        line: Option<usize>,
    },
    #[error("tag grammar error in {location}: {issue}{}", line_suffix(.line))]
    TagGrammar {
        location: TagLocation,
        issue: TagGrammarIssue,
        line: Option<usize>,
    },
    #[error("duplicate document id {id:?} (line {line})")]
    DuplicateId { id: String, line: usize },
    #[error("unknown document id {0:?}")]
    UnknownId(String),
    #[error("corpus io: {0}")]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    fn at_line(self, n: usize) -> Self {
        match self {
            Self::Schema { path, message, .. } => Self::Schema {
                path,
                message,
                line: Some(n),
            },
            Self::TagGrammar {
                location, issue, ..
            } => Self::TagGrammar {
                location,
                issue,
                line: Some(n),
            },
            other => other,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Self::Schema { .. } => "SchemaError",
            Self::TagGrammar { .. } => "TagGrammarError",
            Self::DuplicateId { .. } => "DuplicateIdError",
            Self::UnknownId(_) => "UnknownDocumentError",
            Self::Io(_) => "IoError",
        }
    }
}

/// Canonical form used to match requirement field names, tag keys and
/// accumulated-information keys: lowercase, separators collapsed to `_`.
pub fn normalize_key(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_sep = false;
    for c in name.trim().chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() || c == '.' {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            out.push(c);
        } else {
            pending_sep = true;
        }
    }
    out
}

/// Immutable set of historical documents indexed by id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<TenderDocument>,
    by_id: HashMap<String, usize>,
    fingerprint: String,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.docs == other.docs
    }
}

impl Corpus {
    pub fn new(docs: Vec<TenderDocument>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            if by_id.insert(doc.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    id: doc.id.clone(),
                    line: i + 1,
                });
            }
        }
        let fingerprint = fingerprint_of(&docs);
        Ok(Self {
            docs,
            by_id,
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&TenderDocument> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }

    pub fn documents(&self) -> &[TenderDocument] {
        &self.docs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TenderDocument> {
        self.docs.iter()
    }

    /// Content hash of the corpus, in document order.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Returns a new corpus with `doc` appended.
    pub fn with_document(&self, doc: TenderDocument) -> Result<Self, CorpusError> {
        doc.validate()?;
        if self.by_id.contains_key(&doc.id) {
            return Err(CorpusError::DuplicateId {
                line: self.docs.len() + 1,
                id: doc.id,
            });
        }
        let mut docs = self.docs.clone();
        docs.push(doc);
        Self::new(docs)
    }

    pub fn to_jsonl(&self) -> String {
        self.docs
            .iter()
            .map(|d| serialize_document(d, Format::Json) + "\n")
            .collect()
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a TenderDocument;
    type IntoIter = std::slice::Iter<'a, TenderDocument>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

fn fingerprint_of(docs: &[TenderDocument]) -> String {
    let mut hasher = Sha256::new();
    for doc in docs {
        hasher.update(serialize_document(doc, Format::Json).as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// Parses JSONL text. Blank lines are skipped; line numbers are 1-based.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut docs = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_document(line).map_err(|e| e.at_line(n))?;
        if seen.insert(doc.id.clone(), n).is_some() {
            return Err(CorpusError::DuplicateId {
                id: doc.id,
                line: n,
            });
        }
        docs.push(doc);
    }
    Corpus::new(docs)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    parse_corpus(&text)
}
