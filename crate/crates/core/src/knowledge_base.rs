//! Procurement item knowledge graph and product-taxonomy filtering.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize_key, CorpusError, PurchaseItem, TableBlock, TenderDocument};
use crate::reranker::item_dist;
use crate::retrieval::{is_cjk, tokenize, Requirement};
use crate::text_metrics::{EmbeddingError, EmbeddingProvider};

pub const PROCUREMENT_ITEM_FOR: &str = "is the procurement item for";
pub const KIND_OF: &str = "is a kind of";
pub const DEFAULT_THETA: f64 = 0.35;
pub const DEFAULT_LABEL: &str = "Entity";

#[derive(Debug, Error)]
pub enum KbError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("taxonomy is empty")]
    EmptyTaxonomy,
    #[error("search text must be non-empty")]
    EmptyNeedle,
    #[error("threshold must lie in [0, 1], got {0}")]
    InvalidTheta(f64),
    #[error("taxonomy line {line}: {message}")]
    Taxonomy { line: usize, message: String },
    #[error("refined document is invalid: {0}")]
    InvalidDocument(#[from] CorpusError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

impl KbError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::MalformedLine { .. } => "MalformedLineError",
            Self::EmptyTaxonomy => "EmptyTaxonomy",
            Self::EmptyNeedle => "EmptyNeedle",
            Self::InvalidTheta(_) => "InvalidTheta",
            Self::Taxonomy { .. } => "SchemaError",
            Self::InvalidDocument(e) => e.code(),
            Self::Io(_) => "IoError",
            Self::Embedding(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub name: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub src: String,
    pub rel_type: String,
    pub dst: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub src: String,
    pub rel_type: String,
    pub dst: String,
}

impl Triple {
    pub fn new(
        src: impl Into<String>,
        rel_type: impl Into<String>,
        dst: impl Into<String>,
    ) -> Self {
        Self {
            src: src.into(),
            rel_type: rel_type.into(),
            dst: dst.into(),
        }
    }
}

/// Source of graph triples, e.g. an extraction pipeline over documents.
pub trait TripleExtractor {
    fn extract(&self, doc: &TenderDocument) -> Vec<Triple>;
}

/// Links every purchase item of a document to its project name.
#[derive(Debug, Clone)]
pub struct PurchaseListExtractor {
    /// Normalized field holding the project name.
    pub project_field: String,
}

impl Default for PurchaseListExtractor {
    fn default() -> Self {
        Self {
            project_field: "project_name".into(),
        }
    }
}

impl TripleExtractor for PurchaseListExtractor {
    fn extract(&self, doc: &TenderDocument) -> Vec<Triple> {
        let Some(project) = doc
            .fields
            .iter()
            .find(|(k, _)| normalize_key(k) == self.project_field)
            .map(|(_, v)| v.trim())
            .filter(|v| !v.is_empty())
        else {
            return Vec::new();
        };
        doc.purchase_items
            .iter()
            .filter(|i| i.name.trim() != project)
            .map(|i| Triple::new(i.name.trim(), PROCUREMENT_ITEM_FOR, project))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub lines: usize,
    pub entities: usize,
    pub relations: usize,
    pub duplicate_relations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct KnowledgeGraph {
    entities: Vec<Entity>,
    relations: Vec<Relation>,
    #[serde(skip)]
    lower_names: Vec<String>,
    #[serde(skip)]
    by_name: HashMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgraph {
    pub entities: Vec<Entity>,
    pub relations: Vec<Relation>,
}

fn entity_id(i: usize) -> String {
    format!("e{i:06}")
}

impl KnowledgeGraph {
    /// Builds a graph from triples. Entities are deduplicated by exact name
    /// and numbered in name order, so ids do not depend on input order.
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> (Self, LoadReport) {
        let mut names = BTreeSet::new();
        let mut unique = BTreeSet::new();
        let mut total = 0;
        for t in triples {
            total += 1;
            names.insert(t.src.clone());
            names.insert(t.dst.clone());
            unique.insert(t);
        }
        let entities: Vec<Entity> = names
            .into_iter()
            .enumerate()
            .map(|(i, name)| Entity {
                id: entity_id(i),
                name,
                label: DEFAULT_LABEL.into(),
            })
            .collect();
        let by_name: HashMap<String, usize> = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.clone(), i))
            .collect();
        let mut relations: Vec<Relation> = unique
            .iter()
            .map(|t| Relation {
                src: entities[by_name[&t.src]].id.clone(),
                rel_type: t.rel_type.clone(),
                dst: entities[by_name[&t.dst]].id.clone(),
            })
            .collect();
        relations.sort();
        let report = LoadReport {
            lines: total,
            entities: entities.len(),
            relations: relations.len(),
            duplicate_relations: total - unique.len(),
        };
        let lower_names = entities.iter().map(|e| e.name.to_lowercase()).collect();
        (
            Self {
                entities,
                relations,
                lower_names,
                by_name,
            },
            report,
        )
    }

    pub fn from_documents<'a>(
        docs: impl IntoIterator<Item = &'a TenderDocument>,
        extractor: &dyn TripleExtractor,
    ) -> (Self, LoadReport) {
        Self::from_triples(docs.into_iter().flat_map(|d| extractor.extract(d)))
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        let idx: usize = id.strip_prefix('e')?.parse().ok()?;
        self.entities.get(idx).filter(|e| e.id == id)
    }

    pub fn entity_by_name(&self, name: &str) -> Option<&Entity> {
        self.by_name.get(name).map(|&i| &self.entities[i])
    }

    /// Entities whose name contains `needle` (case-insensitive), all their
    /// incident relations, and the neighbours on the other end.
    pub fn query_contains(&self, needle: &str) -> Result<Subgraph, KbError> {
        let needle = needle.trim().to_lowercase();
        if needle.is_empty() {
            return Err(KbError::EmptyNeedle);
        }
        let matched: BTreeSet<&str> = self
            .entities
            .iter()
            .zip(&self.lower_names)
            .filter(|(_, lower)| lower.contains(&needle))
            .map(|(e, _)| e.id.as_str())
            .collect();
        let mut ids: BTreeSet<&str> = matched.clone();
        let mut relations = Vec::new();
        for r in &self.relations {
            if matched.contains(r.src.as_str()) || matched.contains(r.dst.as_str()) {
                ids.insert(&r.src);
                ids.insert(&r.dst);
                relations.push(r.clone());
            }
        }
        let entities = ids
            .into_iter()
            .filter_map(|id| self.entity(id).cloned())
            .collect();
        Ok(Subgraph {
            entities,
            relations,
        })
    }
}

pub fn parse_triples(text: &str) -> Result<(KnowledgeGraph, LoadReport), KbError> {
    let mut triples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(KbError::MalformedLine {
                line: n,
                reason: format!("expected 3 tab-separated columns, found {}", parts.len()),
            });
        }
        if parts.iter().any(|p| p.is_empty()) {
            return Err(KbError::MalformedLine {
                line: n,
                reason: "empty column".into(),
            });
        }
        if parts[0] == parts[2] {
            return Err(KbError::MalformedLine {
                line: n,
                reason: "relation endpoints must differ".into(),
            });
        }
        triples.push(Triple::new(parts[0], parts[1], parts[2]));
    }
    Ok(KnowledgeGraph::from_triples(triples))
}

pub fn load_triples(path: impl AsRef<Path>) -> Result<(KnowledgeGraph, LoadReport), KbError> {
    parse_triples(&std::fs::read_to_string(path)?)
}

pub fn load_taxonomy(path: impl AsRef<Path>) -> Result<Vec<PurchaseItem>, KbError> {
    parse_taxonomy(&std::fs::read_to_string(path)?)
}

pub fn parse_taxonomy(text: &str) -> Result<Vec<PurchaseItem>, KbError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: PurchaseItem = serde_json::from_str(line).map_err(|e| KbError::Taxonomy {
            line: i + 1,
            message: e.to_string(),
        })?;
        if item.name.trim().is_empty() {
            return Err(KbError::Taxonomy {
                line: i + 1,
                message: "item name must be non-empty".into(),
            });
        }
        out.push(item);
    }
    Ok(out)
}

const PROJECT_KEYS: [&str; 2] = ["project_name", "purpose"];

fn searchable_terms(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    tokenize(text)
        .into_iter()
        // Short Latin tokens ("a", "of") would substring-match most names.
        .filter(|t| t.chars().any(is_cjk) || t.chars().count() >= 3)
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// Items linked by a procurement edge to entities matching the project name
/// or purpose terms. Ordered by number of supporting matches, then name.
pub fn suggest_items(graph: &KnowledgeGraph, requirement: &Requirement) -> Vec<PurchaseItem> {
    let text: Vec<&str> = requirement
        .fields
        .iter()
        .filter(|(k, _)| PROJECT_KEYS.contains(&normalize_key(k).as_str()))
        .map(|(_, v)| v.as_str())
        .collect();
    if text.is_empty() {
        return Vec::new();
    }
    let mut support: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
    for term in searchable_terms(&text.join(" ")) {
        let Ok(sub) = graph.query_contains(&term) else {
            continue;
        };
        let lower = term.to_lowercase();
        for r in sub
            .relations
            .iter()
            .filter(|r| r.rel_type.eq_ignore_ascii_case(PROCUREMENT_ITEM_FOR))
        {
            let (Some(src), Some(dst)) = (graph.entity(&r.src), graph.entity(&r.dst)) else {
                continue;
            };
            for (matched, other) in [(src, dst), (dst, src)] {
                if matched.name.to_lowercase().contains(&lower) {
                    support
                        .entry(other.name.clone())
                        .or_default()
                        .insert((term.clone(), matched.id.clone()));
                }
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = support.into_iter().map(|(n, s)| (n, s.len())).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .map(|(n, _)| PurchaseItem::named(n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub keep: bool,
    pub best_match: usize,
    pub dist: f64,
}

pub fn validate_theta(theta: f64) -> Result<(), KbError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(KbError::InvalidTheta(theta));
    }
    Ok(())
}

/// Keeps `item` when its closest taxonomy entry lies within `theta`.
pub fn classify_item(
    item: &PurchaseItem,
    taxonomy: &[PurchaseItem],
    theta: f64,
    provider: &dyn EmbeddingProvider,
) -> Result<Classification, KbError> {
    validate_theta(theta)?;
    if taxonomy.is_empty() {
        return Err(KbError::EmptyTaxonomy);
    }
    let mut best = (0, f64::INFINITY);
    for (j, entry) in taxonomy.iter().enumerate() {
        let d = item_dist(item, entry, provider)?;
        if d < best.1 {
            best = (j, d);
        }
    }
    Ok(Classification {
        keep: best.1 <= theta,
        best_match: best.0,
        dist: best.1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedItem {
    pub item: PurchaseItem,
    pub best_match: String,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub document: TenderDocument,
    pub dropped: Vec<DroppedItem>,
    pub warnings: Vec<String>,
}

/// Index of the first table with a column whose name contains "name".
pub fn purchase_table_index(doc: &TenderDocument) -> Option<usize> {
    doc.tables.iter().position(|t| {
        t.field_names
            .iter()
            .any(|f| f.to_lowercase().contains("name"))
    })
}

fn format_quantity(q: f64) -> String {
    if q.fract() == 0.0 && q.abs() < 1e15 {
        format!("{}", q as i64)
    } else {
        format!("{q}")
    }
}

fn cell_for(column: &str, item: &PurchaseItem) -> String {
    let c = column.to_lowercase();
    if c.contains("name") {
        item.name.clone()
    } else if c.contains("quantity") || c.contains("qty") || c.contains("amount") {
        item.quantity.map(format_quantity).unwrap_or_default()
    } else if c.contains("unit") {
        item.unit.clone().unwrap_or_default()
    } else if c.contains("spec") || c.contains("param") {
        item.spec.clone().unwrap_or_default()
    } else {
        String::new()
    }
}

fn purchase_rows(table: &TableBlock, items: &[PurchaseItem]) -> Vec<Vec<String>> {
    items
        .iter()
        .map(|item| {
            table
                .field_names
                .iter()
                .map(|c| cell_for(c, item))
                .collect()
        })
        .collect()
}

/// Rewrites the purchase list: the requirement's list filtered through the
/// taxonomy when present, graph suggestions otherwise. The purchase table is
/// rewritten to match.
pub fn refine_purchase_list(
    doc: &TenderDocument,
    requirement: &Requirement,
    graph: &KnowledgeGraph,
    taxonomy: &[PurchaseItem],
    theta: f64,
    provider: &dyn EmbeddingProvider,
) -> Result<RefineOutcome, KbError> {
    validate_theta(theta)?;
    let mut warnings = Vec::new();
    let mut dropped = Vec::new();
    let items = match requirement.current_list() {
        Some(c_list) if taxonomy.is_empty() => {
            warnings.push("taxonomy is empty; purchase list kept unfiltered".to_string());
            c_list.to_vec()
        }
        Some(c_list) => {
            let mut kept = Vec::with_capacity(c_list.len());
            for item in c_list {
                let c = classify_item(item, taxonomy, theta, provider)?;
                if c.keep {
                    kept.push(item.clone());
                } else {
                    dropped.push(DroppedItem {
                        item: item.clone(),
                        best_match: taxonomy[c.best_match].name.clone(),
                        dist: c.dist,
                    });
                }
            }
            kept
        }
        None => {
            let suggested = suggest_items(graph, requirement);
            if suggested.is_empty() {
                warnings
                    .push("no purchase items could be suggested from the knowledge graph".into());
            }
            suggested
        }
    };

    let mut out = doc.clone();
    match purchase_table_index(&out) {
        Some(t) => {
            let rows = purchase_rows(&out.tables[t], &items);
            out.tables[t].rows = rows;
        }
        None => {
            warnings.push("document has no purchase table; only the item list was updated".into())
        }
    }
    out.purchase_items = items;
    out.validate()?;
    Ok(RefineOutcome {
        document: out,
        dropped,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use indexmap::IndexMap;

    use super::*;
    use crate::text_metrics::TestEmbedder;

    const FLU_TSV: &str = "influenza A virus detection kit\tis a kind of\tTest kit\n\
PCR kit\tis the procurement item for\tinfluenza A virus testing project\n\
Microbial detection reagents\tis a kind of\tReagent\n";

    #[test]
    fn loader_dedups() {
        let (g, r) = parse_triples("a\tr\tb\nb\tr\tc\n").unwrap();
        assert_eq!((r.entities, r.relations), (3, 2));
        assert_eq!(g.entities().len(), 3);
        let (_, r) = parse_triples("a\tr\tb\na\tr\tb\n").unwrap();
        assert_eq!(r.relations, 1);
        assert_eq!(r.duplicate_relations, 1);
    }

    #[test]
    fn loader_rejects_bad_lines() {
        for (text, line) in [("a\tb\n", 1), ("x\ty\tz\na\t\tb\n", 2), ("a\tr\ta\n", 1)] {
            match parse_triples(text) {
                Err(KbError::MalformedLine { line: l, .. }) => assert_eq!(l, line),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn loader_is_order_insensitive() {
        let (a, _) = parse_triples("a\tr\tb\nc\tr\tb\n").unwrap();
        let (b, _) = parse_triples("c\tr\tb\na\tr\tb\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn contains_query_returns_neighbourhood() {
        let (g, _) = parse_triples(FLU_TSV).unwrap();
        let sub = g.query_contains("influenza A virus").unwrap();
        let names: BTreeSet<&str> = sub.entities.iter().map(|e| e.name.as_str()).collect();
        assert!(names.contains("influenza A virus detection kit"));
        assert!(names.contains("Test kit"));
        assert!(names.contains("PCR kit"));
        assert!(!names.contains("Reagent"));
        assert_eq!(sub.relations.len(), 2);
        let ids: BTreeSet<&str> = sub.entities.iter().map(|e| e.id.as_str()).collect();
        assert!(sub
            .relations
            .iter()
            .all(|r| ids.contains(r.src.as_str()) && ids.contains(r.dst.as_str())));
        let mut sorted = sub.entities.clone();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        assert_eq!(sorted, sub.entities);
    }

    #[test]
    fn contains_query_edges() {
        let (g, _) = parse_triples(FLU_TSV).unwrap();
        assert_eq!(
            g.query_contains("nothing like this").unwrap(),
            Subgraph::default()
        );
        let full = g.query_contains("PCR kit").unwrap();
        assert!(full.entities.iter().any(|e| e.name == "PCR kit"));
        assert!(matches!(g.query_contains("  "), Err(KbError::EmptyNeedle)));
    }

    #[test]
    fn suggest_from_project_name() {
        let (g, _) = parse_triples(
            "PCR kit\tis the procurement item for\tinfluenza A virus testing project\n",
        )
        .unwrap();
        let req = Requirement::new([("project name", "influenza screening")]);
        assert_eq!(
            suggest_items(&g, &req),
            vec![PurchaseItem::named("PCR kit")]
        );
        let req = Requirement::new([("project name", "office furniture")]);
        assert!(suggest_items(&g, &req).is_empty());
        let req = Requirement::new([("buyer", "influenza")]);
        assert!(suggest_items(&g, &req).is_empty());
    }

    #[test]
    fn suggest_dedups_and_ranks_by_support() {
        let tsv = "PCR kit\tis the procurement item for\tinfluenza virus project\n\
PCR kit\tis the procurement item for\tvirus screening project\n\
swab\tis the procurement item for\tvirus screening project\n";
        let (g, _) = parse_triples(tsv).unwrap();
        let req = Requirement::new([("project name", "influenza virus screening")]);
        let got: Vec<String> = suggest_items(&g, &req)
            .into_iter()
            .map(|i| i.name)
            .collect();
        assert_eq!(got, ["PCR kit", "swab"]);
    }

    #[test]
    fn classify_bounds() {
        let p = TestEmbedder::default();
        let tax = vec![PurchaseItem::named("PCR kit"), PurchaseItem::named("swab")];
        let c = classify_item(&PurchaseItem::named("swab"), &tax, 0.0, &p).unwrap();
        assert!(c.keep);
        assert_eq!(c.dist, 0.0);
        assert_eq!(c.best_match, 1);
        let c = classify_item(&PurchaseItem::named("office chair"), &tax, 0.0, &p).unwrap();
        assert!(!c.keep);
        let c = classify_item(&PurchaseItem::named("office chair"), &tax, 1.0, &p).unwrap();
        assert!(c.keep);
        assert!(matches!(
            classify_item(&PurchaseItem::named("x"), &[], 0.5, &p),
            Err(KbError::EmptyTaxonomy)
        ));
        assert!(matches!(
            classify_item(&PurchaseItem::named("x"), &tax, 1.5, &p),
            Err(KbError::InvalidTheta(_))
        ));
    }

    fn doc_with_table() -> TenderDocument {
        TenderDocument::new(
            "g",
            IndexMap::from([("project name".to_string(), "flu".to_string())]),
            vec!["intro".into()],
            vec![
                TableBlock::new(vec!["clause".into()], vec![vec!["1".into()]]),
                TableBlock::new(
                    vec![
                        "Item Name".into(),
                        "Quantity".into(),
                        "Unit".into(),
                        "Note".into(),
                    ],
                    vec![vec!["old".into(), "1".into(), "box".into(), "n".into()]],
                ),
            ],
            vec![PurchaseItem::named("old")],
        )
        .unwrap()
    }

    #[test]
    fn refine_with_current_list() {
        let p = TestEmbedder::default();
        let tax = vec![PurchaseItem::named("PCR kit"), PurchaseItem::named("swab")];
        let c_list = vec![
            PurchaseItem {
                quantity: Some(10.0),
                unit: Some("box".into()),
                ..PurchaseItem::named("PCR kit")
            },
            PurchaseItem::named("swab"),
        ];
        let req = Requirement::new([("project name", "flu")]).with_items(c_list.clone());
        let out = refine_purchase_list(
            &doc_with_table(),
            &req,
            &KnowledgeGraph::default(),
            &tax,
            0.35,
            &p,
        )
        .unwrap();
        assert_eq!(out.document.purchase_items, c_list);
        assert!(out.dropped.is_empty());
        assert_eq!(
            out.document.tables[1].rows,
            vec![
                vec!["PCR kit".to_string(), "10".into(), "box".into(), "".into()],
                vec!["swab".to_string(), "".into(), "".into(), "".into()],
            ]
        );
        assert_eq!(out.document.tables[0], doc_with_table().tables[0]);

        let again = refine_purchase_list(
            &out.document,
            &req,
            &KnowledgeGraph::default(),
            &tax,
            0.35,
            &p,
        )
        .unwrap();
        assert_eq!(again.document, out.document);
    }

    #[test]
    fn refine_drops_unrelated_items() {
        let p = TestEmbedder::default();
        let tax = vec![PurchaseItem::named("PCR kit")];
        let req = Requirement::new([("project name", "flu")]).with_items(vec![
            PurchaseItem::named("PCR kit"),
            PurchaseItem::named("office desk chair"),
        ]);
        let out = refine_purchase_list(
            &doc_with_table(),
            &req,
            &KnowledgeGraph::default(),
            &tax,
            0.35,
            &p,
        )
        .unwrap();
        assert_eq!(
            out.document.purchase_items,
            vec![PurchaseItem::named("PCR kit")]
        );
        assert_eq!(out.dropped.len(), 1);
        assert_eq!(out.dropped[0].item.name, "office desk chair");
        assert!(out.dropped[0].dist > 0.35);
    }

    #[test]
    fn refine_from_graph_suggestions() {
        let p = TestEmbedder::default();
        let tsv = "PCR kit\tis the procurement item for\tinfluenza testing project\n\
swab\tis the procurement item for\tinfluenza testing project\n";
        let (g, _) = parse_triples(tsv).unwrap();
        let req = Requirement::new([("project name", "influenza 2025")]);
        let out = refine_purchase_list(&doc_with_table(), &req, &g, &[], 0.35, &p).unwrap();
        let names: Vec<_> = out
            .document
            .purchase_items
            .iter()
            .map(|i| i.name.as_str())
            .collect();
        assert_eq!(names, ["PCR kit", "swab"]);
        assert_eq!(out.document.tables[1].rows.len(), 2);
    }

    #[test]
    fn refine_without_purchase_table_warns() {
        let p = TestEmbedder::default();
        let mut doc = doc_with_table();
        doc.tables.truncate(1);
        let req = Requirement::new([("project name", "flu")])
            .with_items(vec![PurchaseItem::named("swab")]);
        let tax = vec![PurchaseItem::named("swab")];
        let out =
            refine_purchase_list(&doc, &req, &KnowledgeGraph::default(), &tax, 0.35, &p).unwrap();
        assert_eq!(out.document.purchase_items.len(), 1);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn extractor_links_items_to_project() {
        let doc = doc_with_table();
        let triples = PurchaseListExtractor::default().extract(&doc);
        assert_eq!(
            triples,
            vec![Triple::new("old", PROCUREMENT_ITEM_FOR, "flu")]
        );
        let (g, report) = KnowledgeGraph::from_documents([&doc], &PurchaseListExtractor::default());
        assert_eq!(report.relations, 1);
        assert!(g.entity_by_name("flu").is_some());
    }
}
