use std::fmt;

use indexmap::IndexMap;
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use super::tags::{self, SmartTag};
use super::{CorpusError, TagLocation};

/// A semi-structured tender document: named fields, paragraphs that may carry
/// smart tags, tables, and the purchase list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawDocument", try_from = "RawDocument")]
pub struct TenderDocument {
    pub id: String,
    pub fields: IndexMap<String, String>,
    pub paragraphs: Vec<ParagraphBlock>,
    pub tables: Vec<TableBlock>,
    pub purchase_items: Vec<PurchaseItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParagraphBlock {
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableBlock {
    pub field_names: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurchaseItem {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
}

impl PurchaseItem {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            quantity: None,
            unit: None,
            spec: None,
        }
    }
}

impl TableBlock {
    pub fn new(field_names: Vec<String>, rows: Vec<Vec<String>>) -> Self {
        Self { field_names, rows }
    }
}

/// Wire shape of a document. Paragraph indices are implicit in array order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawDocument {
    id: String,
    #[serde(deserialize_with = "unique_field_map")]
    fields: IndexMap<String, String>,
    #[serde(default)]
    paragraphs: Vec<String>,
    #[serde(default)]
    tables: Vec<TableBlock>,
    #[serde(default)]
    purchase_items: Vec<PurchaseItem>,
}

fn unique_field_map<'de, D>(de: D) -> Result<IndexMap<String, String>, D::Error>
where
    D: Deserializer<'de>,
{
    struct UniqueMap;

    impl<'de> Visitor<'de> for UniqueMap {
        type Value = IndexMap<String, String>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an object of string field values")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
            let mut out = IndexMap::new();
            while let Some((k, v)) = map.next_entry::<String, String>()? {
                if out.contains_key(&k) {
                    return Err(serde::de::Error::custom(format!(
                        "duplicate field name {k:?}"
                    )));
                }
                out.insert(k, v);
            }
            Ok(out)
        }
    }

    de.deserialize_map(UniqueMap)
}

impl From<TenderDocument> for RawDocument {
    fn from(doc: TenderDocument) -> Self {
        Self {
            id: doc.id,
            fields: doc.fields,
            paragraphs: doc.paragraphs.into_iter().map(|p| p.text).collect(),
            tables: doc.tables,
            purchase_items: doc.purchase_items,
        }
    }
}

impl TryFrom<RawDocument> for TenderDocument {
    type Error = CorpusError;

    fn try_from(raw: RawDocument) -> Result<Self, Self::Error> {
        let doc = TenderDocument {
            id: raw.id,
            fields: raw.fields,
            paragraphs: raw
                .paragraphs
                .into_iter()
                .enumerate()
                .map(|(index, text)| ParagraphBlock { index, text })
                .collect(),
            tables: raw.tables,
            purchase_items: raw.purchase_items,
        };
        doc.validate()?;
        Ok(doc)
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> CorpusError {
    CorpusError::Schema {
        path: path.into(),
        message: message.into(),
        line: None,
    }
}

impl TenderDocument {
    /// Builds a document from paragraph texts, assigning contiguous indices.
    pub fn new(
        id: impl Into<String>,
        fields: IndexMap<String, String>,
        paragraphs: Vec<String>,
        tables: Vec<TableBlock>,
        purchase_items: Vec<PurchaseItem>,
    ) -> Result<Self, CorpusError> {
        TenderDocument::try_from(RawDocument {
            id: id.into(),
            fields,
            paragraphs,
            tables,
            purchase_items,
        })
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.id.trim().is_empty() {
            return Err(schema("id", "document id must be non-empty"));
        }
        if self.fields.is_empty() {
            return Err(schema("fields", "at least one field is required"));
        }
        if self.fields.keys().any(|k| k.trim().is_empty()) {
            return Err(schema("fields", "field names must be non-empty"));
        }
        for (i, p) in self.paragraphs.iter().enumerate() {
            if p.index != i {
                return Err(schema(
                    format!("paragraphs[{i}]"),
                    format!("paragraph index {} out of sequence", p.index),
                ));
            }
            tags::scan(&p.text).map_err(|issue| CorpusError::TagGrammar {
                location: TagLocation::Paragraph(i),
                issue,
                line: None,
            })?;
        }
        for (t, table) in self.tables.iter().enumerate() {
            if table.field_names.is_empty() {
                return Err(schema(
                    format!("tables[{t}].field_names"),
                    "a table needs at least one column",
                ));
            }
            for (r, row) in table.rows.iter().enumerate() {
                if row.len() != table.field_names.len() {
                    return Err(schema(
                        format!("tables[{t}].rows[{r}]"),
                        format!(
                            "row has {} cells, expected {}",
                            row.len(),
                            table.field_names.len()
                        ),
                    ));
                }
                for (c, cell) in row.iter().enumerate() {
                    tags::scan(cell).map_err(|issue| CorpusError::TagGrammar {
                        location: TagLocation::Cell {
                            table: t,
                            row: r,
                            column: c,
                        },
                        issue,
                        line: None,
                    })?;
                }
            }
        }
        for (i, item) in self.purchase_items.iter().enumerate() {
            if item.name.trim().is_empty() {
                return Err(schema(
                    format!("purchase_items[{i}].name"),
                    "item name must be non-empty",
                ));
            }
            if let Some(q) = item.quantity {
                if !q.is_finite() || q < 0.0 {
                    return Err(schema(
                        format!("purchase_items[{i}].quantity"),
                        "quantity must be a finite non-negative number",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn field(&self, name: &str) -> Option<&str> {
        self.fields.get(name).map(String::as_str)
    }

    pub fn paragraph_texts(&self) -> impl Iterator<Item = &str> {
        self.paragraphs.iter().map(|p| p.text.as_str())
    }

    /// Smart tags in first-occurrence order (paragraphs, then table cells in
    /// row-major order), deduplicated by key.
    pub fn smart_tags(&self) -> Vec<SmartTag> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        let cells = self
            .tables
            .iter()
            .flat_map(|t| t.rows.iter().flatten().map(String::as_str));
        for text in self.paragraph_texts().chain(cells) {
            // Grammar is checked at construction, so scan cannot fail here.
            for span in tags::scan(text).unwrap_or_default() {
                if seen.insert(span.tag.key.clone()) {
                    out.push(span.tag);
                }
            }
        }
        out
    }
}

/// Parses one JSON document, naming the offending path on schema errors.
pub fn parse_document(raw: &str) -> Result<TenderDocument, CorpusError> {
    let de = &mut serde_json::Deserializer::from_str(raw);
    let parsed: RawDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;
    TenderDocument::try_from(parsed)
}

pub fn extract_smart_tags(doc: &TenderDocument) -> Vec<SmartTag> {
    doc.smart_tags()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(format!(
                "unknown format {other:?} (expected json or markdown)"
            )),
        }
    }
}

pub fn serialize_document(doc: &TenderDocument, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string(doc).expect("documents always serialize"),
        Format::Markdown => to_markdown(doc),
    }
}

fn escape_cell(cell: &str) -> String {
    cell.replace('|', "\\|").replace('\n', " ")
}

fn to_markdown(doc: &TenderDocument) -> String {
    let mut out = format!("# {}\n", doc.id);
    for p in &doc.paragraphs {
        out.push('\n');
        out.push_str(&p.text);
        out.push('\n');
    }
    for table in &doc.tables {
        out.push('\n');
        let header: Vec<_> = table.field_names.iter().map(|c| escape_cell(c)).collect();
        out.push_str(&format!("| {} |\n", header.join(" | ")));
        let rule = vec!["---"; table.field_names.len()];
        out.push_str(&format!("| {} |\n", rule.join(" | ")));
        for row in &table.rows {
            let cells: Vec<_> = row.iter().map(|c| escape_cell(c)).collect();
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
    }
    out
}
