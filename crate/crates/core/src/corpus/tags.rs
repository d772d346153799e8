//! Smart-tag grammar.
//!
//! Fill tags are written `{{key}}` and are replaced verbatim from accumulated
//! information. Generate tags are written `{{gen:key|instruction}}` and are
//! replaced by model output for the instruction. Tags never nest, and every
//! `{{` must be closed by a `}}` before the next `{{` opens.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

const OPEN: &str = "{{";
const CLOSE: &str = "}}";
const GEN_PREFIX: &str = "gen:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagKind {
    Fill,
    Generate,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SmartTag {
    pub key: String,
    pub kind: TagKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
    /// Fill tags must be answered before a template can be filled; generate
    /// tags are produced by the model and never block.
    pub required: bool,
}

impl SmartTag {
    pub fn fill(key: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            kind: TagKind::Fill,
            instruction: None,
            required: true,
        }
    }

    pub fn generate(key: impl Into<String>, instruction: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            kind: TagKind::Generate,
            instruction: Some(instruction.into()),
            required: false,
        }
    }

    /// Canonical source form of the tag.
    pub fn render(&self) -> String {
        match (self.kind, &self.instruction) {
            (TagKind::Generate, Some(instruction)) => {
                format!("{OPEN}{GEN_PREFIX}{}|{instruction}{CLOSE}", self.key)
            }
            _ => format!("{OPEN}{}{CLOSE}", self.key),
        }
    }
}

/// A tag occurrence inside a string, with the byte range of the full
/// `{{...}}` span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSpan {
    pub range: Range<usize>,
    pub tag: SmartTag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TagGrammarIssue {
    Unclosed { offset: usize },
    Nested { offset: usize },
    StrayClose { offset: usize },
    InvalidKey { key: String },
    MissingInstruction { key: String },
}

impl fmt::Display for TagGrammarIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Unclosed { offset } => write!(f, "'{{{{' at byte {offset} is never closed"),
            Self::Nested { offset } => write!(f, "nested '{{{{' at byte {offset}"),
            Self::StrayClose { offset } => write!(f, "'}}}}' at byte {offset} has no opening"),
            Self::InvalidKey { key } => {
                write!(f, "tag key {key:?} must match [A-Za-z0-9_.]+")
            }
            Self::MissingInstruction { key } => {
                write!(f, "generate tag {key:?} needs a non-empty instruction")
            }
        }
    }
}

pub fn is_valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn parse_body(body: &str) -> Result<SmartTag, TagGrammarIssue> {
    let body = body.trim();
    if let Some(rest) = body.strip_prefix(GEN_PREFIX) {
        let (key, instruction) = match rest.split_once('|') {
            Some((key, instruction)) => (key.trim(), instruction.trim()),
            None => (rest.trim(), ""),
        };
        if !is_valid_key(key) {
            return Err(TagGrammarIssue::InvalidKey {
                key: key.to_string(),
            });
        }
        if instruction.is_empty() {
            return Err(TagGrammarIssue::MissingInstruction {
                key: key.to_string(),
            });
        }
        return Ok(SmartTag::generate(key, instruction));
    }
    if !is_valid_key(body) {
        return Err(TagGrammarIssue::InvalidKey {
            key: body.to_string(),
        });
    }
    Ok(SmartTag::fill(body))
}

/// Single left-to-right scan returning every tag in `text`.
pub fn scan(text: &str) -> Result<Vec<TagSpan>, TagGrammarIssue> {
    let mut spans = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let next_open = rest.find(OPEN);
        let next_close = rest.find(CLOSE);
        match (next_open, next_close) {
            (None, None) => break,
            (None, Some(c)) => return Err(TagGrammarIssue::StrayClose { offset: pos + c }),
            (Some(o), Some(c)) if c < o => {
                return Err(TagGrammarIssue::StrayClose { offset: pos + c })
            }
            (Some(o), _) => {
                let start = pos + o;
                let body_start = start + OPEN.len();
                let after = &text[body_start..];
                let close = after
                    .find(CLOSE)
                    .ok_or(TagGrammarIssue::Unclosed { offset: start })?;
                if let Some(inner) = after[..close].find(OPEN) {
                    return Err(TagGrammarIssue::Nested {
                        offset: body_start + inner,
                    });
                }
                let end = body_start + close + CLOSE.len();
                let tag = parse_body(&after[..close])?;
                spans.push(TagSpan {
                    range: start..end,
                    tag,
                });
                pos = end;
            }
        }
    }
    Ok(spans)
}

/// Rewrites every tag in `text` through `replace`. The text must already be
/// grammatical; on a grammar error the input is returned unchanged.
pub fn substitute(text: &str, mut replace: impl FnMut(&SmartTag) -> String) -> String {
    let Ok(spans) = scan(text) else {
        return text.to_string();
    };
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for span in spans {
        out.push_str(&text[last..span.range.start]);
        out.push_str(&replace(&span.tag));
        last = span.range.end;
    }
    out.push_str(&text[last..]);
    out
}
