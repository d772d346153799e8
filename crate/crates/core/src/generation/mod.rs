//! Missing-information agent loop and smart-tag template filling.
//!
//! A session starts from a requirement and a template. Required fill tags not
//! covered by the requirement are asked for one by one; once none remain the
//! template is filled, with generate tags delegated to the language model.

mod llm;
mod prompts;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize_key, tags, CorpusError, SmartTag, TagKind, TenderDocument};
use crate::retrieval::Requirement;

pub use llm::{LlmClient, LlmError, MockLlm};
pub use prompts::{
    parse_missing_reply, render_fill_prompt, render_info_block, render_missing_info_prompt,
    render_task_description, sanitize_generated, MissingReply, ALL_INFO_TOKEN, MISSING_SENTENCE,
};

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("session is still collecting information; missing: {}", .missing.join(", "))]
    NotReady { missing: Vec<String> },
    #[error("{0:?} is not a missing key of this session")]
    UnknownKey(String),
    #[error("session already produced its document")]
    SessionClosed,
    #[error("agent reply follows neither protocol form: {0:?}")]
    ProtocolParse(String),
    #[error("template is malformed: {0}")]
    MalformedTemplate(#[source] CorpusError),
    #[error("session was opened on template {expected:?}, not {found:?}")]
    TemplateMismatch { expected: String, found: String },
    #[error(transparent)]
    Llm(#[from] LlmError),
}

impl GenerationError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::NotReady { .. } => "NotReadyError",
            Self::UnknownKey(_) => "UnknownKeyError",
            Self::SessionClosed => "SessionClosedError",
            Self::ProtocolParse(_) => "ProtocolParseError",
            Self::MalformedTemplate(_) => "MalformedTemplate",
            Self::TemplateMismatch { .. } => "TemplateMismatch",
            Self::Llm(_) => "ProviderError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Collecting,
    Ready,
    Generated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Agent,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSession {
    pub session_id: String,
    pub template_id: String,
    /// Normalized key → value.
    pub accumulated_info: BTreeMap<String, String>,
    /// Required fill-tag keys of the template, in template order.
    pub required: Vec<String>,
    pub missing: Vec<String>,
    pub transcript: Vec<TranscriptEntry>,
    pub state: SessionState,
}

impl AgentSession {
    fn push(&mut self, role: Role, text: impl Into<String>) {
        self.transcript.push(TranscriptEntry {
            role,
            text: text.into(),
        });
    }

    fn uncovered(&self) -> Vec<String> {
        self.required
            .iter()
            .filter(|k| !self.accumulated_info.contains_key(*k))
            .cloned()
            .collect()
    }

    fn refresh_state(&mut self) {
        if self.state != SessionState::Generated {
            self.state = if self.missing.is_empty() {
                SessionState::Ready
            } else {
                SessionState::Collecting
            };
        }
    }

    fn missing_sentence(&self) -> String {
        if self.missing.is_empty() {
            ALL_INFO_TOKEN.to_string()
        } else {
            format!("{MISSING_SENTENCE} {}", self.missing.join(", "))
        }
    }

    pub fn is_ready(&self) -> bool {
        self.state == SessionState::Ready
    }

    pub fn missing_info_prompt(&self) -> String {
        render_missing_info_prompt(&self.accumulated_info, &self.required)
    }
}

fn required_keys(tags: &[SmartTag]) -> Vec<String> {
    let mut keys: Vec<String> = Vec::new();
    for t in tags
        .iter()
        .filter(|t| t.required && t.kind == TagKind::Fill)
    {
        let k = normalize_key(&t.key);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys
}

/// Opens a session seeded with the requirement's non-blank fields. A template
/// without tags yields a session that is ready immediately.
pub fn open_session(
    session_id: impl Into<String>,
    requirement: &Requirement,
    template: &TenderDocument,
) -> Result<AgentSession, GenerationError> {
    template
        .validate()
        .map_err(GenerationError::MalformedTemplate)?;
    let accumulated_info = requirement
        .fields
        .iter()
        .filter(|(_, v)| !v.trim().is_empty())
        .map(|(k, v)| (normalize_key(k), v.clone()))
        .collect();
    let mut session = AgentSession {
        session_id: session_id.into(),
        template_id: template.id.clone(),
        accumulated_info,
        required: required_keys(&template.smart_tags()),
        missing: Vec::new(),
        transcript: Vec::new(),
        state: SessionState::Collecting,
    };
    session.missing = session.uncovered();
    session.refresh_state();
    let opening = session.missing_sentence();
    session.push(Role::Agent, opening);
    Ok(session)
}

/// Recomputes the missing keys. The tag-set difference is authoritative; a
/// supplied model is consulted with the missing-information prompt and its
/// parsed answer is only compared against it.
pub fn detect_missing(
    session: &mut AgentSession,
    llm: Option<&dyn LlmClient>,
) -> Result<Vec<String>, GenerationError> {
    if session.state == SessionState::Generated {
        return Err(GenerationError::SessionClosed);
    }
    let deterministic = session.uncovered();
    let reply = match llm {
        Some(llm) => {
            let reply = llm.complete(&session.missing_info_prompt())?;
            let parsed = parse_missing_reply(&reply)
                .ok_or_else(|| GenerationError::ProtocolParse(reply.clone()))?;
            let claimed = match parsed {
                MissingReply::AllInfo => Vec::new(),
                MissingReply::Missing(keys) => keys,
            };
            let mut a = claimed.clone();
            let mut b = deterministic.clone();
            a.sort();
            b.sort();
            if a != b {
                tracing::warn!(
                    session = %session.session_id,
                    model = ?claimed,
                    tags = ?deterministic,
                    "agent disagrees with tag coverage; using tag coverage"
                );
            }
            Some(reply)
        }
        None => None,
    };
    session.missing = deterministic;
    session.refresh_state();
    let text = reply.unwrap_or_else(|| session.missing_sentence());
    session.push(Role::Agent, text);
    Ok(session.missing.clone())
}

/// Records the user's value for a missing key.
pub fn submit_answer(
    session: &mut AgentSession,
    key: &str,
    value: impl Into<String>,
) -> Result<(), GenerationError> {
    if session.state == SessionState::Generated {
        return Err(GenerationError::SessionClosed);
    }
    let key = normalize_key(key);
    let Some(pos) = session.missing.iter().position(|k| *k == key) else {
        return Err(GenerationError::UnknownKey(key));
    };
    let value = value.into();
    session.missing.remove(pos);
    session.push(Role::User, format!("{key}: {value}"));
    session.accumulated_info.insert(key, value);
    session.refresh_state();
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillOptions {
    /// Fill even while keys are missing, leaving `[MISSING:key]` markers.
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillOutcome {
    pub document: TenderDocument,
    pub warnings: Vec<String>,
}

pub fn generated_id(template_id: &str, session_id: &str) -> String {
    format!("{template_id}-{session_id}")
}

struct Filler<'a> {
    info: &'a BTreeMap<String, String>,
    llm: Option<&'a dyn LlmClient>,
    generated: HashMap<String, String>,
    warnings: Vec<String>,
}

impl Filler<'_> {
    fn replacement(&mut self, tag: &SmartTag) -> Result<String, GenerationError> {
        let key = normalize_key(&tag.key);
        match tag.kind {
            TagKind::Fill => Ok(match self.info.get(&key) {
                Some(v) => sanitize_generated(v),
                None => {
                    self.warnings
                        .push(format!("tag {key} left as missing marker"));
                    format!("[MISSING:{key}]")
                }
            }),
            TagKind::Generate => {
                if let Some(done) = self.generated.get(&key) {
                    return Ok(done.clone());
                }
                let text = match self.llm {
                    Some(llm) => {
                        let instruction = tag.instruction.as_deref().unwrap_or_default();
                        sanitize_generated(
                            &llm.complete(&render_fill_prompt(self.info, instruction))?,
                        )
                    }
                    None => {
                        self.warnings.push(format!(
                            "no language model configured; tag {key} left as placeholder"
                        ));
                        format!("[GEN:{key}]")
                    }
                };
                self.generated.insert(key, text.clone());
                Ok(text)
            }
        }
    }

    fn fill(&mut self, text: &str) -> Result<String, GenerationError> {
        let spans = tags::scan(text).expect("template validated before filling");
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        for span in spans {
            out.push_str(&text[last..span.range.start]);
            out.push_str(&self.replacement(&span.tag)?);
            last = span.range.end;
        }
        out.push_str(&text[last..]);
        Ok(out)
    }
}

/// Produces the filled document. Allowed once the session is ready (or, with
/// `force`, while still collecting); refilling a generated session yields the
/// same document.
pub fn fill_template(
    session: &mut AgentSession,
    template: &TenderDocument,
    llm: Option<&dyn LlmClient>,
    options: FillOptions,
) -> Result<FillOutcome, GenerationError> {
    if template.id != session.template_id {
        return Err(GenerationError::TemplateMismatch {
            expected: session.template_id.clone(),
            found: template.id.clone(),
        });
    }
    if session.state == SessionState::Collecting && !options.force {
        return Err(GenerationError::NotReady {
            missing: session.missing.clone(),
        });
    }
    template
        .validate()
        .map_err(GenerationError::MalformedTemplate)?;

    let mut filler = Filler {
        info: &session.accumulated_info,
        llm,
        generated: HashMap::new(),
        warnings: Vec::new(),
    };
    let mut doc = template.clone();
    doc.id = generated_id(&template.id, &session.session_id);
    for (name, value) in doc.fields.iter_mut() {
        *value = match session.accumulated_info.get(&normalize_key(name)) {
            Some(v) => v.clone(),
            None => filler.fill(value)?,
        };
    }
    for p in &mut doc.paragraphs {
        p.text = filler.fill(&p.text)?;
    }
    for table in &mut doc.tables {
        for cell in table.rows.iter_mut().flatten() {
            *cell = filler.fill(cell)?;
        }
    }
    let warnings = filler.warnings;
    doc.validate().map_err(GenerationError::MalformedTemplate)?;

    session.state = SessionState::Generated;
    session.push(Role::Agent, format!("generated document {}", doc.id));
    Ok(FillOutcome {
        document: doc,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use indexmap::IndexMap;

    use super::*;
    use crate::corpus::TableBlock;

    fn template(paragraphs: &[&str]) -> TenderDocument {
        TenderDocument::new(
            "t1",
            IndexMap::from([("project name".to_string(), "old project".to_string())]),
            paragraphs.iter().map(|s| s.to_string()).collect(),
            vec![TableBlock::new(
                vec!["name".into(), "site".into()],
                vec![vec!["kit".into(), "{{site}}".into()]],
            )],
            vec![],
        )
        .unwrap()
    }

    fn req(pairs: &[(&str, &str)]) -> Requirement {
        Requirement::new(pairs.iter().copied())
    }

    #[test]
    fn covered_tags_open_ready() {
        let t = template(&["Buyer: {{buyer_name}}."]);
        let t = TenderDocument {
            tables: vec![],
            ..t
        };
        let s = open_session("s1", &req(&[("buyer name", "ACME")]), &t).unwrap();
        assert!(s.missing.is_empty());
        assert_eq!(s.state, SessionState::Ready);
    }

    #[test]
    fn uncovered_tags_are_missing_in_order() {
        let t = template(&["{{buyer_name}} by {{deadline}}"]);
        let s = open_session("s1", &req(&[("buyer_name", "ACME")]), &t).unwrap();
        assert_eq!(s.missing, ["deadline", "site"]);
        assert_eq!(s.state, SessionState::Collecting);
    }

    #[test]
    fn no_tags_is_ready() {
        let t = TenderDocument {
            tables: vec![],
            ..template(&["plain"])
        };
        let s = open_session("s1", &req(&[("x", "y")]), &t).unwrap();
        assert_eq!(s.state, SessionState::Ready);
    }

    #[test]
    fn generate_tags_do_not_block() {
        let t = TenderDocument {
            tables: vec![],
            ..template(&["{{gen:scope|Summarize}}"])
        };
        let s = open_session("s1", &req(&[("x", "y")]), &t).unwrap();
        assert!(s.is_ready());
    }

    #[test]
    fn detect_missing_paths() {
        let t = TenderDocument {
            tables: vec![],
            ..template(&["{{a}} {{b}}"])
        };
        let mut s = open_session("s1", &req(&[("a", "1")]), &t).unwrap();
        assert_eq!(detect_missing(&mut s, None).unwrap(), ["b"]);
        assert_eq!(detect_missing(&mut s, Some(&MockLlm)).unwrap(), ["b"]);
        submit_answer(&mut s, "b", "2").unwrap();
        assert!(detect_missing(&mut s, Some(&MockLlm)).unwrap().is_empty());
        assert_eq!(s.transcript.last().unwrap().text, "[ALL_INFO]");
    }

    struct Fixed(&'static str);
    impl LlmClient for Fixed {
        fn complete(&self, _: &str) -> Result<String, LlmError> {
            Ok(self.0.to_string())
        }
    }

    #[test]
    fn detect_missing_with_scripted_replies() {
        let t = TenderDocument {
            tables: vec![],
            ..template(&["{{buyer_name}} {{deadline}}"])
        };
        let mut s = open_session("s1", &req(&[("buyer_name", "ACME")]), &t).unwrap();
        let got = detect_missing(
            &mut s,
            Some(&Fixed(
                "the missing information to satisfy the request is deadline",
            )),
        )
        .unwrap();
        assert_eq!(got, ["deadline"]);
        // A disagreeing reply does not change the authoritative answer.
        assert_eq!(
            detect_missing(&mut s, Some(&Fixed("[ALL_INFO]"))).unwrap(),
            ["deadline"]
        );
        assert!(matches!(
            detect_missing(&mut s, Some(&Fixed("no idea"))),
            Err(GenerationError::ProtocolParse(_))
        ));

        let mut done =
            open_session("s2", &req(&[("buyer_name", "A"), ("deadline", "B")]), &t).unwrap();
        assert!(detect_missing(&mut done, Some(&Fixed("[ALL_INFO]")))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn answers_drive_state() {
        let t = template(&["{{a}} {{b}}"]);
        let mut s = open_session("s1", &req(&[("x", "y")]), &t).unwrap();
        assert_eq!(s.missing, ["a", "b", "site"]);
        let before = s.transcript.len();
        submit_answer(&mut s, "a", "1").unwrap();
        submit_answer(&mut s, "B", "2").unwrap();
        assert!(s.transcript.len() > before + 1);
        assert_eq!(s.accumulated_info["a"], "1");
        assert_eq!(s.accumulated_info["b"], "2");
        assert!(matches!(
            submit_answer(&mut s, "a", "3"),
            Err(GenerationError::UnknownKey(_))
        ));
        submit_answer(&mut s, "site", "Ward 3").unwrap();
        assert_eq!(s.state, SessionState::Ready);
    }

    #[test]
    fn fill_substitutes_tags() {
        let t = template(&["Buyer: {{buyer_name}}."]);
        let mut s =
            open_session("s1", &req(&[("buyer_name", "ACME"), ("site", "Lab")]), &t).unwrap();
        let out = fill_template(&mut s, &t, None, FillOptions::default()).unwrap();
        assert_eq!(out.document.paragraphs[0].text, "Buyer: ACME.");
        assert_eq!(out.document.tables[0].rows[0], ["kit", "Lab"]);
        assert_eq!(out.document.id, "t1-s1");
        assert_eq!(s.state, SessionState::Generated);
        assert!(matches!(
            submit_answer(&mut s, "x", "y"),
            Err(GenerationError::SessionClosed)
        ));
    }

    #[test]
    fn fill_is_deterministic() {
        let t = template(&["{{buyer_name}} {{gen:scope|Summarize the scope}}"]);
        let mut s =
            open_session("s1", &req(&[("buyer_name", "ACME"), ("site", "Lab")]), &t).unwrap();
        let a = fill_template(&mut s, &t, Some(&MockLlm), FillOptions::default()).unwrap();
        let b = fill_template(&mut s, &t, Some(&MockLlm), FillOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.document.paragraphs[0].text, "ACME Summarize the scope");
    }

    #[test]
    fn generate_without_model_uses_placeholder() {
        let t = template(&["{{gen:scope|Summarize}}"]);
        let mut s = open_session("s1", &req(&[("site", "Lab")]), &t).unwrap();
        let out = fill_template(&mut s, &t, None, FillOptions::default()).unwrap();
        assert_eq!(out.document.paragraphs[0].text, "[GEN:scope]");
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn not_ready_and_force() {
        let t = template(&["{{a}}"]);
        let mut s = open_session("s1", &req(&[("x", "y")]), &t).unwrap();
        assert!(matches!(
            fill_template(&mut s, &t, None, FillOptions::default()),
            Err(GenerationError::NotReady { .. })
        ));
        let out = fill_template(&mut s, &t, None, FillOptions { force: true }).unwrap();
        assert_eq!(out.document.paragraphs[0].text, "[MISSING:a]");
        assert_eq!(out.document.tables[0].rows[0][1], "[MISSING:site]");
    }

    #[test]
    fn requirement_fields_override_template_fields() {
        let t = template(&["x"]);
        let mut s = open_session(
            "s1",
            &req(&[("Project Name", "new flu project"), ("site", "L")]),
            &t,
        )
        .unwrap();
        let out = fill_template(&mut s, &t, None, FillOptions::default()).unwrap();
        assert_eq!(out.document.fields["project name"], "new flu project");
    }

    #[test]
    fn values_cannot_inject_tags() {
        let t = template(&["{{a}}"]);
        let mut s = open_session("s1", &req(&[("a", "{{evil}}"), ("site", "L")]), &t).unwrap();
        let out = fill_template(&mut s, &t, None, FillOptions::default()).unwrap();
        assert!(!out.document.paragraphs[0].text.contains("{{"));
    }

    #[test]
    fn template_mismatch() {
        let t = template(&["x"]);
        let mut s = open_session("s1", &req(&[("site", "L")]), &t).unwrap();
        let other = TenderDocument {
            id: "t2".into(),
            ..t
        };
        assert!(matches!(
            fill_template(&mut s, &other, None, FillOptions::default()),
            Err(GenerationError::TemplateMismatch { .. })
        ));
    }
}
