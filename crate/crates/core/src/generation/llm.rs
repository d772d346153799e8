use std::sync::Arc;

use thiserror::Error;

use super::prompts::{
    ALL_INFO_TOKEN, FILL_PROMPT_TASK, MISSING_PROMPT_HEAD, MISSING_PROMPT_RULES, MISSING_SENTENCE,
    TASK_HEAD,
};
use crate::corpus::{normalize_key, tags};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("language model failed: {0}")]
pub struct LlmError(pub String);

/// Completion contract for the drafting agents.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

impl<L: LlmClient + ?Sized> LlmClient for Arc<L> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

impl<L: LlmClient + ?Sized> LlmClient for Box<L> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

/// Deterministic offline model.
///
/// Missing-information prompts are answered by diffing the keys of the
/// rendered information block against the tags listed in the task
/// description. Fill prompts are answered by echoing the instruction. Any
/// other prompt is echoed back trimmed.
#[derive(Debug, Clone, Default)]
pub struct MockLlm;

impl MockLlm {
    fn answer_missing(prompt: &str) -> String {
        let info_start = prompt
            .find(MISSING_PROMPT_HEAD)
            .map(|p| p + MISSING_PROMPT_HEAD.len());
        let info_end = prompt.find(MISSING_PROMPT_RULES);
        let known: Vec<String> = match (info_start, info_end) {
            (Some(s), Some(e)) if s <= e => prompt[s..e]
                .lines()
                .filter_map(|l| l.split_once(": "))
                .map(|(k, _)| normalize_key(k))
                .collect(),
            _ => Vec::new(),
        };
        let task = prompt.rfind(TASK_HEAD).map_or("", |p| &prompt[p..]);
        let missing: Vec<String> = tags::scan(task)
            .unwrap_or_default()
            .into_iter()
            .map(|s| normalize_key(&s.tag.key))
            .filter(|k| !known.contains(k))
            .collect();
        if missing.is_empty() {
            ALL_INFO_TOKEN.to_string()
        } else {
            format!("{MISSING_SENTENCE} {}", missing.join(", "))
        }
    }
}

impl LlmClient for MockLlm {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        if prompt.contains(MISSING_PROMPT_HEAD) {
            return Ok(Self::answer_missing(prompt));
        }
        if let Some(pos) = prompt.rfind(FILL_PROMPT_TASK) {
            let instruction = prompt[pos + FILL_PROMPT_TASK.len()..].trim();
            let instruction = instruction.strip_suffix('.').unwrap_or(instruction);
            return Ok(instruction.trim().to_string());
        }
        Ok(prompt.trim().to_string())
    }
}
