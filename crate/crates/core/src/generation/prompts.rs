//! Prompt rendering and reply parsing for the two agent tasks: finding
//! missing parameters and generating tag content.

use std::collections::BTreeMap;

use crate::corpus::{normalize_key, tags};

pub const ALL_INFO_TOKEN: &str = "[ALL_INFO]";
pub const MISSING_SENTENCE: &str = "the missing information to satisfy the request is";

pub(crate) const MISSING_PROMPT_HEAD: &str =
    "You are an assistant helping to search which information is missing. The available information is:";
pub(crate) const MISSING_PROMPT_RULES: &str = "Your output must be like this: the missing information to satisfy the request is INFORMATION_MISSING.\nIf you have the information write the token [ALL_INFO]. Strictly respond with only the information that is missing.";
pub(crate) const TASK_HEAD: &str = "I want you to fill this template";
pub(crate) const FILL_PROMPT_HEAD: &str =
    "You are an assistant with the purpose of generating a document with the available information.";
pub(crate) const FILL_PROMPT_INFO: &str = "You have the following information:";
pub(crate) const FILL_PROMPT_TASK: &str = "Please fill the template";

/// One `key: value` line per entry, sorted by key. Newlines inside values are
/// flattened so the block stays line-oriented.
pub fn render_info_block(info: &BTreeMap<String, String>) -> String {
    if info.is_empty() {
        return "(none)".to_string();
    }
    info.iter()
        .map(|(k, v)| format!("{k}: {}", v.replace(['\r', '\n'], " ")))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_task_description(required_keys: &[String]) -> String {
    let tags: Vec<String> = required_keys
        .iter()
        .map(|k| format!("{{{{{k}}}}}"))
        .collect();
    format!(
        "{TASK_HEAD} {}\nWhat is the missing information?",
        tags.join(" ")
    )
}

/// Prompt asking the agent which parameters are still missing.
pub fn render_missing_info_prompt(
    info: &BTreeMap<String, String>,
    required_keys: &[String],
) -> String {
    format!(
        "{MISSING_PROMPT_HEAD}\n{}\n{MISSING_PROMPT_RULES}\n{}",
        render_info_block(info),
        render_task_description(required_keys)
    )
}

/// Prompt asking the agent to produce the content of one generate tag.
pub fn render_fill_prompt(info: &BTreeMap<String, String>, instruction: &str) -> String {
    format!(
        "{FILL_PROMPT_HEAD} {FILL_PROMPT_INFO}\n{}\n{FILL_PROMPT_TASK} {instruction}.",
        render_info_block(info)
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MissingReply {
    AllInfo,
    Missing(Vec<String>),
}

/// Parses an agent reply. The missing-information sentence wins over the
/// `[ALL_INFO]` token when it names at least one key.
pub fn parse_missing_reply(reply: &str) -> Option<MissingReply> {
    let lower = reply.to_ascii_lowercase();
    if let Some(pos) = lower.find(MISSING_SENTENCE) {
        let rest = &reply[pos + MISSING_SENTENCE.len()..];
        let keys = split_keys(rest);
        if !keys.is_empty() {
            return Some(MissingReply::Missing(keys));
        }
    }
    if reply.contains(ALL_INFO_TOKEN) {
        return Some(MissingReply::AllInfo);
    }
    None
}

fn split_keys(list: &str) -> Vec<String> {
    let mut keys = Vec::new();
    for piece in list.split([',', ';', '\n']) {
        for part in piece.split(" and ") {
            let part = part
                .trim()
                .trim_matches(|c: char| c == '.' || c == '"' || c == '\'' || c == '`');
            let part = part.trim_start_matches("{{").trim_end_matches("}}");
            let key = normalize_key(part);
            if !key.is_empty() && tags::is_valid_key(&key) && !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    keys
}

/// Strips tag delimiters from model output so generated text can never
/// reintroduce tags.
pub fn sanitize_generated(text: &str) -> String {
    let mut out = text.trim().to_string();
    while out.contains("{{") || out.contains("}}") {
        out = out.replace("{{", "{").replace("}}", "}");
    }
    out
}
