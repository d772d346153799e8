use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::evaluate;
use super::synthetic::{generate, SyntheticConfig};
use super::EvalError;
use crate::corpus::{Corpus, PurchaseItem, TenderDocument};
use crate::generation::{
    detect_missing, fill_template, open_session, render_fill_prompt, sanitize_generated,
    submit_answer, FillOptions, LlmClient,
};
use crate::knowledge_base::{refine_purchase_list, validate_theta, KnowledgeGraph, DEFAULT_THETA};
use crate::reranker::{rerank, DEFAULT_ALPHA};
use crate::retrieval::{build_index, retrieve, Indexes, Requirement};
use crate::text_metrics::EmbeddingProvider;

/// Published scores of the full framework. They come from a private corpus
/// and proprietary models and cannot be reproduced here.
pub const REFERENCE_PARA_SCORE: f64 = 78.31;
pub const REFERENCE_TABLE_SCORE: f64 = 76.15;
pub const REFERENCE_SCORE: f64 = 77.74;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Retrieve, re-rank, fill, refine.
    Full,
    /// Retrieved template returned untouched.
    NoFill,
    /// Uniformly random template, then fill and refine.
    RandomTemplate,
    /// The model rewrites each paragraph of the retrieved template.
    RetrievalOnly,
    /// The model drafts from the requirement alone.
    LlmOnly,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::NoFill,
        Variant::RandomTemplate,
        Variant::RetrievalOnly,
        Variant::LlmOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoFill => "no_fill",
            Variant::RandomTemplate => "random_template",
            Variant::RetrievalOnly => "retrieval_only",
            Variant::LlmOnly => "llm_only",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "Full framework",
            Variant::NoFill => "r.m. Template Filling module",
            Variant::RandomTemplate => "r.m. Template Retrieval module",
            Variant::RetrievalOnly => "Mock LLM with retrieval module",
            Variant::LlmOnly => "Mock LLM",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| EvalError::Config(format!("unknown variant {s:?}")))
    }
}

fn default_variants() -> Vec<String> {
    Variant::ALL.iter().map(|v| v.name().to_string()).collect()
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_theta() -> f64 {
    DEFAULT_THETA
}
fn default_k() -> usize {
    10
}
fn default_templates() -> usize {
    SyntheticConfig::default().templates
}
fn default_cases() -> usize {
    SyntheticConfig::default().cases
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub seed: u64,
    /// Retrieval depth before re-ranking.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Synthetic corpus size.
    #[serde(default = "default_templates")]
    pub templates: usize,
    /// Held-out gold documents.
    #[serde(default = "default_cases")]
    pub cases: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            variants: default_variants(),
            alpha: DEFAULT_ALPHA,
            theta: DEFAULT_THETA,
            seed: 0,
            k: default_k(),
            templates: default_templates(),
            cases: default_cases(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| EvalError::Config(e.to_string()))
    }

    /// Parsed variant list; unknown names and an empty list are rejected.
    pub fn parsed_variants(&self) -> Result<Vec<Variant>, EvalError> {
        if self.variants.is_empty() {
            return Err(EvalError::Config("variant list is empty".into()));
        }
        self.variants.iter().map(|v| v.parse()).collect()
    }

    pub fn validate(&self) -> Result<Vec<Variant>, EvalError> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(EvalError::Config(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        validate_theta(self.theta).map_err(|e| EvalError::Config(e.to_string()))?;
        if self.k == 0 {
            return Err(EvalError::Config("k must be >= 1".into()));
        }
        if self.templates == 0 || self.cases == 0 {
            return Err(EvalError::Config("templates and cases must be >= 1".into()));
        }
        self.parsed_variants()
    }
}

/// A requirement paired with its gold document and the simulated purchaser's
/// answers to the agent, keyed by normalized tag key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCase {
    pub id: String,
    pub requirement: Requirement,
    pub answers: BTreeMap<String, String>,
    pub gold: TenderDocument,
}

/// Everything a pipeline variant may consult.
#[derive(Clone, Copy)]
pub struct PipelineContext<'a> {
    pub corpus: &'a Corpus,
    pub indexes: &'a Indexes,
    pub graph: &'a KnowledgeGraph,
    pub taxonomy: &'a [PurchaseItem],
    pub provider: &'a dyn EmbeddingProvider,
    pub llm: &'a dyn LlmClient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub variant: Variant,
    pub para_score: f64,
    pub table_score: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<VariantRow>,
    pub cases: usize,
    pub templates: usize,
    pub seed: u64,
}

impl ExperimentResult {
    pub fn row(&self, variant: Variant) -> Option<&VariantRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["variant", "para_score", "table_score", "score"])
            .expect("writing to memory");
        for r in &self.rows {
            w.write_record([
                r.variant.name().to_string(),
                format!("{:.4}", r.para_score),
                format!("{:.4}", r.table_score),
                format!("{:.4}", r.score),
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "Reference full-framework scores (published, not reproducible here): \
para {REFERENCE_PARA_SCORE:.2}, table {REFERENCE_TABLE_SCORE:.2}, score {REFERENCE_SCORE:.2}\n\
Synthetic run: {} templates, {} cases, seed {}\n\n\
| Method | Para. score | Table score | Score |\n|---|---|---|---|\n",
            self.templates, self.cases, self.seed
        );
        for r in &self.rows {
            out.push_str(&format!(
                "| {} | {:.2} | {:.2} | {:.2} |\n",
                r.variant.label(),
                r.para_score,
                r.table_score,
                r.score
            ));
        }
        out
    }
}

/// Top candidate after retrieval and list re-ranking.
pub fn select_template<'a>(
    ctx: &PipelineContext<'a>,
    requirement: &Requirement,
    k: usize,
    alpha: f64,
) -> Result<&'a TenderDocument, EvalError> {
    let candidates = retrieve(requirement, ctx.indexes, ctx.provider, k)?;
    let ranked = rerank(
        candidates,
        ctx.corpus,
        requirement.current_list(),
        alpha,
        ctx.provider,
    )?;
    let best = ranked
        .first()
        .ok_or(crate::retrieval::RetrievalError::EmptyCorpus)?;
    Ok(ctx
        .corpus
        .get(&best.doc_id)
        .expect("retrieved ids come from the indexed corpus"))
}

/// Runs the agent loop against the case's answers, fills the template and
/// refines its purchase list.
pub fn draft_from_template(
    ctx: &PipelineContext<'_>,
    case: &ExperimentCase,
    template: &TenderDocument,
    theta: f64,
) -> Result<TenderDocument, EvalError> {
    let mut session = open_session(format!("{}-session", case.id), &case.requirement, template)?;
    loop {
        let missing = detect_missing(&mut session, Some(ctx.llm))?;
        let mut answered = false;
        for key in missing {
            if let Some(value) = case.answers.get(&key) {
                submit_answer(&mut session, &key, value.clone())?;
                answered = true;
            }
        }
        if session.is_ready() || !answered {
            break;
        }
    }
    let force = !session.is_ready();
    let filled = fill_template(&mut session, template, Some(ctx.llm), FillOptions { force })?;
    let refined = refine_purchase_list(
        &filled.document,
        &case.requirement,
        ctx.graph,
        ctx.taxonomy,
        theta,
        ctx.provider,
    )?;
    Ok(refined.document)
}

fn model_info(case: &ExperimentCase) -> BTreeMap<String, String> {
    let mut info: BTreeMap<String, String> = case
        .requirement
        .queried_fields()
        .map(|(k, v)| (crate::corpus::normalize_key(k), v.to_string()))
        .collect();
    info.extend(case.answers.clone());
    info
}

fn free_form(
    case: &ExperimentCase,
    suffix: &str,
    paragraphs: Vec<String>,
) -> Result<TenderDocument, EvalError> {
    let fields: IndexMap<String, String> = case.requirement.fields.clone();
    Ok(TenderDocument::new(
        format!("{}-{suffix}", case.id),
        fields,
        paragraphs,
        Vec::new(),
        Vec::new(),
    )?)
}

/// The model rewrites every paragraph of the reference template. Tables are
/// not produced.
pub fn draft_with_reference(
    ctx: &PipelineContext<'_>,
    case: &ExperimentCase,
    reference: &TenderDocument,
) -> Result<TenderDocument, EvalError> {
    let info = model_info(case);
    let mut paragraphs = Vec::with_capacity(reference.paragraphs.len());
    for p in reference.paragraph_texts() {
        let instruction = format!("rewrite this reference paragraph for the new project: {p}");
        let reply = ctx.llm.complete(&render_fill_prompt(&info, &instruction))?;
        paragraphs.push(sanitize_generated(&reply));
    }
    free_form(case, "retrieval_only", paragraphs)
}

const LLM_ONLY_SECTIONS: [&str; 4] = [
    "write the tender announcement for the project",
    "describe the technical requirements for the goods",
    "explain how and when bids must be submitted",
    "state the budget and the bidder qualifications",
];

/// The model drafts a fixed set of sections from the requirement alone.
pub fn draft_without_template(
    ctx: &PipelineContext<'_>,
    case: &ExperimentCase,
) -> Result<TenderDocument, EvalError> {
    let info = model_info(case);
    let mut paragraphs = Vec::with_capacity(LLM_ONLY_SECTIONS.len());
    for section in LLM_ONLY_SECTIONS {
        let reply = ctx.llm.complete(&render_fill_prompt(&info, section))?;
        paragraphs.push(sanitize_generated(&reply));
    }
    free_form(case, "llm_only", paragraphs)
}

/// Scores every configured variant on every case and averages per variant.
/// The random-template variant draws from a generator seeded by
/// `config.seed`, so results are reproducible.
pub fn run_experiment(
    ctx: &PipelineContext<'_>,
    cases: &[ExperimentCase],
    config: &ExperimentConfig,
) -> Result<ExperimentResult, EvalError> {
    let variants = config.validate()?;
    if ctx.corpus.is_empty() {
        return Err(crate::retrieval::RetrievalError::EmptyCorpus.into());
    }
    let mut rows = Vec::with_capacity(variants.len());
    for variant in variants {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9E37_79B9_7F4A_7C15);
        let (mut para, mut table, mut score) = (0.0, 0.0, 0.0);
        for case in cases {
            let doc = match variant {
                Variant::Full => {
                    let t = select_template(ctx, &case.requirement, config.k, config.alpha)?;
                    draft_from_template(ctx, case, t, config.theta)?
                }
                Variant::NoFill => {
                    select_template(ctx, &case.requirement, config.k, config.alpha)?.clone()
                }
                Variant::RandomTemplate => {
                    let t = &ctx.corpus.documents()[rng.random_range(0..ctx.corpus.len())];
                    draft_from_template(ctx, case, t, config.theta)?
                }
                Variant::RetrievalOnly => {
                    let t = select_template(ctx, &case.requirement, config.k, config.alpha)?;
                    draft_with_reference(ctx, case, t)?
                }
                Variant::LlmOnly => draft_without_template(ctx, case)?,
            };
            let report = evaluate(&doc, &case.gold, ctx.provider, config.alpha)?;
            para += report.para_score;
            table += report.table_score;
            score += report.score;
        }
        let n = cases.len().max(1) as f64;
        rows.push(VariantRow {
            variant,
            para_score: para / n,
            table_score: table / n,
            score: score / n,
        });
    }
    Ok(ExperimentResult {
        rows,
        cases: cases.len(),
        templates: ctx.corpus.len(),
        seed: config.seed,
    })
}

/// Generates a synthetic corpus from the config, indexes it and runs the
/// experiment on its held-out cases.
pub fn run_synthetic_experiment(
    config: &ExperimentConfig,
    provider: &dyn EmbeddingProvider,
    llm: &dyn LlmClient,
) -> Result<ExperimentResult, EvalError> {
    config.validate()?;
    let set = generate(&SyntheticConfig {
        templates: config.templates,
        cases: config.cases,
        seed: config.seed,
    });
    let indexes = build_index(&set.corpus, provider)?;
    let ctx = PipelineContext {
        corpus: &set.corpus,
        indexes: &indexes,
        graph: &set.graph,
        taxonomy: &set.taxonomy,
        provider,
        llm,
    };
    run_experiment(&ctx, &set.cases, config)
}
