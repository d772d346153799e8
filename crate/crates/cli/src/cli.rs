//! `tenderforge` command line. Every subcommand wraps one library operation.
//!
//! Exit status is 0 on success, 1 when the library reports an error and 2 for
//! usage or configuration problems.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use tenderforge_core::corpus::{
    load_corpus, normalize_key, parse_corpus, parse_document, serialize_document, Format,
};
use tenderforge_core::evaluation::{evaluate, run_synthetic_experiment, ExperimentConfig};
use tenderforge_core::generation::{
    detect_missing, fill_template, open_session, submit_answer, FillOptions,
};
use tenderforge_core::knowledge_base::{load_triples, refine_purchase_list};
use tenderforge_core::reranker::rerank;
use tenderforge_core::retrieval::{build_index, retrieve};
use tenderforge_core::{Indexes, MockLlm, PurchaseItem, Requirement, ScoredCandidate};

use crate::config::{AppConfig, ConfigError};
use crate::data;
use crate::providers::Providers;

#[derive(Debug, Parser)]
#[command(
    name = "tenderforge",
    version,
    about = "Retrieve, fill, refine and score tender documents"
)]
pub struct Cli {
    /// Print machine-readable JSON to stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArg {
    /// Application config file (TOML or JSON).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate documents from a JSONL file and append them to the corpus.
    Ingest {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long, value_name = "JSONL")]
        input: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Build the vocabulary and embedding indexes for a corpus.
    BuildIndex {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank templates for a requirement; re-ranks when items are given.
    Retrieve {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Corpus to check the index against; needed with --item.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Requirement field as `name=value`.
        #[arg(long = "field", value_name = "NAME=VALUE", value_parser = parse_pair, required = true)]
        fields: Vec<(String, String)>,
        /// Purchase item as `name[|quantity[|unit]]`.
        #[arg(long = "item", value_name = "ITEM", value_parser = parse_item)]
        items: Vec<PurchaseItem>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Order corpus documents by purchase-list distance.
    Rerank {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long = "candidate", value_name = "ID", required = true)]
        candidates: Vec<String>,
        #[arg(long = "item", value_name = "ITEM", value_parser = parse_item, required = true)]
        items: Vec<PurchaseItem>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Run the missing-information loop on a template and fill it.
    Generate {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        template: String,
        #[arg(long = "field", value_name = "NAME=VALUE", value_parser = parse_pair)]
        fields: Vec<(String, String)>,
        #[arg(long = "item", value_name = "ITEM", value_parser = parse_item)]
        items: Vec<PurchaseItem>,
        /// Answer for a missing tag as `key=value`.
        #[arg(long = "answer", value_name = "KEY=VALUE", value_parser = parse_pair)]
        answers: Vec<(String, String)>,
        /// Ask for unanswered keys on stdin.
        #[arg(long)]
        interactive: bool,
        /// Fill even with keys missing, leaving `[MISSING:key]` markers.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite a document's purchase list from the taxonomy or the graph.
    Refine {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        doc: PathBuf,
        #[arg(long = "field", value_name = "NAME=VALUE", value_parser = parse_pair)]
        fields: Vec<(String, String)>,
        #[arg(long = "item", value_name = "ITEM", value_parser = parse_item)]
        items: Vec<PurchaseItem>,
        #[arg(long)]
        triples: Option<PathBuf>,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a generated document against a gold document.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Entities whose name contains a string, with the relations among them.
    KbQuery {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        triples: Option<PathBuf>,
        #[arg(long)]
        contains: String,
    },
    /// Run the ablation experiment on a generated synthetic corpus.
    Experiment {
        /// Experiment config (JSON).
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Application config, for provider settings.
        #[arg(long, value_name = "FILE")]
        app_config: Option<PathBuf>,
        /// Print the markdown table instead of CSV.
        #[arg(long)]
        markdown: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        bind: Option<String>,
    },
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.to_string())),
        _ => Err(format!("expected NAME=VALUE, got {s:?}")),
    }
}

fn parse_item(s: &str) -> Result<PurchaseItem, String> {
    let mut parts = s.split('|').map(str::trim);
    let name = parts.next().unwrap_or_default();
    if name.is_empty() {
        return Err("item name must be non-empty".into());
    }
    let mut item = PurchaseItem::named(name);
    if let Some(q) = parts.next().filter(|q| !q.is_empty()) {
        item.quantity = Some(q.parse().map_err(|_| format!("bad quantity {q:?}"))?);
    }
    item.unit = parts.next().filter(|u| !u.is_empty()).map(str::to_string);
    if parts.next().is_some() {
        return Err(format!("expected name[|quantity[|unit]], got {s:?}"));
    }
    Ok(item)
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain { code: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Domain { .. } => 1,
        }
    }

    fn domain(code: &str, message: impl Into<String>) -> Self {
        Self::Domain {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::domain(e.code(), e.to_string())
            }
        }
    )*};
}

domain_from!(
    tenderforge_core::Error,
    tenderforge_core::CorpusError,
    tenderforge_core::RetrievalError,
    tenderforge_core::RerankError,
    tenderforge_core::GenerationError,
    tenderforge_core::KbError,
    tenderforge_core::EvalError,
    crate::server::ServeError
);

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::domain("IoError", e.to_string())
    }
}

fn need(
    path: Option<PathBuf>,
    fallback: &Option<PathBuf>,
    what: &str,
) -> Result<PathBuf, CliError> {
    path.or_else(|| fallback.clone())
        .ok_or_else(|| CliError::Usage(format!("no {what} given (flag or config)")))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::domain("IoError", format!("{}: {e}", path.display())))
}

fn requirement(fields: Vec<(String, String)>, items: Vec<PurchaseItem>) -> Requirement {
    let r = Requirement::new(fields);
    if items.is_empty() {
        r
    } else {
        r.with_items(items)
    }
}

/// Streams a command writes to.
pub struct Io<'a> {
    pub input: &'a mut dyn BufRead,
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

struct Ctx<'a, 'b> {
    io: &'b mut Io<'a>,
    json: bool,
}

impl Ctx<'_, '_> {
    fn emit<T: Serialize>(
        &mut self,
        value: &T,
        text: impl FnOnce() -> String,
    ) -> Result<(), CliError> {
        if self.json {
            let s = serde_json::to_string_pretty(value).expect("outputs serialize");
            writeln!(self.io.out, "{s}")?;
        } else {
            write!(self.io.out, "{}", text())?;
        }
        Ok(())
    }

    fn warn(&mut self, msg: &str) -> Result<(), CliError> {
        writeln!(self.io.err, "warning: {msg}")?;
        Ok(())
    }
}

fn candidate_lines(cands: &[ScoredCandidate]) -> String {
    cands
        .iter()
        .enumerate()
        .map(|(i, c)| match c.list_dist {
            Some(d) => format!(
                "{}\t{}\t{:.6}\tlist_dist {:.6}\n",
                i + 1,
                c.doc_id,
                c.d_score,
                d
            ),
            None => format!("{}\t{}\t{:.6}\n", i + 1, c.doc_id, c.d_score),
        })
        .collect()
}

fn write_doc_or_print(
    ctx: &mut Ctx<'_, '_>,
    out: &Option<PathBuf>,
    doc_json: String,
) -> Result<(), CliError> {
    match out {
        Some(p) => {
            std::fs::write(p, doc_json + "\n")?;
            Ok(())
        }
        None => {
            writeln!(ctx.io.out, "{doc_json}")?;
            Ok(())
        }
    }
}

fn execute(command: Command, ctx: &mut Ctx<'_, '_>) -> Result<(), CliError> {
    match command {
        Command::Ingest { cfg, input, corpus } => {
            let config = AppConfig::load(cfg.config.as_deref())?;
            let corpus_path = need(corpus, &config.corpus_path, "corpus path")?;
            let incoming = parse_corpus(&read(&input)?)?;
            let mut current = data::corpus_or_empty(Some(&corpus_path))?;
            for doc in incoming.iter() {
                current = current.with_document(doc.clone())?;
            }
            data::write_corpus(&corpus_path, &current)?;
            let summary = serde_json::json!({
                "ingested": incoming.len(),
                "corpus_size": current.len(),
                "corpus_fingerprint": current.fingerprint(),
            });
            ctx.emit(&summary, || {
                format!(
                    "ingested {} documents; corpus has {} ({})\n",
                    incoming.len(),
                    current.len(),
                    current.fingerprint()
                )
            })
        }
        Command::BuildIndex { cfg, corpus, out } => {
            let config = AppConfig::load(cfg.config.as_deref())?;
            let corpus = load_corpus(need(corpus, &config.corpus_path, "corpus path")?)?;
            let out = need(out, &config.index_path, "index output path")?;
            let providers = Providers::from_config(&config);
            let idx = build_index(&corpus, providers.embedder())?;
            idx.save(&out)?;
            let summary = serde_json::json!({
                "documents": corpus.len(),
                "index_fingerprint": idx.fingerprint(),
                "path": out,
            });
            ctx.emit(&summary, || {
                format!(
                    "indexed {} documents into {} ({})\n",
                    corpus.len(),
                    out.display(),
                    idx.fingerprint()
                )
            })
        }
        Command::Retrieve {
            cfg,
            index,
            corpus,
            fields,
            items,
            k,
            alpha,
        } => {
            let config = AppConfig::load(cfg.config.as_deref())?;
            let idx = Indexes::load(need(index, &config.index_path, "index path")?)?;
            let corpus_path = corpus.or_else(|| config.corpus_path.clone());
            let corpus = match &corpus_path {
                Some(p) => {
                    let c = load_corpus(p)?;
                    idx.check_corpus(&c)?;
                    Some(c)
                }
                None => None,
            };
            let providers = Providers::from_config(&config);
            let req = requirement(fields, items);
            let mut cands = retrieve(
                &req,
                &idx,
                providers.embedder(),
                k.unwrap_or(config.retrieve.k),
            )?;
            if let Some(c_list) = req.current_list() {
                let corpus = corpus.as_ref().ok_or_else(|| {
                    CliError::Usage("--item needs --corpus to read purchase lists".into())
                })?;
                let alpha = alpha.unwrap_or(config.rerank.alpha);
                cands = rerank(cands, corpus, Some(c_list), alpha, providers.embedder())?;
            }
            ctx.emit(&cands, || candidate_lines(&cands))
        }
        Command::Rerank {
            cfg,
            corpus,
            candidates,
            items,
            alpha,
        } => {
            let config = AppConfig::load(cfg.config.as_deref())?;
            let corpus = load_corpus(need(corpus, &config.corpus_path, "corpus path")?)?;
            if let Some(id) = candidates.iter().find(|id| corpus.get(id).is_none()) {
                return Err(tenderforge_core::CorpusError::UnknownId(id.clone()).into());
            }
            let providers = Providers::from_config(&config);
            let cands = candidates.iter().map(ScoredCandidate::unscored).collect();
            let alpha = alpha.unwrap_or(config.rerank.alpha);
            let ranked = rerank(cands, &corpus, Some(&items), alpha, providers.embedder())?;
            ctx.emit(&ranked, || candidate_lines(&ranked))
        }
        Command::Generate {
            cfg,
            corpus,
            template,
            fields,
            items,
            answers,
            interactive,
            force,
            out,
        } => {
            let config = AppConfig::load(cfg.config.as_deref())?;
            let corpus = load_corpus(need(corpus, &config.corpus_path, "corpus path")?)?;
            let template = corpus
                .get(&template)
                .ok_or_else(|| tenderforge_core::CorpusError::UnknownId(template.clone()))?;
            let providers = Providers::from_config(&config);
            let llm = providers.llm();
            let mut answers: BTreeMap<String, String> = answers
                .into_iter()
                .map(|(k, v)| (normalize_key(&k), v))
                .collect();
            let mut session = open_session("cli", &requirement(fields, items), template)?;
            loop {
                let missing = detect_missing(&mut session, llm)?;
                let Some(key) = missing.first() else { break };
                let value = match answers.remove(key) {
                    Some(v) => v,
                    None if interactive => {
                        write!(ctx.io.err, "{key}? ")?;
                        ctx.io.err.flush()?;
                        let mut line = String::new();
                        if ctx.io.input.read_line(&mut line)? == 0 {
                            break;
                        }
                        line.trim_end_matches(['\r', '\n']).to_string()
                    }
                    None => break,
                };
                submit_answer(&mut session, key, value)?;
            }
            for key in answers.keys() {
                ctx.warn(&format!("answer for {key} was not asked for"))?;
            }
            let outcome = fill_template(&mut session, template, llm, FillOptions { force })?;
            for w in &outcome.warnings {
                ctx.warn(w)?;
            }
            let doc_json = if ctx.json {
                serde_json::to_string_pretty(&serde_json::json!({
                    "document": outcome.document,
                    "warnings": outcome.warnings,
                    "transcript": session.transcript,
                }))
                .expect("outputs serialize")
            } else {
                serialize_document(&outcome.document, Format::Json)
            };
            write_doc_or_print(ctx, &out, doc_json)
        }
        Command::Refine {
            cfg,
            doc,
            fields,
            items,
            triples,
            taxonomy,
            theta,
            out,
        } => {
            let config = AppConfig::load(cfg.config.as_deref())?;
            let doc = parse_document(&read(&doc)?)?;
            let kb = data::knowledge_base(
                triples.or_else(|| config.triples_path.clone()).as_deref(),
                taxonomy.or_else(|| config.taxonomy_path.clone()).as_deref(),
            )?;
            let providers = Providers::from_config(&config);
            let outcome = refine_purchase_list(
                &doc,
                &requirement(fields, items),
                &kb.graph,
                &kb.taxonomy,
                theta.unwrap_or(config.kb.theta),
                providers.embedder(),
            )?;
            for w in &outcome.warnings {
                ctx.warn(w)?;
            }
            for d in &outcome.dropped {
                ctx.warn(&format!(
                    "dropped {:?}: closest taxonomy entry {:?} at distance {:.4}",
                    d.item.name, d.best_match, d.dist
                ))?;
            }
            let doc_json = if ctx.json {
                serde_json::to_string_pretty(&outcome).expect("outputs serialize")
            } else {
                serialize_document(&outcome.document, Format::Json)
            };
            write_doc_or_print(ctx, &out, doc_json)
        }
        Command::Evaluate {
            cfg,
            gen,
            gold,
            alpha,
        } => {
            let config = AppConfig::load(cfg.config.as_deref())?;
            let generated = parse_document(&read(&gen)?)?;
            let gold = parse_document(&read(&gold)?)?;
            let providers = Providers::from_config(&config);
            let report = evaluate(
                &generated,
                &gold,
                providers.embedder(),
                alpha.unwrap_or(config.rerank.alpha),
            )?;
            for w in &report.warnings {
                ctx.warn(w)?;
            }
            ctx.emit(&report, || {
                format!(
                    "para_score\t{:.4}\ntable_score\t{:.4}\nscore\t{:.4}\n",
                    report.para_score, report.table_score, report.score
                )
            })
        }
        Command::KbQuery {
            cfg,
            triples,
            contains,
        } => {
            let config = AppConfig::load(cfg.config.as_deref())?;
            let (graph, _) = load_triples(need(triples, &config.triples_path, "triples path")?)?;
            let sub = graph.query_contains(&contains)?;
            ctx.emit(&sub, || {
                let mut s = String::new();
                for e in &sub.entities {
                    s.push_str(&format!("{}\t{}\n", e.id, e.name));
                }
                for r in &sub.relations {
                    s.push_str(&format!("{}\t{}\t{}\n", r.src, r.rel_type, r.dst));
                }
                s
            })
        }
        Command::Experiment {
            config,
            app_config,
            markdown,
        } => {
            let app = AppConfig::load(app_config.as_deref())?;
            let mut tree = match &config {
                Some(p) => serde_json::from_str::<Value>(&read(p)?).map_err(|e| {
                    CliError::domain("ConfigError", format!("{}: {e}", p.display()))
                })?,
                None => Value::Object(Default::default()),
            };
            if let Value::Object(map) = &mut tree {
                map.entry("seed").or_insert(app.seed.into());
            }
            let exp = ExperimentConfig::from_json(&tree.to_string())?;
            let providers = Providers::from_config(&app);
            let llm = providers.llm().unwrap_or(&MockLlm);
            let result = run_synthetic_experiment(&exp, providers.embedder(), llm)?;
            ctx.emit(&result, || {
                if markdown {
                    result.to_markdown()
                } else {
                    result.to_csv()
                }
            })
        }
        Command::Serve { cfg, bind } => {
            let mut config = AppConfig::load(cfg.config.as_deref())?;
            if let Some(b) = bind {
                config.server.bind = b;
            }
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?;
            rt.block_on(crate::server::serve(config))?;
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                if rendered.contains("Usage:") {
                    write!(io.err, "{rendered}")
                } else {
                    write!(io.err, "{rendered}\n{}\n", synopsis())
                }
            } else {
                write!(io.out, "{rendered}")
            };
            return code;
        }
    };
    let json = cli.json;
    let mut ctx = Ctx { io, json };
    match execute(cli.command, &mut ctx) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            let _ = match &e {
                CliError::Usage(m) => writeln!(ctx.io.err, "usage error: {m}\n\n{}", synopsis()),
                CliError::Domain { code, message } if json => writeln!(
                    ctx.io.err,
                    "{}",
                    serde_json::json!({ "code": code, "message": message })
                ),
                CliError::Domain { code, message } => {
                    writeln!(ctx.io.err, "error [{code}]: {message}")
                }
            };
            code
        }
    }
}

fn synopsis() -> String {
    use clap::CommandFactory;
    Cli::command().render_usage().to_string()
}
