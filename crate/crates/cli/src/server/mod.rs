//! JSON HTTP service over the drafting pipeline.
//!
//! Corpus and indexes live in one immutable snapshot behind a lock; readers
//! clone the `Arc` and never observe a half-built index. Session mutations go
//! through [`SessionStore`], which serializes them per session.

mod error;

use std::sync::{Arc, Mutex, PoisonError, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use tenderforge_core::corpus::{parse_document, Corpus, CorpusError};
use tenderforge_core::evaluation::evaluate;
use tenderforge_core::generation::{
    detect_missing, fill_template, open_session, submit_answer, FillOptions, FillOutcome,
};
use tenderforge_core::knowledge_base::{refine_purchase_list, RefineOutcome, Subgraph};
use tenderforge_core::reranker::rerank;
use tenderforge_core::retrieval::{build_index, retrieve};
use tenderforge_core::{
    AgentSession, EvaluationReport, Indexes, KnowledgeGraph, PurchaseItem, Requirement,
    ScoredCandidate, TenderDocument,
};
use thiserror::Error;

use error::optional_body;
pub use error::{status_for, ApiError, ApiJson};

use crate::config::AppConfig;
use crate::data::{self, KnowledgeBase};
use crate::providers::Providers;
use crate::store::{SessionRecord, SessionStore, StoreError};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("startup: {0}")]
    Startup(#[from] tenderforge_core::Error),
    #[error("startup: {0}")]
    Store(#[from] StoreError),
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

impl ServeError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Bind { .. } => "BindError",
            Self::Startup(e) => e.code(),
            Self::Store(e) => e.code(),
            Self::Io(_) => "IoError",
        }
    }
}

/// Corpus plus the indexes built from some version of it.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub corpus: Corpus,
    pub indexes: Option<Indexes>,
}

pub struct AppState {
    pub config: AppConfig,
    pub providers: Providers,
    pub graph: KnowledgeGraph,
    pub taxonomy: Vec<PurchaseItem>,
    pub sessions: SessionStore,
    data: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
}

impl AppState {
    pub fn new(
        config: AppConfig,
        providers: Providers,
        snapshot: Snapshot,
        kb: KnowledgeBase,
        sessions: SessionStore,
    ) -> Self {
        Self {
            config,
            providers,
            graph: kb.graph,
            taxonomy: kb.taxonomy,
            sessions,
            data: RwLock::new(Arc::new(snapshot)),
            writer: Mutex::new(()),
        }
    }

    /// Loads corpus, index, knowledge base and session snapshot named by the
    /// config. A missing index file is rebuilt from a non-empty corpus; an
    /// existing one is loaded as is, so a stale index surfaces on retrieval.
    pub fn from_config(config: AppConfig) -> Result<Self, ServeError> {
        let providers = Providers::from_config(&config);
        let corpus = data::corpus_or_empty(config.corpus_path.as_deref())
            .map_err(tenderforge_core::Error::from)?;
        let indexes = match &config.index_path {
            Some(p) if p.exists() => Some(Indexes::load(p).map_err(tenderforge_core::Error::from)?),
            _ if corpus.is_empty() => None,
            index_path => {
                let idx = build_index(&corpus, providers.embedder())
                    .map_err(tenderforge_core::Error::from)?;
                if let Some(p) = index_path {
                    idx.save(p).map_err(tenderforge_core::Error::from)?;
                }
                Some(idx)
            }
        };
        let kb = data::knowledge_base(
            config.triples_path.as_deref(),
            config.taxonomy_path.as_deref(),
        )
        .map_err(tenderforge_core::Error::from)?;
        let sessions = SessionStore::open(config.server.session_snapshot.as_deref())?;
        Ok(Self::new(
            config,
            providers,
            Snapshot { corpus, indexes },
            kb,
            sessions,
        ))
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.data
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .clone()
    }

    fn swap(&self, next: Snapshot) {
        *self.data.write().unwrap_or_else(PoisonError::into_inner) = Arc::new(next);
    }

    fn document(&self, id: &str) -> Result<TenderDocument, ApiError> {
        if let Some(doc) = self.sessions.find_document(id).and_then(|r| r.document) {
            return Ok(doc);
        }
        self.snapshot()
            .corpus
            .get(id)
            .cloned()
            .ok_or_else(|| CorpusError::UnknownId(id.to_string()).into())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/corpus/documents", post(add_document))
        .route("/index/build", post(build))
        .route("/retrieve", post(retrieve_candidates))
        .route("/rerank", post(rerank_candidates))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/answers", post(answer))
        .route("/sessions/{id}/generate", post(generate))
        .route("/documents/{id}/refine", post(refine))
        .route("/evaluate", post(evaluate_documents))
        .route("/kb/entities", get(kb_entities))
        .fallback(|| async { ApiError::new("NotFound", "no such endpoint") })
        .with_state(state)
}

/// Binds the configured address and serves until interrupted.
pub async fn serve(config: AppConfig) -> Result<(), ServeError> {
    let addr = config.server.bind.clone();
    let state = Arc::new(
        tokio::task::spawn_blocking(move || AppState::from_config(config))
            .await
            .map_err(|e| ServeError::Io(std::io::Error::other(e.to_string())))??,
    );
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| ServeError::Bind {
            addr: addr.clone(),
            source,
        })?;
    tracing::info!(%addr, corpus = state.snapshot().corpus.len(), "serving");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

type St = State<Arc<AppState>>;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Health {
    pub corpus_size: usize,
    pub index_fingerprint: Option<String>,
}

async fn healthz(State(s): St) -> Json<Health> {
    let snap = s.snapshot();
    Json(Health {
        corpus_size: snap.corpus.len(),
        index_fingerprint: snap.indexes.as_ref().map(|i| i.fingerprint().to_string()),
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusUpdate {
    pub id: String,
    pub corpus_size: usize,
    pub corpus_fingerprint: String,
    /// Whether retrieval needs `/index/build` before it works again.
    pub index_stale: bool,
}

async fn add_document(
    State(s): St,
    body: Bytes,
) -> Result<(StatusCode, Json<CorpusUpdate>), ApiError> {
    blocking(move || {
        let text =
            std::str::from_utf8(&body).map_err(|e| ApiError::new("SchemaError", e.to_string()))?;
        let doc = parse_document(text)?;
        let _writing = s.writer.lock().unwrap_or_else(PoisonError::into_inner);
        let snap = s.snapshot();
        let corpus = snap.corpus.with_document(doc.clone())?;
        if let Some(p) = &s.config.corpus_path {
            data::write_corpus(p, &corpus).map_err(CorpusError::from)?;
        }
        let update = CorpusUpdate {
            id: doc.id,
            corpus_size: corpus.len(),
            corpus_fingerprint: corpus.fingerprint().to_string(),
            index_stale: snap
                .indexes
                .as_ref()
                .is_none_or(|i| i.fingerprint() != corpus.fingerprint()),
        };
        s.swap(Snapshot {
            corpus,
            indexes: snap.indexes.clone(),
        });
        Ok((StatusCode::CREATED, Json(update)))
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IndexBuilt {
    pub index_fingerprint: String,
    pub documents: usize,
}

async fn build(State(s): St) -> Result<Json<IndexBuilt>, ApiError> {
    blocking(move || {
        let _writing = s.writer.lock().unwrap_or_else(PoisonError::into_inner);
        let snap = s.snapshot();
        let indexes = build_index(&snap.corpus, s.providers.embedder())?;
        if let Some(p) = &s.config.index_path {
            indexes.save(p)?;
        }
        let built = IndexBuilt {
            index_fingerprint: indexes.fingerprint().to_string(),
            documents: snap.corpus.len(),
        };
        s.swap(Snapshot {
            corpus: snap.corpus.clone(),
            indexes: Some(indexes),
        });
        Ok(Json(built))
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RetrieveRequest {
    #[serde(flatten)]
    pub requirement: Requirement,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Candidates {
    pub candidates: Vec<ScoredCandidate>,
}

fn current_indexes(snap: &Snapshot) -> Result<&Indexes, ApiError> {
    let idx = snap
        .indexes
        .as_ref()
        .ok_or_else(|| ApiError::new("IndexMissing", "no index has been built"))?;
    idx.check_corpus(&snap.corpus)?;
    Ok(idx)
}

async fn retrieve_candidates(
    State(s): St,
    ApiJson(req): ApiJson<RetrieveRequest>,
) -> Result<Json<Candidates>, ApiError> {
    blocking(move || {
        let snap = s.snapshot();
        let idx = current_indexes(&snap)?;
        let k = req.k.unwrap_or(s.config.retrieve.k);
        let p = s.providers.embedder();
        let mut candidates = retrieve(&req.requirement, idx, p, k)?;
        if let Some(c_list) = req.requirement.current_list() {
            candidates = rerank(
                candidates,
                &snap.corpus,
                Some(c_list),
                s.config.rerank.alpha,
                p,
            )?;
        }
        Ok(Json(Candidates { candidates }))
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RerankRequest {
    pub candidate_ids: Vec<String>,
    pub c_list: Vec<PurchaseItem>,
}

async fn rerank_candidates(
    State(s): St,
    ApiJson(req): ApiJson<RerankRequest>,
) -> Result<Json<Candidates>, ApiError> {
    blocking(move || {
        let snap = s.snapshot();
        if let Some(id) = req
            .candidate_ids
            .iter()
            .find(|id| snap.corpus.get(id).is_none())
        {
            return Err(CorpusError::UnknownId(id.clone()).into());
        }
        let cands = req
            .candidate_ids
            .iter()
            .map(ScoredCandidate::unscored)
            .collect();
        let candidates = rerank(
            cands,
            &snap.corpus,
            Some(&req.c_list),
            s.config.rerank.alpha,
            s.providers.embedder(),
        )?;
        Ok(Json(Candidates { candidates }))
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OpenRequest {
    pub template_id: String,
    pub fields: IndexMap<String, String>,
    #[serde(default)]
    pub c_list: Option<Vec<PurchaseItem>>,
}

async fn create_session(
    State(s): St,
    ApiJson(req): ApiJson<OpenRequest>,
) -> Result<(StatusCode, Json<AgentSession>), ApiError> {
    blocking(move || {
        let template = s
            .snapshot()
            .corpus
            .get(&req.template_id)
            .cloned()
            .ok_or_else(|| CorpusError::UnknownId(req.template_id.clone()))?;
        let requirement = Requirement {
            fields: req.fields,
            c_list: req.c_list,
        };
        let record = s.sessions.create::<ApiError>(|id| {
            Ok(SessionRecord {
                session: open_session(id, &requirement, &template)?,
                requirement: requirement.clone(),
                document: None,
            })
        })?;
        Ok((StatusCode::CREATED, Json(record.session)))
    })
    .await
}

async fn get_session(State(s): St, Path(id): Path<String>) -> Result<Json<AgentSession>, ApiError> {
    s.sessions
        .get(&id)
        .map(|r| Json(r.session))
        .ok_or_else(|| StoreError::UnknownSession(id).into())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub key: String,
    pub value: String,
}

async fn answer(
    State(s): St,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<AnswerRequest>,
) -> Result<Json<AgentSession>, ApiError> {
    blocking(move || {
        let llm = s.providers.llm();
        let session = s.sessions.update::<_, ApiError>(&id, |r| {
            submit_answer(&mut r.session, &req.key, req.value)?;
            detect_missing(&mut r.session, llm)?;
            Ok(r.session.clone())
        })?;
        Ok(Json(session))
    })
    .await
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct GenerateRequest {
    #[serde(default)]
    pub force: bool,
}

async fn generate(
    State(s): St,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<FillOutcome>, ApiError> {
    let req: GenerateRequest = optional_body(&body)?;
    blocking(move || {
        let snap = s.snapshot();
        let llm = s.providers.llm();
        let outcome = s.sessions.update::<_, ApiError>(&id, |r| {
            let template = snap
                .corpus
                .get(&r.session.template_id)
                .ok_or_else(|| CorpusError::UnknownId(r.session.template_id.clone()))?;
            let outcome = fill_template(
                &mut r.session,
                template,
                llm,
                FillOptions { force: req.force },
            )?;
            r.document = Some(outcome.document.clone());
            Ok(outcome)
        })?;
        Ok(Json(outcome))
    })
    .await
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct RefineRequest {
    /// Overrides the requirement of the session that produced the document;
    /// required for corpus documents.
    #[serde(default)]
    pub fields: Option<IndexMap<String, String>>,
    #[serde(default)]
    pub c_list: Option<Vec<PurchaseItem>>,
}

async fn refine(
    State(s): St,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<RefineOutcome>, ApiError> {
    let req: RefineRequest = optional_body(&body)?;
    blocking(move || {
        let theta = s.config.kb.theta;
        let run = |doc: &TenderDocument, base: Requirement| {
            let requirement = Requirement {
                fields: req.fields.clone().unwrap_or(base.fields),
                c_list: req.c_list.clone().or(base.c_list),
            };
            refine_purchase_list(
                doc,
                &requirement,
                &s.graph,
                &s.taxonomy,
                theta,
                s.providers.embedder(),
            )
        };
        if let Some(record) = s.sessions.find_document(&id) {
            let sid = record.session.session_id.clone();
            let outcome = s.sessions.update::<_, ApiError>(&sid, |r| {
                let doc = r
                    .document
                    .as_ref()
                    .filter(|d| d.id == id)
                    .ok_or_else(|| CorpusError::UnknownId(id.clone()))?;
                let outcome = run(doc, r.requirement.clone())?;
                r.document = Some(outcome.document.clone());
                Ok(outcome)
            })?;
            return Ok(Json(outcome));
        }
        let snap = s.snapshot();
        let doc = snap
            .corpus
            .get(&id)
            .ok_or_else(|| CorpusError::UnknownId(id.clone()))?;
        Ok(Json(run(doc, Requirement::default())?))
    })
    .await
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct EvaluateRequest {
    #[serde(default)]
    pub gen_id: Option<String>,
    #[serde(default)]
    pub gen_doc: Option<TenderDocument>,
    #[serde(default)]
    pub gold_id: Option<String>,
    #[serde(default)]
    pub gold_doc: Option<TenderDocument>,
}

fn pick(
    s: &AppState,
    which: &str,
    id: Option<String>,
    doc: Option<TenderDocument>,
) -> Result<TenderDocument, ApiError> {
    match (id, doc) {
        (Some(id), None) => s.document(&id),
        (None, Some(doc)) => {
            doc.validate()?;
            Ok(doc)
        }
        _ => Err(ApiError::new(
            "SchemaError",
            format!("exactly one of {which}_id and {which}_doc is required"),
        )),
    }
}

async fn evaluate_documents(
    State(s): St,
    ApiJson(req): ApiJson<EvaluateRequest>,
) -> Result<Json<EvaluationReport>, ApiError> {
    blocking(move || {
        let generated = pick(&s, "gen", req.gen_id, req.gen_doc)?;
        let gold = pick(&s, "gold", req.gold_id, req.gold_doc)?;
        Ok(Json(evaluate(
            &generated,
            &gold,
            s.providers.embedder(),
            s.config.rerank.alpha,
        )?))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct KbQuery {
    #[serde(default)]
    pub contains: String,
}

async fn kb_entities(State(s): St, Query(q): Query<KbQuery>) -> Result<Json<Subgraph>, ApiError> {
    Ok(Json(s.graph.query_contains(&q.contains)?))
}
