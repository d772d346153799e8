mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use common::*;
use serde_json::{json, Value};
use tenderforge_cli::data::KnowledgeBase;
use tenderforge_cli::server::Snapshot;
use tenderforge_cli::{router, AppConfig, AppState, Providers, SessionStore};
use tenderforge_core::evaluation::synthetic::SyntheticSet;
use tenderforge_core::retrieval::{build_index, retrieve};
use tenderforge_core::{Requirement, TestEmbedder};
use tower::ServiceExt;

fn state(set: &SyntheticSet, sessions: SessionStore) -> Arc<AppState> {
    let config = AppConfig::default();
    let providers = Providers::from_config(&config);
    let indexes = build_index(&set.corpus, providers.embedder()).unwrap();
    Arc::new(AppState::new(
        config,
        providers,
        Snapshot {
            corpus: set.corpus.clone(),
            indexes: Some(indexes),
        },
        KnowledgeBase {
            graph: set.graph.clone(),
            taxonomy: set.taxonomy.clone(),
        },
        sessions,
    ))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX)
        .await
        .unwrap();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{e}: {bytes:?}"));
    (status, value)
}

#[tokio::test]
async fn retrieve_matches_library() {
    let set = fixture();
    let app = router(state(&set, SessionStore::in_memory()));
    let (status, body) = call(
        &app,
        "POST",
        "/retrieve",
        Some(
            json!({"fields": {"project name": "influenza testing", "purpose": "reagent"}, "k": 4}),
        ),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let p = TestEmbedder::default();
    let idx = build_index(&set.corpus, &p).unwrap();
    let req = Requirement::new([
        ("project name", "influenza testing"),
        ("purpose", "reagent"),
    ]);
    let want = retrieve(&req, &idx, &p, 4).unwrap();
    assert_eq!(body["candidates"], serde_json::to_value(&want).unwrap());
}

#[tokio::test]
async fn retrieve_with_c_list_and_rerank_endpoint_agree() {
    let set = fixture();
    let app = router(state(&set, SessionStore::in_memory()));
    let items = json!([{"name": set.corpus.documents()[5].purchase_items[0].name}]);
    let (status, body) = call(
        &app,
        "POST",
        "/retrieve",
        Some(json!({"fields": {"purpose": "supply"}, "c_list": items, "k": 8})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let cands = body["candidates"].as_array().unwrap();
    assert!(cands.iter().all(|c| c["list_dist"].is_number()));
    let ids: Vec<Value> = cands.iter().map(|c| c["doc_id"].clone()).collect();

    let (status, reranked) = call(
        &app,
        "POST",
        "/rerank",
        Some(json!({"candidate_ids": ids, "c_list": items})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let dists = |v: &Value| -> Vec<f64> {
        v["candidates"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["list_dist"].as_f64().unwrap())
            .collect()
    };
    assert_eq!(dists(&reranked), dists(&body));

    let (status, err) = call(
        &app,
        "POST",
        "/rerank",
        Some(json!({"candidate_ids": ["zzz"], "c_list": items})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "UnknownDocumentError");
}

#[tokio::test]
async fn session_flow_generate_refine_evaluate() {
    let set = fixture();
    let app = router(state(&set, SessionStore::in_memory()));
    let case = &set.cases[0];
    let template = &set.corpus.documents()[0];
    let (status, session) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"template_id": template.id, "fields": case.requirement.fields, "c_list": case.requirement.c_list})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let id = session["session_id"].as_str().unwrap().to_string();
    assert_eq!(session["state"], "collecting");

    let (status, err) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/answers"),
        Some(json!({"key": "nope", "value": "x"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "UnknownKeyError");

    let (status, err) = call(&app, "POST", &format!("/sessions/{id}/generate"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "NotReadyError");

    let missing: Vec<String> = serde_json::from_value(session["missing"].clone()).unwrap();
    assert!(!missing.is_empty());
    for key in &missing {
        let (status, _) = call(
            &app,
            "POST",
            &format!("/sessions/{id}/answers"),
            Some(json!({"key": key, "value": case.answers[key]})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
    }
    let (_, session) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(session["state"], "ready");

    let (status, outcome) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/generate"),
        Some(json!({})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(!outcome["document"].to_string().contains("{{"));
    let doc_id = outcome["document"]["id"].as_str().unwrap().to_string();

    let (status, err) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/answers"),
        Some(json!({"key": "a", "value": "b"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "SessionClosedError");

    let (status, refined) = call(&app, "POST", &format!("/documents/{doc_id}/refine"), None).await;
    assert_eq!(status, StatusCode::OK, "{refined}");
    let names: Vec<&str> = refined["document"]["purchase_items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["name"].as_str().unwrap())
        .collect();
    let want: Vec<&str> = case
        .requirement
        .c_list
        .as_ref()
        .unwrap()
        .iter()
        .map(|i| i.name.as_str())
        .collect();
    assert_eq!(names, want);

    let (status, report) = call(
        &app,
        "POST",
        "/evaluate",
        Some(json!({"gen_id": doc_id, "gold_doc": case.gold})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let score = report["score"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&score) && score > 50.0, "{score}");

    let (status, same) = call(
        &app,
        "POST",
        "/evaluate",
        Some(json!({"gen_id": doc_id, "gold_id": doc_id})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(same["score"].as_f64(), Some(100.0));

    let (status, err) = call(&app, "POST", "/evaluate", Some(json!({"gen_id": doc_id}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["code"], "SchemaError");
}

#[tokio::test]
async fn forced_generation_leaves_markers() {
    let set = fixture();
    let app = router(state(&set, SessionStore::in_memory()));
    let (_, session) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"template_id": set.corpus.documents()[1].id, "fields": {"purpose": "x"}})),
    )
    .await;
    let id = session["session_id"].as_str().unwrap();
    let (status, outcome) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/generate"),
        Some(json!({"force": true})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(outcome["document"].to_string().contains("[MISSING:"));
    assert!(!outcome["warnings"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn corpus_growth_makes_index_stale_until_rebuilt() {
    let set = fixture();
    let app = router(state(&set, SessionStore::in_memory()));
    let (_, health) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(
        health,
        json!({"corpus_size": 8, "index_fingerprint": set.corpus.fingerprint()})
    );

    let mut doc = set.corpus.documents()[2].clone();
    doc.id = "fresh".into();
    let (status, update) = call(
        &app,
        "POST",
        "/corpus/documents",
        Some(serde_json::to_value(&doc).unwrap()),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(update["index_stale"], true);

    let query = json!({"fields": {"purpose": "supply"}});
    let (status, err) = call(&app, "POST", "/retrieve", Some(query.clone())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "IndexCorpusMismatch");

    let (status, built) = call(&app, "POST", "/index/build", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(built["documents"], 9);
    let (status, _) = call(&app, "POST", "/retrieve", Some(query)).await;
    assert_eq!(status, StatusCode::OK);
    let (_, health) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(health["corpus_size"], 9);
    assert_eq!(health["index_fingerprint"], built["index_fingerprint"]);

    let (status, err) = call(
        &app,
        "POST",
        "/corpus/documents",
        Some(serde_json::to_value(&doc).unwrap()),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "DuplicateIdError");
}

#[tokio::test]
async fn restart_reproduces_sessions() {
    let set = fixture();
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("sessions.jsonl");
    let app = router(state(&set, SessionStore::open(Some(&snap)).unwrap()));
    let (_, session) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"template_id": set.corpus.documents()[0].id, "fields": {"purpose": "x"}})),
    )
    .await;
    let id = session["session_id"].as_str().unwrap().to_string();
    let key = session["missing"][0].as_str().unwrap().to_string();
    let (_, after) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/answers"),
        Some(json!({"key": key, "value": "v"})),
    )
    .await;

    let restarted = router(state(&set, SessionStore::open(Some(&snap)).unwrap()));
    let (status, reloaded) = call(&restarted, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(reloaded, after);
    let (_, next) = call(
        &restarted,
        "POST",
        "/sessions",
        Some(json!({"template_id": set.corpus.documents()[0].id, "fields": {"purpose": "y"}})),
    )
    .await;
    assert_ne!(next["session_id"], id.as_str());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_answers_are_serialized() {
    let set = fixture();
    let app = router(state(&set, SessionStore::in_memory()));
    let (_, session) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"template_id": set.corpus.documents()[0].id, "fields": {"purpose": "x"}})),
    )
    .await;
    let id = session["session_id"].as_str().unwrap().to_string();
    let missing: Vec<String> = serde_json::from_value(session["missing"].clone()).unwrap();
    let tasks: Vec<_> = missing
        .iter()
        .map(|k| {
            let (app, id, k) = (app.clone(), id.clone(), k.clone());
            tokio::spawn(async move {
                call(
                    &app,
                    "POST",
                    &format!("/sessions/{id}/answers"),
                    Some(json!({"key": k, "value": "v"})),
                )
                .await
            })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap().0, StatusCode::OK);
    }
    let (_, done) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(done["state"], "ready");
    assert_eq!(
        done["accumulated_info"].as_object().unwrap().len(),
        missing.len() + 1
    );
}

#[tokio::test]
async fn errors_are_json() {
    let set = fixture();
    let app = router(state(&set, SessionStore::in_memory()));
    let (status, err) = call(&app, "GET", "/nowhere", None).await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("NotFound"))
    );
    let (status, err) = call(&app, "GET", "/sessions/s99", None).await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("UnknownSessionError"))
    );
    let (status, err) = call(&app, "POST", "/retrieve", Some(json!({"fields": 3}))).await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::BAD_REQUEST, Some("SchemaError"))
    );
    let (status, err) = call(
        &app,
        "POST",
        "/retrieve",
        Some(json!({"fields": {"purpose": "  "}})),
    )
    .await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::BAD_REQUEST, Some("EmptyQuery"))
    );
    let (status, err) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"template_id": "missing", "fields": {}})),
    )
    .await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("UnknownDocumentError"))
    );
}

#[tokio::test]
async fn kb_entities_contains() {
    let set = fixture();
    let app = router(state(&set, SessionStore::in_memory()));
    let needle = set.graph.entities()[0].name.clone();
    let (status, sub) = call(
        &app,
        "GET",
        &format!("/kb/entities?contains={}", needle.replace(' ', "%20")),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        serde_json::to_value(set.graph.query_contains(&needle).unwrap()).unwrap(),
        sub
    );
    let (status, err) = call(&app, "GET", "/kb/entities", None).await;
    assert_eq!(
        (status, err["code"].as_str()),
        (StatusCode::BAD_REQUEST, Some("EmptyNeedle"))
    );
}

#[tokio::test]
async fn startup_from_config_files() {
    let set = fixture();
    let f = write_files(&set);
    let config = AppConfig {
        corpus_path: Some(f.corpus.clone()),
        index_path: Some(f.path("idx.bin")),
        triples_path: Some(f.triples.clone()),
        taxonomy_path: Some(f.taxonomy.clone()),
        ..AppConfig::default()
    };
    let s = tokio::task::spawn_blocking(move || AppState::from_config(config))
        .await
        .unwrap()
        .unwrap();
    assert!(f.path("idx.bin").exists());
    assert_eq!(s.taxonomy.len(), set.taxonomy.len());
    let app = router(Arc::new(s));
    let (_, health) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(health["index_fingerprint"], set.corpus.fingerprint());
}
