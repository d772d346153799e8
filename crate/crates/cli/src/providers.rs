//! Runtime providers selected by configuration, including the HTTP clients
//! for remote embedding and completion services.

use std::sync::Arc;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tenderforge_core::generation::LlmError;
use tenderforge_core::text_metrics::CachedProvider;
use tenderforge_core::{
    EmbeddingError, EmbeddingProvider, EmbeddingVector, LlmClient, MockLlm, TestEmbedder,
};

use crate::config::{AppConfig, EmbeddingKind, LlmKind};

/// Blocking JSON POST with retries on transport failures and 5xx replies.
#[derive(Debug, Clone)]
pub struct JsonEndpoint {
    url: String,
    agent: ureq::Agent,
    retries: u32,
}

impl JsonEndpoint {
    pub fn new(url: impl Into<String>, timeout: Duration, retries: u32) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url: url.into(),
            agent,
            retries,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn post<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R, String> {
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(50 << attempt.min(6)));
            }
            match self.agent.post(&self.url).send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .body_mut()
                            .read_json::<R>()
                            .map_err(|e| format!("{}: malformed response: {e}", self.url));
                    }
                    last = format!("{}: HTTP {}", self.url, status.as_u16());
                    if !status.is_server_error() {
                        break;
                    }
                }
                Err(e) => last = format!("{}: {e}", self.url),
            }
            tracing::debug!(url = %self.url, attempt, error = %last, "provider request failed");
        }
        Err(last)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
    dimension: usize,
}

/// Remote encoder speaking `POST /embed {texts} -> {vectors, dimension}`.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    endpoint: JsonEndpoint,
    dimension: usize,
}

impl HttpEmbedder {
    /// `base_url` is the service root; `/embed` is appended.
    pub fn new(base_url: &str, dimension: usize, timeout: Duration, retries: u32) -> Self {
        Self {
            endpoint: JsonEndpoint::new(join(base_url, "embed"), timeout, retries),
            dimension,
        }
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        let mut v = self.embed_batch(&[text])?;
        v.pop()
            .ok_or_else(|| EmbeddingError::InvalidVector("empty response".into()))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let resp: EmbedResponse = self
            .endpoint
            .post(&EmbedRequest { texts })
            .map_err(EmbeddingError::Provider)?;
        if resp.dimension != self.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                left: self.dimension,
                right: resp.dimension,
            });
        }
        if resp.vectors.len() != texts.len() {
            return Err(EmbeddingError::InvalidVector(format!(
                "expected {} vectors, got {}",
                texts.len(),
                resp.vectors.len()
            )));
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dimension {
                    return Err(EmbeddingError::DimensionMismatch {
                        left: self.dimension,
                        right: v.len(),
                    });
                }
                EmbeddingVector::normalized(v)
            })
            .collect()
    }
}

#[derive(Serialize)]
struct CompleteRequest<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct CompleteResponse {
    text: String,
}

/// Remote model speaking `POST /complete {prompt} -> {text}`.
#[derive(Debug, Clone)]
pub struct HttpLlm {
    endpoint: JsonEndpoint,
}

impl HttpLlm {
    pub fn new(base_url: &str, timeout: Duration, retries: u32) -> Self {
        Self {
            endpoint: JsonEndpoint::new(join(base_url, "complete"), timeout, retries),
        }
    }
}

impl LlmClient for HttpLlm {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.endpoint
            .post::<_, CompleteResponse>(&CompleteRequest { prompt })
            .map(|r| r.text)
            .map_err(LlmError)
    }
}

fn join(base: &str, path: &str) -> String {
    format!("{}/{path}", base.trim_end_matches('/'))
}

/// The embedding provider and optional model chosen by a config.
#[derive(Clone)]
pub struct Providers {
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub llm: Option<Arc<dyn LlmClient>>,
}

impl Providers {
    pub fn from_config(config: &AppConfig) -> Self {
        let e = &config.embedding;
        let embedder: Arc<dyn EmbeddingProvider> = match e.provider {
            EmbeddingKind::Test => Arc::new(CachedProvider::new(TestEmbedder::new(e.dimension))),
            EmbeddingKind::Http => Arc::new(CachedProvider::new(HttpEmbedder::new(
                e.url.as_deref().unwrap_or_default(),
                e.dimension,
                Duration::from_millis(e.timeout_ms),
                e.retries,
            ))),
        };
        let l = &config.llm;
        let llm: Option<Arc<dyn LlmClient>> = match l.provider {
            LlmKind::Mock => Some(Arc::new(MockLlm)),
            LlmKind::Http => Some(Arc::new(HttpLlm::new(
                l.url.as_deref().unwrap_or_default(),
                Duration::from_millis(l.timeout_ms),
                l.retries,
            ))),
            LlmKind::None => None,
        };
        Self { embedder, llm }
    }

    pub fn embedder(&self) -> &dyn EmbeddingProvider {
        self.embedder.as_ref()
    }

    pub fn llm(&self) -> Option<&dyn LlmClient> {
        self.llm.as_deref()
    }
}
