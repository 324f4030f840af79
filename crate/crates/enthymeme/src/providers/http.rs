//! JSON-over-HTTP clients. Each operation is a single POST:
//!
//! | path        | request                                           | response                         |
//! |-------------|---------------------------------------------------|----------------------------------|
//! | `/embed`    | `{"text"}`                                        | `{"embedding": [f64]}`           |
//! | `/nli`      | `{"premise", "hypothesis"}`                       | `{"ent", "con", "neu"}` in [0,1] |
//! | `/generate` | `{"premise", "claim", "steps", "kind", "prompt"}` | `{"text"}`                       |
//! | `/parse`    | `{"text"}`                                        | `{"penman"}`                     |
//!
//! NLI scores are multiplied by 100 on receipt.

use std::sync::{Condvar, Mutex, OnceLock};
use std::thread;
use std::time::Duration;

use enthymeme_core::{EmbeddingVector, NliScores};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::prompt::{parse_response, render_prompt};
use super::{AmrParser, Embedder, GenerationRequest, NliProvider, PremiseGenerator, ProviderError, Result};

pub const ENV_EMBED_URL: &str = "ENTHYMEME_EMBED_URL";
pub const ENV_NLI_URL: &str = "ENTHYMEME_NLI_URL";
pub const ENV_GEN_URL: &str = "ENTHYMEME_GEN_URL";
pub const ENV_PARSE_URL: &str = "ENTHYMEME_PARSE_URL";
pub const ENV_TIMEOUT_SECS: &str = "ENTHYMEME_TIMEOUT_SECS";

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub timeout: Duration,
    pub attempts: u32,
    /// Delay before the first retry; doubled on each further retry.
    pub backoff: Duration,
    pub max_in_flight: usize,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            timeout: Duration::from_secs(30),
            attempts: 3,
            backoff: Duration::from_millis(200),
            max_in_flight: 8,
        }
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cond: Condvar,
}

impl Semaphore {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cond.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cond.notify_one();
    }
}

/// A base URL plus retry and concurrency policy, shared by the typed
/// clients below.
pub struct HttpClient {
    agent: ureq::Agent,
    base_url: String,
    config: HttpConfig,
    slots: Semaphore,
}

impl HttpClient {
    pub fn new(base_url: impl Into<String>, config: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(true)
            .build()
            .into();
        HttpClient {
            agent,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            slots: Semaphore {
                free: Mutex::new(config.max_in_flight.max(1)),
                cond: Condvar::new(),
            },
            config,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// POSTs `body` to `path`, retrying transport failures and non-success
    /// statuses with exponential backoff. A response body that does not
    /// decode is not retried.
    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp> {
        let url = format!("{}{}", self.base_url, path);
        let mut delay = self.config.backoff;
        let mut last = String::new();
        for attempt in 1..=self.config.attempts.max(1) {
            let outcome = {
                let _permit = self.slots.acquire();
                self.agent.post(&url).send_json(body)
            };
            match outcome {
                Ok(mut resp) => {
                    return resp
                        .body_mut()
                        .read_json::<Resp>()
                        .map_err(|e| ProviderError::MalformedResponse(format!("{url}: {e}")));
                }
                Err(e) => {
                    log::warn!("{url}: attempt {attempt} failed: {e}");
                    last = e.to_string();
                }
            }
            if attempt < self.config.attempts {
                thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(ProviderError::Unavailable {
            endpoint: url,
            message: last,
        })
    }
}

#[derive(Serialize)]
struct TextRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embedding: Vec<f64>,
}

pub struct HttpEmbedder {
    client: HttpClient,
    dim: OnceLock<usize>,
}

impl HttpEmbedder {
    pub fn new(client: HttpClient) -> Self {
        HttpEmbedder { client, dim: OnceLock::new() }
    }
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> String {
        format!("http:{}", self.client.base_url())
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        if text.trim().is_empty() {
            return Err(ProviderError::EmptyText);
        }
        let resp: EmbedResponse = self.client.post("/embed", &TextRequest { text })?;
        let v = EmbeddingVector(resp.embedding);
        if v.dim() == 0 || !v.is_finite() {
            return Err(ProviderError::MalformedResponse("embedding is empty or not finite".into()));
        }
        let dim = *self.dim.get_or_init(|| v.dim());
        if v.dim() != dim {
            return Err(ProviderError::MalformedResponse(format!("embedding dimension {} after {dim}", v.dim())));
        }
        Ok(v)
    }
}

#[derive(Serialize)]
struct NliRequest<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Deserialize)]
struct NliResponse {
    ent: f64,
    con: f64,
    neu: f64,
}

pub struct HttpNli {
    client: HttpClient,
}

impl HttpNli {
    pub fn new(client: HttpClient) -> Self {
        HttpNli { client }
    }
}

impl NliProvider for HttpNli {
    fn id(&self) -> String {
        format!("http:{}", self.client.base_url())
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliScores> {
        if premise.trim().is_empty() || hypothesis.trim().is_empty() {
            return Err(ProviderError::EmptyText);
        }
        let r: NliResponse = self.client.post("/nli", &NliRequest { premise, hypothesis })?;
        NliScores::new(r.ent * 100.0, r.con * 100.0, r.neu * 100.0).map_err(|e| ProviderError::OutOfRangeScore(e.0))
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    premise: &'a str,
    claim: &'a str,
    steps: u8,
    kind: super::ChainKind,
    prompt: String,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

pub struct HttpGenerator {
    client: HttpClient,
}

impl HttpGenerator {
    pub fn new(client: HttpClient) -> Self {
        HttpGenerator { client }
    }
}

impl PremiseGenerator for HttpGenerator {
    fn id(&self) -> String {
        format!("http:{}", self.client.base_url())
    }

    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>> {
        let body = GenerateRequest {
            premise: &req.premise,
            claim: &req.claim,
            steps: req.steps,
            kind: req.kind,
            prompt: render_prompt(req),
        };
        let resp: GenerateResponse = self.client.post("/generate", &body)?;
        parse_response(&resp.text, req.steps, req.kind)
    }
}

#[derive(Deserialize)]
struct ParseResponse {
    penman: String,
}

pub struct HttpParser {
    client: HttpClient,
}

impl HttpParser {
    pub fn new(client: HttpClient) -> Self {
        HttpParser { client }
    }
}

impl AmrParser for HttpParser {
    fn id(&self) -> String {
        format!("http:{}", self.client.base_url())
    }

    fn parse(&self, sentence: &str) -> Result<String> {
        let resp: ParseResponse = self.client.post("/parse", &TextRequest { text: sentence })?;
        Ok(resp.penman)
    }
}
