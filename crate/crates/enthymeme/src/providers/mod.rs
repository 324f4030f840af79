//! Access to the neural capabilities the pipeline relies on: sentence
//! similarity, NLI scoring, premise generation and text-to-AMR parsing.
//!
//! Every capability is a trait with an HTTP client ([`http`]), a
//! fixture-backed stub ([`stub`]) and a disk-caching wrapper ([`cache`]).

pub mod cache;
pub mod http;
pub mod prompt;
pub mod stub;

use std::fmt;
use std::str::FromStr;

use enthymeme_core::{cosine_similarity, EmbeddingVector, NliScores};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("provider at {endpoint} unavailable: {message}")]
    Unavailable { endpoint: String, message: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("NLI score {0} outside [0, 100]")]
    OutOfRangeScore(f64),
    #[error("response does not follow the requested format: {0}")]
    UnparseableResponse(String),
    #[error("empty text")]
    EmptyText,
    #[error("no fixture for {0}")]
    MissingFixture(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

pub type Result<T, E = ProviderError> = std::result::Result<T, E>;

pub trait Embedder: Send + Sync {
    /// Identifies the provider in cache keys.
    fn id(&self) -> String;
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;
}

/// Similarity of two verbalized atoms, in `[-1, 1]`.
pub trait Similarity: Send + Sync {
    fn id(&self) -> String;
    fn similarity(&self, a: &str, b: &str) -> Result<f64>;
}

pub trait NliProvider: Send + Sync {
    fn id(&self) -> String;
    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliScores>;
}

pub trait PremiseGenerator: Send + Sync {
    fn id(&self) -> String;
    /// Exactly `req.steps` sentences.
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>>;
}

pub trait AmrParser: Send + Sync {
    fn id(&self) -> String;
    /// PENMAN text for one sentence.
    fn parse(&self, sentence: &str) -> Result<String>;
}

/// Cosine similarity of embeddings from any [`Embedder`].
pub struct EmbeddingSimilarity<E>(pub E);

impl<E: Embedder> Similarity for EmbeddingSimilarity<E> {
    fn id(&self) -> String {
        format!("cosine:{}", self.0.id())
    }

    fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let (va, vb) = (self.0.embed(a)?, self.0.embed(b)?);
        cosine_similarity(&va, &vb).map_err(|e| ProviderError::MalformedResponse(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Helpful,
    Unhelpful,
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainKind::Helpful => "helpful",
            ChainKind::Unhelpful => "unhelpful",
        })
    }
}

impl FromStr for ChainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "helpful" => Ok(ChainKind::Helpful),
            "unhelpful" => Ok(ChainKind::Unhelpful),
            other => Err(format!("unknown chain kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub premise: String,
    pub claim: String,
    pub steps: u8,
    pub kind: ChainKind,
}

impl GenerationRequest {
    pub fn new(premise: impl Into<String>, claim: impl Into<String>, steps: u8, kind: ChainKind) -> Result<Self> {
        if !(1..=3).contains(&steps) {
            return Err(ProviderError::InvalidRequest(format!("steps must be 1, 2 or 3, got {steps}")));
        }
        Ok(GenerationRequest {
            premise: premise.into(),
            claim: claim.into(),
            steps,
            kind,
        })
    }
}

/// The providers one run uses. Generation and parsing are optional: runs
/// over pre-parsed, pre-augmented data need neither.
pub struct Providers {
    pub similarity: Box<dyn Similarity>,
    pub nli: Box<dyn NliProvider>,
    pub generator: Option<Box<dyn PremiseGenerator>>,
    pub parser: Option<Box<dyn AmrParser>>,
}

impl fmt::Debug for Providers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Providers")
            .field("similarity", &self.similarity.id())
            .field("nli", &self.nli.id())
            .field("generator", &self.generator.as_ref().map(|g| g.id()))
            .field("parser", &self.parser.as_ref().map(|p| p.id()))
            .finish()
    }
}
