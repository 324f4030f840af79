//! Deterministic in-process providers driven by a fixtures file.
//!
//! ```json
//! {
//!   "embedding_dim": 64,
//!   "seed": 0,
//!   "similarity": [{"a": "...", "b": "...", "score": 0.8483}],
//!   "nli": [{"premise": "...", "hypothesis": "...", "ent": 10, "con": 85, "neu": 5}],
//!   "generate": [{"premise": "...", "claim": "...", "steps": 2, "kind": "helpful", "response": "..."}],
//!   "amr": {"A tiger is moving.": "(m / move-01 :arg0 (t / tiger))"}
//! }
//! ```
//!
//! Similarity pairs are symmetric; NLI pairs are directional. Unknown
//! similarity pairs fall back to the cosine of hashed embeddings and
//! unknown NLI pairs to the neutral scores `(0, 0, 100)`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use enthymeme_core::{cosine_similarity, EmbeddingVector, NliScores};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompt::parse_response;
use super::{AmrParser, ChainKind, Embedder, GenerationRequest, NliProvider, PremiseGenerator, ProviderError, Providers, Result, Similarity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityFixture {
    pub a: String,
    pub b: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliFixture {
    pub premise: String,
    pub hypothesis: String,
    pub ent: f64,
    pub con: f64,
    pub neu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateFixture {
    pub premise: String,
    pub claim: String,
    pub steps: u8,
    pub kind: ChainKind,
    /// Raw model answer in the prompt's output format.
    pub response: String,
}

fn default_dim() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixtures {
    #[serde(default = "default_dim")]
    pub embedding_dim: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub similarity: Vec<SimilarityFixture>,
    #[serde(default)]
    pub nli: Vec<NliFixture>,
    #[serde(default)]
    pub generate: Vec<GenerateFixture>,
    #[serde(default)]
    pub amr: BTreeMap<String, String>,
}

impl Default for Fixtures {
    fn default() -> Self {
        Fixtures {
            embedding_dim: default_dim(),
            seed: 0,
            similarity: Vec::new(),
            nli: Vec::new(),
            generate: Vec::new(),
            amr: BTreeMap::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("invalid fixture: {0}")]
    Invalid(String),
}

impl Fixtures {
    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let fixtures: Fixtures = serde_json::from_str(&text).map_err(|source| FixtureError::Json {
            path: path.display().to_string(),
            source,
        })?;
        fixtures.validate()?;
        Ok(fixtures)
    }

    pub fn validate(&self) -> Result<(), FixtureError> {
        if self.embedding_dim == 0 {
            return Err(FixtureError::Invalid("embedding_dim must be positive".into()));
        }
        for s in &self.similarity {
            if !(-1.0..=1.0).contains(&s.score) {
                return Err(FixtureError::Invalid(format!("similarity {} outside [-1, 1]", s.score)));
            }
        }
        for n in &self.nli {
            NliScores::new(n.ent, n.con, n.neu).map_err(|e| FixtureError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// Stub providers for every capability.
    pub fn providers(&self) -> Providers {
        Providers {
            similarity: Box::new(StubSimilarity::new(self)),
            nli: Box::new(StubNli::new(self)),
            generator: Some(Box::new(StubGenerator::new(self))),
            parser: Some(Box::new(StubParser::new(self))),
        }
    }
}

/// Unit vectors from SHA-256 in counter mode over `(seed, text, block)`.
#[derive(Debug, Clone)]
pub struct StubEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl Embedder for StubEmbedder {
    fn id(&self) -> String {
        format!("stub-hash:{}:{}", self.dim, self.seed)
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        if text.trim().is_empty() {
            return Err(ProviderError::EmptyText);
        }
        let mut values = Vec::with_capacity(self.dim);
        let mut block = 0u64;
        while values.len() < self.dim {
            let mut h = Sha256::new();
            h.update(self.seed.to_le_bytes());
            h.update((text.len() as u64).to_le_bytes());
            h.update(text.as_bytes());
            h.update(block.to_le_bytes());
            let digest = h.finalize();
            for chunk in digest.chunks_exact(8) {
                let x = u64::from_le_bytes(chunk.try_into().expect("8 bytes"));
                values.push((x >> 11) as f64 / (1u64 << 52) as f64 - 1.0);
            }
            block += 1;
        }
        values.truncate(self.dim);
        let v = EmbeddingVector(values);
        let norm = v.norm();
        Ok(EmbeddingVector(v.0.into_iter().map(|x| x / norm).collect()))
    }
}

pub struct StubSimilarity {
    table: HashMap<(String, String), f64>,
    embedder: StubEmbedder,
}

impl StubSimilarity {
    pub fn new(fixtures: &Fixtures) -> Self {
        let mut table = HashMap::new();
        for s in &fixtures.similarity {
            table.insert((s.a.clone(), s.b.clone()), s.score);
            table.insert((s.b.clone(), s.a.clone()), s.score);
        }
        StubSimilarity {
            table,
            embedder: StubEmbedder {
                dim: fixtures.embedding_dim,
                seed: fixtures.seed,
            },
        }
    }
}

impl Similarity for StubSimilarity {
    fn id(&self) -> String {
        format!("stub-similarity:{}", self.embedder.id())
    }

    fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        if let Some(&s) = self.table.get(&(a.to_string(), b.to_string())) {
            return Ok(s);
        }
        let (va, vb) = (self.embedder.embed(a)?, self.embedder.embed(b)?);
        cosine_similarity(&va, &vb).map_err(|e| ProviderError::MalformedResponse(e.to_string()))
    }
}

pub struct StubNli {
    table: HashMap<(String, String), NliScores>,
}

impl StubNli {
    pub fn new(fixtures: &Fixtures) -> Self {
        let table = fixtures
            .nli
            .iter()
            .map(|n| {
                let scores = NliScores::new(n.ent, n.con, n.neu).unwrap_or(NliScores::NEUTRAL);
                ((n.premise.clone(), n.hypothesis.clone()), scores)
            })
            .collect();
        StubNli { table }
    }
}

impl NliProvider for StubNli {
    fn id(&self) -> String {
        "stub-nli".into()
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliScores> {
        if premise.trim().is_empty() || hypothesis.trim().is_empty() {
            return Err(ProviderError::EmptyText);
        }
        Ok(self
            .table
            .get(&(premise.to_string(), hypothesis.to_string()))
            .copied()
            .unwrap_or(NliScores::NEUTRAL))
    }
}

pub struct StubGenerator {
    table: HashMap<(String, String, u8, ChainKind), String>,
}

impl StubGenerator {
    pub fn new(fixtures: &Fixtures) -> Self {
        let table = fixtures
            .generate
            .iter()
            .map(|g| ((g.premise.clone(), g.claim.clone(), g.steps, g.kind), g.response.clone()))
            .collect();
        StubGenerator { table }
    }
}

impl PremiseGenerator for StubGenerator {
    fn id(&self) -> String {
        "stub-generate".into()
    }

    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>> {
        let key = (req.premise.clone(), req.claim.clone(), req.steps, req.kind);
        let response = self
            .table
            .get(&key)
            .ok_or_else(|| ProviderError::MissingFixture(format!("{} chain, {} steps, for {:?}", req.kind, req.steps, req.claim)))?;
        parse_response(response, req.steps, req.kind)
    }
}

pub struct StubParser {
    amr: BTreeMap<String, String>,
}

impl StubParser {
    pub fn new(fixtures: &Fixtures) -> Self {
        StubParser { amr: fixtures.amr.clone() }
    }
}

impl AmrParser for StubParser {
    fn id(&self) -> String {
        "stub-parse".into()
    }

    fn parse(&self, sentence: &str) -> Result<String> {
        self.amr
            .get(sentence)
            .cloned()
            .ok_or_else(|| ProviderError::MissingFixture(format!("AMR for {sentence:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashed_vectors_are_deterministic_unit_vectors() {
        let e = StubEmbedder { dim: 64, seed: 7 };
        let a = e.embed("tiger is the agent performing action walk.").unwrap();
        assert_eq!(a, e.embed("tiger is the agent performing action walk.").unwrap());
        assert_eq!(a.dim(), 64);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_ne!(a, e.embed("tiger is the agent performing action move.").unwrap());
        assert_ne!(a, StubEmbedder { dim: 64, seed: 8 }.embed("tiger is the agent performing action walk.").unwrap());
        assert!(matches!(e.embed("  "), Err(ProviderError::EmptyText)));
    }

    #[test]
    fn fixture_lookup_and_fallbacks() {
        let fixtures = Fixtures {
            similarity: vec![SimilarityFixture {
                a: "x".into(),
                b: "y".into(),
                score: 0.8483,
            }],
            nli: vec![NliFixture {
                premise: "p".into(),
                hypothesis: "h".into(),
                ent: 10.0,
                con: 85.0,
                neu: 5.0,
            }],
            ..Fixtures::default()
        };
        let p = fixtures.providers();
        assert_eq!(p.similarity.similarity("y", "x").unwrap(), 0.8483);
        assert!(p.similarity.similarity("x", "z").unwrap().abs() < 0.9);
        assert_eq!(p.nli.nli("p", "h").unwrap().con, 85.0);
        assert_eq!(p.nli.nli("h", "p").unwrap(), NliScores::NEUTRAL);
        assert!(matches!(p.parser.unwrap().parse("nothing"), Err(ProviderError::MissingFixture(_))));
    }
}
