//! A content-addressed disk cache for provider responses.
//!
//! Each entry is a file named by the SHA-256 of its key. The first line
//! holds the SHA-256 of the payload; an entry whose payload does not match
//! is treated as a miss and logged. Writes go through a temporary file and
//! a rename under a lock, so readers never see partial entries.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use enthymeme_core::{EmbeddingVector, NliScores};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{AmrParser, Embedder, GenerationRequest, NliProvider, PremiseGenerator, Result, Similarity};

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct DiskCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
    hits: AtomicU64,
    misses: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

impl DiskCache {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(DiskCache {
            dir,
            write_lock: Mutex::new(()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Key for `(provider, operation, inputs)`; inputs are canonicalized as
    /// a JSON array so no two input lists share a key.
    pub fn key(provider: &str, operation: &str, inputs: &[&str]) -> String {
        let canonical = serde_json::to_string(&(provider, operation, inputs)).expect("strings serialize");
        sha256_hex(canonical.as_bytes())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }

    pub fn get(&self, key: &str) -> Option<Vec<u8>> {
        let found = self.read(key);
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    fn read(&self, key: &str) -> Option<Vec<u8>> {
        let path = self.path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("cache entry {} unreadable: {e}", path.display());
                return None;
            }
        };
        let Some(newline) = bytes.iter().position(|&b| b == b'\n') else {
            log::warn!("cache entry {} is corrupt: no checksum line", path.display());
            return None;
        };
        let (checksum, payload) = (&bytes[..newline], &bytes[newline + 1..]);
        if checksum != sha256_hex(payload).as_bytes() {
            log::warn!("cache entry {} is corrupt: checksum mismatch", path.display());
            return None;
        }
        Some(payload.to_vec())
    }

    pub fn put(&self, key: &str, payload: &[u8]) -> io::Result<()> {
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        io::Write::write_all(&mut tmp, sha256_hex(payload).as_bytes())?;
        io::Write::write_all(&mut tmp, b"\n")?;
        io::Write::write_all(&mut tmp, payload)?;
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    /// Returns the cached value for `key`, or computes, stores and returns
    /// it. Failures to store are logged, not returned.
    pub fn get_or_compute<T, F>(&self, key: &str, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        if let Some(bytes) = self.get(key) {
            match serde_json::from_slice(&bytes) {
                Ok(v) => return Ok(v),
                Err(e) => log::warn!("cache entry {key} does not decode: {e}"),
            }
        }
        let value = compute()?;
        match serde_json::to_vec(&value) {
            Ok(bytes) => {
                if let Err(e) = self.put(key, &bytes) {
                    log::warn!("cache write for {key} failed: {e}");
                }
            }
            Err(e) => log::warn!("cannot serialize value for {key}: {e}"),
        }
        Ok(value)
    }
}

/// Wraps any provider so that each distinct call hits the backend once.
pub struct Cached<P> {
    pub inner: P,
    pub cache: std::sync::Arc<DiskCache>,
}

impl<P> Cached<P> {
    pub fn new(inner: P, cache: std::sync::Arc<DiskCache>) -> Self {
        Cached { inner, cache }
    }
}

impl<P: Embedder> Embedder for Cached<P> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let key = DiskCache::key(&self.inner.id(), "embed", &[text]);
        self.cache.get_or_compute(&key, || self.inner.embed(text))
    }
}

impl<P: Similarity + ?Sized> Similarity for Cached<Box<P>> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let key = DiskCache::key(&self.inner.id(), "similarity", &[a, b]);
        self.cache.get_or_compute(&key, || self.inner.similarity(a, b))
    }
}

impl<P: NliProvider + ?Sized> NliProvider for Cached<Box<P>> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliScores> {
        let key = DiskCache::key(&self.inner.id(), "nli", &[premise, hypothesis]);
        self.cache.get_or_compute(&key, || self.inner.nli(premise, hypothesis))
    }
}

impl<P: PremiseGenerator + ?Sized> PremiseGenerator for Cached<Box<P>> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>> {
        let steps = req.steps.to_string();
        let kind = req.kind.to_string();
        let key = DiskCache::key(&self.inner.id(), "generate", &[&req.premise, &req.claim, &steps, &kind]);
        self.cache.get_or_compute(&key, || self.inner.generate(req))
    }
}

impl<P: AmrParser + ?Sized> AmrParser for Cached<Box<P>> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn parse(&self, sentence: &str) -> Result<String> {
        let key = DiskCache::key(&self.inner.id(), "parse", &[sentence]);
        self.cache.get_or_compute(&key, || self.inner.parse(sentence))
    }
}

impl super::Providers {
    /// Routes every provider through `cache`. Embedding-based similarity is
    /// cached at the pair level, which also covers stub fixtures.
    pub fn cached(self, cache: std::sync::Arc<DiskCache>) -> super::Providers {
        super::Providers {
            similarity: Box::new(Cached::new(self.similarity, cache.clone())),
            nli: Box::new(Cached::new(self.nli, cache.clone())),
            generator: self
                .generator
                .map(|g| Box::new(Cached::new(g, cache.clone())) as Box<dyn PremiseGenerator>),
            parser: self.parser.map(|p| Box::new(Cached::new(p, cache.clone())) as Box<dyn AmrParser>),
        }
    }
}
