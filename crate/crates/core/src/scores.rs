//! Embedding similarity and NLI score handling.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.0.iter().map(|x| x * x).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SimilarityError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero vector")]
    ZeroVector,
}

/// `v1 · v2 / (‖v1‖ ‖v2‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(v1: &EmbeddingVector, v2: &EmbeddingVector) -> Result<f64, SimilarityError> {
    if v1.dim() != v2.dim() {
        return Err(SimilarityError::DimensionMismatch(v1.dim(), v2.dim()));
    }
    let (n1, n2) = (v1.norm(), v2.norm());
    if n1 == 0.0 || n2 == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    let dot: f64 = v1.0.iter().zip(&v2.0).map(|(a, b)| a * b).sum();
    Ok((dot / (n1 * n2)).clamp(-1.0, 1.0))
}

/// Entailment, contradiction and neutral scores, each in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NliScores {
    pub ent: f64,
    pub con: f64,
    pub neu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("NLI score {0} outside [0, 100]")]
pub struct OutOfRangeScore(pub f64);

impl NliScores {
    pub fn new(ent: f64, con: f64, neu: f64) -> Result<Self, OutOfRangeScore> {
        for s in [ent, con, neu] {
            if !(0.0..=100.0).contains(&s) {
                return Err(OutOfRangeScore(s));
            }
        }
        Ok(NliScores { ent, con, neu })
    }

    /// Fallback for pairs a model knows nothing about.
    pub const NEUTRAL: NliScores = NliScores {
        ent: 0.0,
        con: 0.0,
        neu: 100.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NliOutcome {
    Ent,
    Con,
    Neu,
}

/// The arg-max outcome. Exact ties are broken by a ChaCha draw seeded with
/// `seed`, so the result is a pure function of `(scores, seed)`.
pub fn nli_label(scores: &NliScores, seed: u64) -> NliOutcome {
    let ranked = [
        (NliOutcome::Ent, scores.ent),
        (NliOutcome::Con, scores.con),
        (NliOutcome::Neu, scores.neu),
    ];
    let best = ranked.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<NliOutcome> = ranked.iter().filter(|(_, s)| *s == best).map(|(o, _)| *o).collect();
    if tied.len() == 1 {
        return tied[0];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tied[rng.random_range(0..tied.len())]
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(x: &[f64]) -> EmbeddingVector {
        EmbeddingVector(x.to_vec())
    }

    #[test]
    fn cosine_cases() {
        let a = v(&[0.3, -1.2, 4.0]);
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[-1.0, 0.0])).unwrap(), -1.0);
        assert_eq!(
            cosine_similarity(&v(&[1.0]), &v(&[1.0, 0.0])),
            Err(SimilarityError::DimensionMismatch(1, 2))
        );
        assert_eq!(cosine_similarity(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])), Err(SimilarityError::ZeroVector));
    }

    #[test]
    fn labels() {
        assert_eq!(nli_label(&NliScores::new(10.0, 85.0, 5.0).unwrap(), 0), NliOutcome::Con);
        assert_eq!(nli_label(&NliScores::NEUTRAL, 0), NliOutcome::Neu);
    }

    #[test]
    fn ties_are_seeded() {
        let tie = NliScores::new(50.0, 50.0, 0.0).unwrap();
        for seed in 0..32 {
            let first = nli_label(&tie, seed);
            assert!(matches!(first, NliOutcome::Ent | NliOutcome::Con));
            assert_eq!(nli_label(&tie, seed), first);
        }
        let picks: vec::Vec<_> = (0..64).map(|s| nli_label(&tie, s)).collect();
        assert!(picks.contains(&NliOutcome::Ent) && picks.contains(&NliOutcome::Con));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(NliScores::new(101.0, 0.0, 0.0).is_err());
        assert!(NliScores::new(-1.0, 0.0, 0.0).is_err());
        assert!(NliScores::new(f64::NAN, 0.0, 0.0).is_err());
    }
}
