use std::collections::BTreeSet;
use std::convert::Infallible;

use enthymeme_core::relax::{PairScore, ScoreTable, TemplateRegistry};
use enthymeme_core::{cosine_similarity, nli_label, AmrAtom, AmrFormula, EmbeddingVector, Formula, NliScores};
use proptest::prelude::*;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

#[test]
fn cosine_fuzz_stays_in_range_and_symmetric() {
    let mut rng = SmallRng::seed_from_u64(3);
    for _ in 0..10_000 {
        let dim = rng.random_range(1..=16);
        let scale = 10f64.powi(rng.random_range(-6..=6));
        let mut draw = || EmbeddingVector((0..dim).map(|_| rng.random_range(-1.0..1.0) * scale).collect());
        let (a, b) = (draw(), draw());
        let (Ok(ab), Ok(ba)) = (cosine_similarity(&a, &b), cosine_similarity(&b, &a)) else { continue };
        assert!(ab.abs() <= 1.0 + 1e-9);
        assert_eq!(ab, ba);
    }
}

fn atoms(prefix: &str, n: usize) -> Vec<AmrAtom> {
    (0..n).map(|i| AmrAtom::new(format!("r{}", i % 2), format!("{prefix}{i}"), "z")).collect()
}

/// A score table over random claim and premise atoms, with similarities
/// drawn from a coarse grid so that ties occur.
fn table_strategy() -> impl Strategy<Value = (Vec<AmrAtom>, Vec<AmrAtom>, ScoreTable)> {
    (1usize..5, 1usize..5).prop_flat_map(|(nc, np)| {
        let scores = proptest::collection::vec((0u8..=10, 0u8..=20, 0u8..=20, 0u8..=20), nc * np);
        scores.prop_map(move |raw| {
            let (claims, premises) = (atoms("c", nc), atoms("p", np));
            let mut pairs = Vec::new();
            let mut k = 0;
            let mut sorted_claims = claims.clone();
            sorted_claims.sort();
            let mut sorted_premises = premises.clone();
            sorted_premises.sort();
            for c in &sorted_claims {
                for p in &sorted_premises {
                    let (s, e, x, n) = raw[k];
                    k += 1;
                    pairs.push(PairScore {
                        claim_atom: c.clone(),
                        premise_atom: p.clone(),
                        similarity: Some(s as f64 / 10.0),
                        nli: Some(NliScores::new(e as f64 * 5.0, x as f64 * 5.0, n as f64 * 5.0).unwrap()),
                    });
                }
            }
            (claims, premises, ScoreTable { pairs })
        })
    })
}

proptest! {
    #[test]
    fn matches_agree_with_all_pairs_scan((claims, _premises, table) in table_strategy(), tau in 0.0f64..1.0) {
        let edges = table.matches(tau);
        let matched: BTreeSet<_> = edges.iter().map(|e| e.claim_atom.clone()).collect();
        prop_assert_eq!(matched.len(), edges.len());
        for c in &claims {
            let candidates: Vec<&PairScore> =
                table.pairs.iter().filter(|p| &p.claim_atom == c && p.similarity.unwrap() > tau).collect();
            let edge = edges.iter().find(|e| &e.claim_atom == c);
            match edge {
                None => prop_assert!(candidates.is_empty()),
                Some(e) => {
                    for p in candidates {
                        let s = p.similarity.unwrap();
                        prop_assert!(e.score > s || (e.score == s && e.premise_atom <= p.premise_atom));
                    }
                }
            }
        }
    }

    #[test]
    fn matched_claims_antitone_in_tau_m((_c, _p, table) in table_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let at = |t| table.matches(t).into_iter().map(|e| e.claim_atom).collect::<BTreeSet<_>>();
        prop_assert!(at(hi).is_subset(&at(lo)));
    }

    #[test]
    fn contradicts_antitone_in_tau_c((_c, _p, table) in table_strategy(), a in 0.0f64..100.0, b in 0.0f64..100.0, seed in any::<u64>()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let at = |t| {
            table
                .contradicts(t, seed)
                .into_iter()
                .map(|e| (e.claim_atom, e.premise_atom))
                .collect::<BTreeSet<_>>()
        };
        prop_assert!(at(hi).is_subset(&at(lo)));
    }

    #[test]
    fn nli_label_is_pure(e in 0u8..=4, c in 0u8..=4, n in 0u8..=4, seed in any::<u64>()) {
        let s = NliScores::new(e as f64 * 25.0, c as f64 * 25.0, n as f64 * 25.0).unwrap();
        prop_assert_eq!(nli_label(&s, seed), nli_label(&s, seed));
    }
}

#[test]
fn score_table_reproduces_direct_relations() {
    let premise: AmrFormula = "arg0(walk,tiger) & location(walk,cage)".parse().unwrap();
    let claim: AmrFormula = "arg0(sleep,tiger) & location(sleep,cage)".parse().unwrap();
    let registry = TemplateRegistry::default();
    let mut sim = |a: &str, b: &str| Ok::<_, Infallible>(if a.len() == b.len() { 0.7 } else { 0.2 });
    let mut nli = |a: &str, _: &str| Ok::<_, Infallible>(NliScores::new(0.0, if a.contains("tiger") { 85.0 } else { 82.0 }, 15.0).unwrap());
    let table = ScoreTable::score(&premise, &claim, &registry, Some(&mut sim), Some(&mut nli)).unwrap();
    assert_eq!(table.pairs.len(), 4);
    assert_eq!(table.contradicts(80.0, 0).len(), 4);
    assert_eq!(table.contradicts(83.0, 0).len(), 2);
    assert!(table.contradicts(90.0, 0).is_empty());
    assert!(Formula::<AmrAtom>::Top.atoms().is_empty());
}
