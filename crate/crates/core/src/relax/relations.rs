//! Neuro-matching (`≃`) and neuro-contradict (`⊥`) relations between claim
//! atoms and premise atoms.
//!
//! Raw scores are gathered once into a [`ScoreTable`]; the relations for any
//! pair of thresholds are then read off the table without further model
//! calls.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::template::TemplateRegistry;
use crate::formula::{AmrAtom, AmrFormula};
use crate::scores::{nli_label, NliOutcome, NliScores};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchEdge {
    pub claim_atom: AmrAtom,
    pub premise_atom: AmrAtom,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContradictEdge {
    pub claim_atom: AmrAtom,
    pub premise_atom: AmrAtom,
    pub con_score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RelationSet {
    pub matches: Vec<MatchEdge>,
    pub contradicts: Vec<ContradictEdge>,
}

impl RelationSet {
    pub fn is_empty(&self) -> bool {
        self.matches.is_empty() && self.contradicts.is_empty()
    }
}

/// Scores for one claim-atom / premise-atom pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairScore {
    pub claim_atom: AmrAtom,
    pub premise_atom: AmrAtom,
    pub similarity: Option<f64>,
    /// NLI scores with the claim sentence as the first argument.
    pub nli: Option<NliScores>,
}

/// All pair scores, ordered by (claim atom, premise atom).
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoreTable {
    pub pairs: Vec<PairScore>,
}

fn pairs(premise: &AmrFormula, claim: &AmrFormula) -> Vec<(AmrAtom, AmrAtom)> {
    let premise_atoms: BTreeSet<AmrAtom> = premise.atoms();
    claim
        .atoms()
        .into_iter()
        .flat_map(|c| premise_atoms.iter().map(move |p| (c.clone(), p.clone())))
        .collect()
}

impl ScoreTable {
    /// Scores every pair. `similarity` receives the two verbalized
    /// sentences (claim first) and `nli` receives them as
    /// (premise sentence, hypothesis sentence) with the claim atom first.
    pub fn score<E>(
        premise: &AmrFormula,
        claim: &AmrFormula,
        registry: &TemplateRegistry,
        mut similarity: Option<&mut dyn FnMut(&str, &str) -> Result<f64, E>>,
        mut nli: Option<&mut dyn FnMut(&str, &str) -> Result<NliScores, E>>,
    ) -> Result<Self, E> {
        let mut out = Vec::new();
        for (c, p) in pairs(premise, claim) {
            let (cs, ps) = (registry.instantiate(&c), registry.instantiate(&p));
            let sim = match similarity.as_mut() {
                Some(f) => Some(f(&cs, &ps)?),
                None => None,
            };
            let scores = match nli.as_mut() {
                Some(f) => Some(f(&cs, &ps)?),
                None => None,
            };
            out.push(PairScore {
                claim_atom: c,
                premise_atom: p,
                similarity: sim,
                nli: scores,
            });
        }
        Ok(ScoreTable { pairs: out })
    }

    /// For each claim atom, the premise atom with the highest similarity
    /// above `tau_m`. Ties go to the canonically smaller premise atom.
    pub fn matches(&self, tau_m: f64) -> Vec<MatchEdge> {
        let mut out: Vec<MatchEdge> = Vec::new();
        for pair in &self.pairs {
            let Some(score) = pair.similarity else { continue };
            if score <= tau_m {
                continue;
            }
            match out.last_mut() {
                Some(best) if best.claim_atom == pair.claim_atom => {
                    if score > best.score {
                        best.premise_atom = pair.premise_atom.clone();
                        best.score = score;
                    }
                }
                _ => out.push(MatchEdge {
                    claim_atom: pair.claim_atom.clone(),
                    premise_atom: pair.premise_atom.clone(),
                    score,
                }),
            }
        }
        out
    }

    /// Pairs whose NLI label is `Con` with a contradiction score of at
    /// least `tau_c`.
    pub fn contradicts(&self, tau_c: f64, seed: u64) -> Vec<ContradictEdge> {
        self.pairs
            .iter()
            .filter_map(|pair| {
                let scores = pair.nli?;
                (nli_label(&scores, seed) == NliOutcome::Con && scores.con >= tau_c).then(|| ContradictEdge {
                    claim_atom: pair.claim_atom.clone(),
                    premise_atom: pair.premise_atom.clone(),
                    con_score: scores.con,
                })
            })
            .collect()
    }

    pub fn relations(&self, tau_m: f64, tau_c: f64, seed: u64) -> RelationSet {
        RelationSet {
            matches: self.matches(tau_m),
            contradicts: self.contradicts(tau_c, seed),
        }
    }
}

/// The `≃` edges from each claim atom to its best premise atom.
pub fn compute_matches<E>(
    premise: &AmrFormula,
    claim: &AmrFormula,
    tau_m: f64,
    registry: &TemplateRegistry,
    mut similarity: impl FnMut(&str, &str) -> Result<f64, E>,
) -> Result<Vec<MatchEdge>, E> {
    let table = ScoreTable::score(premise, claim, registry, Some(&mut similarity), None)?;
    Ok(table.matches(tau_m))
}

/// The `⊥` edges between claim atoms and premise atoms.
pub fn compute_contradicts<E>(
    premise: &AmrFormula,
    claim: &AmrFormula,
    tau_c: f64,
    seed: u64,
    registry: &TemplateRegistry,
    mut nli: impl FnMut(&str, &str) -> Result<NliScores, E>,
) -> Result<Vec<ContradictEdge>, E> {
    let table = ScoreTable::score(premise, claim, registry, None, Some(&mut nli))?;
    Ok(table.contradicts(tau_c, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::convert::Infallible;

    fn f(s: &str) -> AmrFormula {
        s.parse().unwrap()
    }

    fn lookup<'a>(table: &'a [(&'a str, &'a str, f64)]) -> impl FnMut(&str, &str) -> Result<f64, Infallible> + 'a {
        move |a, b| {
            Ok(table
                .iter()
                .find(|(x, y, _)| (*x == a && *y == b) || (*x == b && *y == a))
                .map(|t| t.2)
                .unwrap_or(0.0))
        }
    }

    #[test]
    fn moving_tiger_matches_walking_tiger() {
        let table = [(
            "tiger is the agent performing action move.",
            "tiger is the agent performing action walk.",
            0.8483,
        )];
        let edges = compute_matches(
            &f("arg0(walk,tiger) & location(walk,cage)"),
            &f("arg0(move,tiger)"),
            0.6,
            &TemplateRegistry::default(),
            lookup(&table),
        )
        .unwrap();
        assert_eq!(
            edges,
            [MatchEdge {
                claim_atom: AmrAtom::new("arg0", "move", "tiger"),
                premise_atom: AmrAtom::new("arg0", "walk", "tiger"),
                score: 0.8483,
            }]
        );
    }

    #[test]
    fn threshold_excludes_everything() {
        let edges = compute_matches(
            &f("arg0(walk,tiger)"),
            &f("arg0(move,tiger)"),
            0.6,
            &TemplateRegistry::default(),
            |_, _| Ok::<_, Infallible>(0.6),
        )
        .unwrap();
        assert!(edges.is_empty());
    }

    #[test]
    fn ties_prefer_canonically_smaller_atom() {
        for _ in 0..3 {
            let edges = compute_matches(
                &f("b(p,q) & a(p,q)"),
                &f("c(p,q)"),
                0.5,
                &TemplateRegistry::default(),
                |_, _| Ok::<_, Infallible>(0.9),
            )
            .unwrap();
            assert_eq!(edges.len(), 1);
            assert_eq!(edges[0].premise_atom, AmrAtom::new("a", "p", "q"));
        }
    }

    #[test]
    fn neutral_label_never_contradicts() {
        let edges = compute_contradicts(
            &f("arg0(walk,tiger)"),
            &f("arg0(sleep,tiger)"),
            10.0,
            0,
            &TemplateRegistry::default(),
            |_, _| Ok::<_, Infallible>(NliScores::new(0.0, 40.0, 60.0).unwrap()),
        )
        .unwrap();
        assert!(edges.is_empty());
    }

    #[test]
    fn nli_sees_claim_sentence_first() {
        let mut seen = Vec::new();
        compute_contradicts(
            &f("arg0(walk,tiger)"),
            &f("arg0(sleep,tiger)"),
            80.0,
            0,
            &TemplateRegistry::default(),
            |a, b| {
                seen.push((alloc::string::String::from(a), alloc::string::String::from(b)));
                Ok::<_, Infallible>(NliScores::NEUTRAL)
            },
        )
        .unwrap();
        assert_eq!(seen[0].0, "tiger is the agent performing action sleep.");
    }
}
