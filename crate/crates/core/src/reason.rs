//! Satisfiability and the entailment / contradiction checks built on it.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::cnf::{to_cnf_with_budget, Cnf, Lit, DEFAULT_CLAUSE_BUDGET};
use crate::formula::{AbstractFormula, Formula};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// A satisfying assignment for letters `1..=num_letters`.
    Satisfiable(BTreeMap<u32, bool>),
    Unsatisfiable,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Satisfiable(_))
    }
}

pub trait SatSolver {
    fn solve(&self, cnf: &Cnf) -> SatResult;
}

/// DPLL with unit propagation and pure-literal elimination.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dpll;

impl SatSolver for Dpll {
    fn solve(&self, cnf: &Cnf) -> SatResult {
        let n = cnf.num_letters() as usize;
        let mut assignment = vec![None; n + 1];
        if dpll(cnf.clauses(), &mut assignment) {
            let model = (1..=n).map(|i| (i as u32, assignment[i].unwrap_or(false))).collect();
            SatResult::Satisfiable(model)
        } else {
            SatResult::Unsatisfiable
        }
    }
}

fn value(assignment: &[Option<bool>], l: Lit) -> Option<bool> {
    assignment[l.letter as usize].map(|v| l.holds(v))
}

fn dpll(clauses: &[Vec<Lit>], assignment: &mut Vec<Option<bool>>) -> bool {
    loop {
        let mut changed = false;
        // Unit propagation.
        for clause in clauses {
            let mut unassigned = None;
            let mut open = 0;
            let mut satisfied = false;
            for &l in clause {
                match value(assignment, l) {
                    Some(true) => {
                        satisfied = true;
                        break;
                    }
                    Some(false) => {}
                    None => {
                        open += 1;
                        unassigned = Some(l);
                    }
                }
            }
            if satisfied {
                continue;
            }
            match (open, unassigned) {
                (0, _) => return false,
                (1, Some(l)) => {
                    assignment[l.letter as usize] = Some(l.positive);
                    changed = true;
                }
                _ => {}
            }
        }
        if changed {
            continue;
        }
        // Pure literals among the clauses not yet satisfied.
        let mut polarity: BTreeMap<u32, (bool, bool)> = BTreeMap::new();
        for clause in clauses {
            if clause.iter().any(|&l| value(assignment, l) == Some(true)) {
                continue;
            }
            for &l in clause {
                if assignment[l.letter as usize].is_none() {
                    let entry = polarity.entry(l.letter).or_default();
                    if l.positive {
                        entry.0 = true;
                    } else {
                        entry.1 = true;
                    }
                }
            }
        }
        for (&letter, &(pos, neg)) in &polarity {
            if pos != neg {
                assignment[letter as usize] = Some(pos);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let branch = clauses
        .iter()
        .filter(|c| !c.iter().any(|&l| value(assignment, l) == Some(true)))
        .flat_map(|c| c.iter())
        .find(|l| assignment[l.letter as usize].is_none())
        .copied();
    let Some(l) = branch else {
        return true;
    };
    for choice in [l.positive, !l.positive] {
        let mut trial = assignment.clone();
        trial[l.letter as usize] = Some(choice);
        if dpll(clauses, &mut trial) {
            *assignment = trial;
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum VerdictKind {
    Entailment,
    Contradiction,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verdict {
    pub kind: VerdictKind,
    /// The premise alone is unsatisfiable.
    pub premise_inconsistent: bool,
}

impl Verdict {
    pub fn is_entailment(&self) -> bool {
        self.kind == VerdictKind::Entailment
    }
}

/// The CNFs a classification was decided on.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReasoningTrace {
    pub premise: Cnf,
    /// `φ ∧ ¬ψ`
    pub entailment_check: Cnf,
    /// `φ ∧ ψ`
    pub contradiction_check: Cnf,
}

#[derive(Debug, Clone)]
pub struct Reasoner<S = Dpll> {
    pub solver: S,
    pub clause_budget: usize,
}

impl Default for Reasoner<Dpll> {
    fn default() -> Self {
        Reasoner {
            solver: Dpll,
            clause_budget: DEFAULT_CLAUSE_BUDGET,
        }
    }
}

impl<S: SatSolver> Reasoner<S> {
    pub fn new(solver: S, clause_budget: usize) -> Self {
        Reasoner { solver, clause_budget }
    }

    fn cnf(&self, f: &AbstractFormula) -> Cnf {
        to_cnf_with_budget(f, self.clause_budget)
    }

    pub fn satisfiable(&self, f: &AbstractFormula) -> bool {
        self.solver.solve(&self.cnf(f)).is_sat()
    }

    /// `φ ∧ ¬ψ` is unsatisfiable.
    pub fn entails(&self, premise: &AbstractFormula, claim: &AbstractFormula) -> bool {
        !self.satisfiable(&Formula::and(premise.clone(), Formula::not(claim.clone())))
    }

    /// `φ ∧ ψ` is unsatisfiable.
    pub fn contradicts(&self, premise: &AbstractFormula, claim: &AbstractFormula) -> bool {
        !self.satisfiable(&Formula::and(premise.clone(), claim.clone()))
    }

    pub fn classify(&self, premise: &AbstractFormula, claim: &AbstractFormula) -> Verdict {
        self.classify_traced(premise, claim).0
    }

    /// An unsatisfiable premise is reported as a contradiction with
    /// `premise_inconsistent` set.
    pub fn classify_traced(&self, premise: &AbstractFormula, claim: &AbstractFormula) -> (Verdict, ReasoningTrace) {
        let trace = ReasoningTrace {
            premise: self.cnf(premise),
            entailment_check: self.cnf(&Formula::and(premise.clone(), Formula::not(claim.clone()))),
            contradiction_check: self.cnf(&Formula::and(premise.clone(), claim.clone())),
        };
        let verdict = if !self.solver.solve(&trace.premise).is_sat() {
            Verdict {
                kind: VerdictKind::Contradiction,
                premise_inconsistent: true,
            }
        } else if !self.solver.solve(&trace.entailment_check).is_sat() {
            Verdict {
                kind: VerdictKind::Entailment,
                premise_inconsistent: false,
            }
        } else if !self.solver.solve(&trace.contradiction_check).is_sat() {
            Verdict {
                kind: VerdictKind::Contradiction,
                premise_inconsistent: false,
            }
        } else {
            Verdict {
                kind: VerdictKind::Neutral,
                premise_inconsistent: false,
            }
        };
        (verdict, trace)
    }
}

pub fn sat(cnf: &Cnf) -> SatResult {
    Dpll.solve(cnf)
}

pub fn entails(premise: &AbstractFormula, claim: &AbstractFormula) -> bool {
    Reasoner::default().entails(premise, claim)
}

pub fn contradicts(premise: &AbstractFormula, claim: &AbstractFormula) -> bool {
    Reasoner::default().contradicts(premise, claim)
}

pub fn classify(premise: &AbstractFormula, claim: &AbstractFormula) -> Verdict {
    Reasoner::default().classify(premise, claim)
}
