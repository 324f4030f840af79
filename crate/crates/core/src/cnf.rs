//! Conjunctive normal form.
//!
//! Conversion goes through negation normal form and distributes `∨` over
//! `∧`. When distribution would produce more clauses than the configured
//! budget, a polarity-aware Tseitin encoding with fresh letters is used
//! instead; the result is then equisatisfiable rather than equivalent, which
//! is all the reasoner needs.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::formula::{AbstractFormula, Formula, Letter};

pub const DEFAULT_CLAUSE_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lit {
    pub letter: u32,
    pub positive: bool,
}

/// By letter, then positive before negative.
impl Ord for Lit {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.letter.cmp(&other.letter).then(other.positive.cmp(&self.positive))
    }
}

impl PartialOrd for Lit {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Lit {
    pub fn pos(letter: u32) -> Self {
        Lit { letter, positive: true }
    }

    pub fn neg(letter: u32) -> Self {
        Lit { letter, positive: false }
    }

    pub fn negate(self) -> Self {
        Lit {
            letter: self.letter,
            positive: !self.positive,
        }
    }

    pub fn holds(self, value: bool) -> bool {
        value == self.positive
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "x{}", self.letter)
        } else {
            write!(f, "~x{}", self.letter)
        }
    }
}

/// A sorted, duplicate-free disjunction of literals.
pub type Clause = Vec<Lit>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cnf {
    clauses: Vec<Clause>,
    num_letters: u32,
}

impl Cnf {
    /// Builds a CNF from raw clauses: literals are sorted and deduplicated,
    /// tautological clauses dropped, and duplicate clauses merged.
    pub fn from_clauses<I>(clauses: I) -> Self
    where
        I: IntoIterator<Item = Vec<Lit>>,
    {
        let mut set = BTreeSet::new();
        let mut num_letters = 0;
        for mut clause in clauses {
            clause.sort();
            clause.dedup();
            if let Some(max) = clause.iter().map(|l| l.letter).max() {
                num_letters = num_letters.max(max);
            }
            if clause.windows(2).any(|w| w[0].letter == w[1].letter) {
                continue;
            }
            set.insert(clause);
        }
        Cnf {
            clauses: set.into_iter().collect(),
            num_letters,
        }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Highest letter index mentioned, fresh Tseitin letters included.
    pub fn num_letters(&self) -> u32 {
        self.num_letters
    }

    pub fn is_satisfied_by(&self, value: impl Fn(u32) -> bool) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| l.holds(value(l.letter))))
    }

    /// DIMACS `p cnf` text.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "p cnf {} {}", self.num_letters, self.clauses.len());
        for clause in &self.clauses {
            for l in clause {
                let _ = write!(out, "{}{} ", if l.positive { "" } else { "-" }, l.letter);
            }
            out.push_str("0\n");
        }
        out
    }
}

impl fmt::Display for Cnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("{")?;
            for (j, l) in c.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
            f.write_str("}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Nnf {
    Lit(Lit),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
    True,
    False,
}

fn nnf(f: &AbstractFormula, positive: bool) -> Nnf {
    match f {
        Formula::Atom(Letter(n)) => Nnf::Lit(Lit { letter: *n, positive }),
        Formula::Top => {
            if positive {
                Nnf::True
            } else {
                Nnf::False
            }
        }
        Formula::Not(b) => nnf(b, !positive),
        Formula::And(l, r) => {
            let parts = vec![nnf(l, positive), nnf(r, positive)];
            if positive {
                join(parts, true)
            } else {
                join(parts, false)
            }
        }
    }
}

/// Flattens and simplifies an n-ary `∧` (`conj`) or `∨`.
fn join(parts: Vec<Nnf>, conj: bool) -> Nnf {
    let mut out = Vec::new();
    for p in parts {
        match (p, conj) {
            (Nnf::True, true) | (Nnf::False, false) => {}
            (Nnf::False, true) => return Nnf::False,
            (Nnf::True, false) => return Nnf::True,
            (Nnf::And(inner), true) | (Nnf::Or(inner), false) => out.extend(inner),
            (other, _) => out.push(other),
        }
    }
    match (out.len(), conj) {
        (0, true) => Nnf::True,
        (0, false) => Nnf::False,
        (1, _) => out.pop().expect("one part"),
        (_, true) => Nnf::And(out),
        (_, false) => Nnf::Or(out),
    }
}

fn distributed_size(f: &Nnf) -> usize {
    match f {
        Nnf::Lit(_) | Nnf::False => 1,
        Nnf::True => 0,
        Nnf::And(parts) => parts.iter().map(distributed_size).fold(0usize, |a, b| a.saturating_add(b)),
        Nnf::Or(parts) => parts.iter().map(distributed_size).fold(1usize, |a, b| a.saturating_mul(b)),
    }
}

fn distribute(f: &Nnf) -> Vec<Clause> {
    match f {
        Nnf::Lit(l) => vec![vec![*l]],
        Nnf::True => Vec::new(),
        Nnf::False => vec![Vec::new()],
        Nnf::And(parts) => parts.iter().flat_map(distribute).collect(),
        Nnf::Or(parts) => {
            let mut acc: Vec<Clause> = vec![Vec::new()];
            for p in parts {
                let rhs = distribute(p);
                let mut next = Vec::with_capacity(acc.len() * rhs.len());
                for a in &acc {
                    for b in &rhs {
                        let mut c = a.clone();
                        c.extend_from_slice(b);
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
    }
}

struct Tseitin {
    next: u32,
    clauses: Vec<Clause>,
}

impl Tseitin {
    /// Returns a literal that implies `f` under the emitted clauses.
    fn encode(&mut self, f: &Nnf) -> Lit {
        match f {
            Nnf::Lit(l) => *l,
            Nnf::True | Nnf::False => {
                let t = self.fresh();
                if *f == Nnf::False {
                    self.clauses.push(vec![t.negate()]);
                }
                t
            }
            Nnf::And(parts) => {
                let lits: Vec<Lit> = parts.iter().map(|p| self.encode(p)).collect();
                let t = self.fresh();
                for l in lits {
                    self.clauses.push(vec![t.negate(), l]);
                }
                t
            }
            Nnf::Or(parts) => {
                let lits: Vec<Lit> = parts.iter().map(|p| self.encode(p)).collect();
                let t = self.fresh();
                let mut clause = vec![t.negate()];
                clause.extend(lits);
                self.clauses.push(clause);
                t
            }
        }
    }

    fn fresh(&mut self) -> Lit {
        self.next += 1;
        Lit::pos(self.next)
    }
}

/// Converts with [`DEFAULT_CLAUSE_BUDGET`].
pub fn to_cnf(formula: &AbstractFormula) -> Cnf {
    to_cnf_with_budget(formula, DEFAULT_CLAUSE_BUDGET)
}

pub fn to_cnf_with_budget(formula: &AbstractFormula, clause_budget: usize) -> Cnf {
    let n = nnf(formula, true);
    if distributed_size(&n) <= clause_budget {
        return Cnf::from_clauses(distribute(&n));
    }
    let max_letter = formula.leaves().into_iter().map(|l| l.0).max().unwrap_or(0);
    let mut ts = Tseitin {
        next: max_letter,
        clauses: Vec::new(),
    };
    match &n {
        Nnf::And(parts) => {
            for p in parts {
                let l = ts.encode(p);
                ts.clauses.push(vec![l]);
            }
        }
        other => {
            let l = ts.encode(other);
            ts.clauses.push(vec![l]);
        }
    }
    let mut cnf = Cnf::from_clauses(ts.clauses);
    cnf.num_letters = cnf.num_letters.max(ts.next);
    cnf
}
