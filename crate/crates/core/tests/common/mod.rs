#![allow(dead_code)]

pub mod planted;

use enthymeme_core::{AbstractFormula, Cnf, Formula, Letter, Lit};
use rand::rngs::SmallRng;
use rand::Rng;

/// Random formula over letters `1..=letters` with depth at most `depth`.
pub fn random_formula(rng: &mut SmallRng, letters: u32, depth: usize) -> AbstractFormula {
    if depth == 0 || rng.random_bool(0.3) {
        return if rng.random_bool(0.05) {
            Formula::Top
        } else {
            Formula::Atom(Letter(rng.random_range(1..=letters)))
        };
    }
    if rng.random_bool(0.4) {
        Formula::not(random_formula(rng, letters, depth - 1))
    } else {
        Formula::and(random_formula(rng, letters, depth - 1), random_formula(rng, letters, depth - 1))
    }
}

pub fn random_cnf(rng: &mut SmallRng, letters: u32) -> Cnf {
    let n_clauses = rng.random_range(0..=3 * letters as usize + 2);
    Cnf::from_clauses((0..n_clauses).map(|_| {
        let len = rng.random_range(0..=3);
        (0..len)
            .map(|_| Lit {
                letter: rng.random_range(1..=letters),
                positive: rng.random_bool(0.5),
            })
            .collect()
    }))
}

pub fn eval_bits(f: &AbstractFormula, bits: u32) -> bool {
    f.eval(&|l: &Letter| bits >> (l.0 - 1) & 1 == 1)
}

/// Letters `1..=n` as bit positions `0..n`.
pub fn assignments(n: u32) -> impl Iterator<Item = u32> {
    0..(1u32 << n)
}

pub fn max_letter(f: &AbstractFormula) -> u32 {
    f.atoms().into_iter().map(|l| l.0).max().unwrap_or(0)
}

pub fn tt_satisfiable(f: &AbstractFormula) -> bool {
    assignments(max_letter(f)).any(|b| eval_bits(f, b))
}

pub fn tt_entails(phi: &AbstractFormula, psi: &AbstractFormula) -> bool {
    let n = max_letter(phi).max(max_letter(psi));
    assignments(n).all(|b| !eval_bits(phi, b) || eval_bits(psi, b))
}

pub fn tt_contradicts(phi: &AbstractFormula, psi: &AbstractFormula) -> bool {
    let n = max_letter(phi).max(max_letter(psi));
    assignments(n).all(|b| !(eval_bits(phi, b) && eval_bits(psi, b)))
}

pub fn cnf_holds(cnf: &Cnf, bits: u32) -> bool {
    cnf.is_satisfied_by(|l| bits >> (l - 1) & 1 == 1)
}

pub fn tt_cnf_satisfiable(cnf: &Cnf) -> bool {
    assignments(cnf.num_letters()).any(|b| cnf_holds(cnf, b))
}
