use std::collections::{BTreeMap, BTreeSet};

use enthymeme_core::relax::{ContradictEdge, Mapping, MatchEdge, RelationSet};
use enthymeme_core::{AmrAtom, AmrFormula, Formula};
use rand::rngs::SmallRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn atom(i: usize) -> AmrAtom {
    AmrAtom::new(format!("r{}", i % 3), format!("a{i}"), format!("b{}", i % 5))
}

/// Atoms with a planted signed letter, plus relation edges consistent with
/// that plant: `≃` only between equal literals and `⊥` only between
/// complementary ones.
pub struct Planted {
    pub atoms: Vec<AmrAtom>,
    pub formulas: Vec<AmrFormula>,
    pub relations: RelationSet,
}

pub fn planted(rng: &mut SmallRng) -> Planted {
    let n = rng.random_range(1..=12);
    let letters = rng.random_range(1..=n);
    let atoms: Vec<AmrAtom> = (0..n).map(atom).collect();
    let plant: Vec<(usize, bool)> = (0..n).map(|_| (rng.random_range(0..letters), rng.random_bool(0.5))).collect();

    let mut relations = RelationSet::default();
    for i in 0..n {
        for j in 0..n {
            if i == j || !rng.random_bool(0.25) {
                continue;
            }
            if plant[i] == plant[j] {
                relations.matches.push(MatchEdge {
                    claim_atom: atoms[i].clone(),
                    premise_atom: atoms[j].clone(),
                    score: 0.9,
                });
            } else if plant[i].0 == plant[j].0 {
                relations.contradicts.push(ContradictEdge {
                    claim_atom: atoms[i].clone(),
                    premise_atom: atoms[j].clone(),
                    con_score: 90.0,
                });
            }
        }
    }
    // Split the atoms over a few formulas, some negated.
    let mut shuffled = atoms.clone();
    shuffled.shuffle(rng);
    let formulas = shuffled
        .chunks(rng.random_range(1..=n))
        .map(|chunk| {
            Formula::and_all(chunk.iter().map(|a| {
                if rng.random_bool(0.3) {
                    Formula::not(Formula::atom(a.clone()))
                } else {
                    Formula::atom(a.clone())
                }
            }))
        })
        .collect();
    Planted { atoms, formulas, relations }
}

/// Component id and parity of every atom, computed by breadth-first search
/// over the undirected relation graph (`≃` parity 0, `⊥` parity 1).
pub fn components(p: &Planted) -> BTreeMap<AmrAtom, (usize, bool)> {
    let mut adj: BTreeMap<&AmrAtom, Vec<(&AmrAtom, bool)>> = BTreeMap::new();
    for m in &p.relations.matches {
        adj.entry(&m.claim_atom).or_default().push((&m.premise_atom, false));
        adj.entry(&m.premise_atom).or_default().push((&m.claim_atom, false));
    }
    for c in &p.relations.contradicts {
        adj.entry(&c.claim_atom).or_default().push((&c.premise_atom, true));
        adj.entry(&c.premise_atom).or_default().push((&c.claim_atom, true));
    }
    let mut out = BTreeMap::new();
    for (id, a) in p.atoms.iter().enumerate() {
        if out.contains_key(a) {
            continue;
        }
        out.insert(a.clone(), (id, false));
        let mut queue = vec![(a, false)];
        while let Some((x, par)) = queue.pop() {
            for &(y, flip) in adj.get(x).map(Vec::as_slice).unwrap_or(&[]) {
                if !out.contains_key(y) {
                    out.insert(y.clone(), (id, par ^ flip));
                    queue.push((y, par ^ flip));
                }
            }
        }
    }
    out
}

/// `t` has the shape of `f`, with each leaf of `f` replaced by a literal.
pub fn same_shape<A, B>(f: &Formula<A>, t: &Formula<B>) -> bool {
    match (f, t) {
        (Formula::Atom(_), Formula::Atom(_)) => true,
        (Formula::Atom(_), Formula::Not(b)) => matches!(**b, Formula::Atom(_)),
        (Formula::And(l1, r1), Formula::And(l2, r2)) => same_shape(l1, l2) && same_shape(r1, r2),
        (Formula::Not(a), Formula::Not(b)) => same_shape(a, b),
        (Formula::Top, Formula::Top) => true,
        _ => false,
    }
}

/// Checks `g` against the relation-graph oracle: `≃` edges share a literal,
/// `⊥` edges get complementary ones, letters coincide exactly within a
/// component and literals exactly for equal parity.
pub fn check_planted(p: &Planted, g: &Mapping) -> Result<(), String> {
    let comp = components(p);
    for m in &p.relations.matches {
        if g.get(&m.claim_atom) != g.get(&m.premise_atom) {
            return Err(format!("{} ≃ {} got different literals", m.claim_atom, m.premise_atom));
        }
    }
    for c in &p.relations.contradicts {
        let (a, b) = (g.get(&c.claim_atom), g.get(&c.premise_atom));
        if a.is_none() || a != b.map(|l| l.complement()) {
            return Err(format!("{} ⊥ {} not complementary", c.claim_atom, c.premise_atom));
        }
    }
    for a in &p.atoms {
        for b in &p.atoms {
            let (la, lb) = (g.get(a).ok_or("unmapped atom")?, g.get(b).ok_or("unmapped atom")?);
            if (la.letter == lb.letter) != (comp[a].0 == comp[b].0) {
                return Err(format!("{a} and {b}: letters disagree with components"));
            }
            if comp[a].0 == comp[b].0 && (la == lb) != (comp[a].1 == comp[b].1) {
                return Err(format!("{a} and {b}: signs disagree with parity"));
            }
        }
    }
    for f in &p.formulas {
        let t = g.translate(f).map_err(|e| e.to_string())?;
        if !same_shape(f, &t) {
            return Err(format!("{f} became {t}"));
        }
    }
    let distinct: BTreeSet<_> = comp.values().map(|c| c.0).collect();
    if g.alphabet_size() as usize != distinct.len() {
        return Err("alphabet size differs from component count".into());
    }
    Ok(())
}

/// Adds a `⊥` edge between two atoms that currently share a literal, so
/// no mapping can honour it.
pub fn seed_conflict(p: &mut Planted, g: &Mapping, rng: &mut SmallRng) {
    let same: Vec<(AmrAtom, AmrAtom)> = p
        .atoms
        .iter()
        .flat_map(|a| p.atoms.iter().map(move |b| (a.clone(), b.clone())))
        .filter(|(a, b)| a != b && g.get(a) == g.get(b))
        .collect();
    let (a, b) = match same.as_slice() {
        [] => {
            // Force a pair by matching two atoms, then contradicting them.
            let (a, b) = (atom(0), atom(1));
            p.atoms.extend([a.clone(), b.clone()]);
            p.relations.matches.push(MatchEdge {
                claim_atom: a.clone(),
                premise_atom: b.clone(),
                score: 0.9,
            });
            (a, b)
        }
        pairs => pairs[rng.random_range(0..pairs.len())].clone(),
    };
    p.relations.contradicts.push(ContradictEdge {
        claim_atom: a,
        premise_atom: b,
        con_score: 95.0,
    });
}
