//! The mapping from AMR atoms to signed propositional letters, and the
//! translation of AMR formulas under it.
//!
//! `≃` edges are closed symmetrically and transitively into classes; each
//! class gets one letter. A `⊥` edge forces its two classes onto the same
//! letter with opposite signs, which amounts to a 2-colouring of the class
//! graph. Letters are numbered by first appearance of an atom across the
//! input formulas, and the first-appearing class of a `⊥`-connected group
//! gets the positive sign.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use super::relations::{ContradictEdge, RelationSet};
use crate::formula::{AbstractFormula, AmrAtom, AmrFormula, Formula, Letter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignedLetter {
    pub letter: Letter,
    pub positive: bool,
}

impl SignedLetter {
    pub fn complement(self) -> Self {
        SignedLetter {
            letter: self.letter,
            positive: !self.positive,
        }
    }

    pub fn to_formula(self) -> AbstractFormula {
        if self.positive {
            Formula::Atom(self.letter)
        } else {
            Formula::not(Formula::Atom(self.letter))
        }
    }
}

impl fmt::Display for SignedLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.letter)
        } else {
            write!(f, "~{}", self.letter)
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConflictError {
    #[error("{} ⊥ {} but both are in one ≃ class", .edge.claim_atom, .edge.premise_atom)]
    ContradictsMatchClass { edge: ContradictEdge, class: Vec<AmrAtom> },
    #[error("{} ⊥ {} closes an odd ⊥ cycle", .edge.claim_atom, .edge.premise_atom)]
    OddCycle { edge: ContradictEdge, cycle_atoms: Vec<AmrAtom> },
}

impl ConflictError {
    pub fn edge(&self) -> &ContradictEdge {
        match self {
            ConflictError::ContradictsMatchClass { edge, .. } | ConflictError::OddCycle { edge, .. } => edge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConflictPolicy {
    #[default]
    Error,
    /// Skip `⊥` edges that cannot be honoured and report them in
    /// [`Mapping::dropped`].
    DropContradict,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("atom {0} is not in the mapping")]
pub struct UnmappedAtom(pub AmrAtom);

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mapping {
    assignment: BTreeMap<AmrAtom, SignedLetter>,
    alphabet_size: u32,
    /// `⊥` edges skipped under [`ConflictPolicy::DropContradict`].
    pub dropped: Vec<ContradictEdge>,
}

impl Mapping {
    pub fn get(&self, atom: &AmrAtom) -> Option<SignedLetter> {
        self.assignment.get(atom).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<AmrAtom, SignedLetter> {
        &self.assignment
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    /// Homomorphic replacement of atoms by their literals; `⊤` stays `⊤`.
    pub fn translate(&self, formula: &AmrFormula) -> Result<AbstractFormula, UnmappedAtom> {
        formula.try_map(&mut |a: &AmrAtom| self.get(a).map(SignedLetter::to_formula).ok_or_else(|| UnmappedAtom(a.clone())))
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut rows: Vec<(&AmrAtom, &SignedLetter)> = self.assignment.iter().collect();
        rows.sort_by(|a, b| (a.1.letter, !a.1.positive, a.0).cmp(&(b.1.letter, !b.1.positive, b.0)));
        for (atom, lit) in rows {
            writeln!(f, "g({atom}) = {lit}")?;
        }
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let p = self.parent[x];
        if p == x {
            return x;
        }
        let root = self.find(p);
        self.parent[x] = root;
        root
    }

    /// The smaller root wins, so roots are first-appearance members.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Union-find where each element carries its parity relative to the root.
struct ParityUnionFind {
    parent: Vec<usize>,
    parity: Vec<bool>,
}

impl ParityUnionFind {
    fn new(n: usize) -> Self {
        ParityUnionFind {
            parent: (0..n).collect(),
            parity: alloc::vec![false; n],
        }
    }

    fn find(&mut self, x: usize) -> (usize, bool) {
        let p = self.parent[x];
        if p == x {
            return (x, false);
        }
        let (root, par) = self.find(p);
        self.parent[x] = root;
        self.parity[x] ^= par;
        (root, self.parity[x])
    }

    /// Records `a ≠ b`; false if that contradicts earlier constraints.
    fn differ(&mut self, a: usize, b: usize) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return pa != pb;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        self.parity[hi] = !(pa ^ pb);
        true
    }
}

pub fn build_mapping(formulas: &[AmrFormula], relations: &RelationSet) -> Result<Mapping, ConflictError> {
    build_mapping_with(formulas, relations, ConflictPolicy::Error)
}

pub fn build_mapping_with(formulas: &[AmrFormula], relations: &RelationSet, policy: ConflictPolicy) -> Result<Mapping, ConflictError> {
    let mut atoms: Vec<AmrAtom> = Vec::new();
    let mut index: BTreeMap<AmrAtom, usize> = BTreeMap::new();
    let mut add = |a: &AmrAtom, atoms: &mut Vec<AmrAtom>| {
        if !index.contains_key(a) {
            index.insert(a.clone(), atoms.len());
            atoms.push(a.clone());
        }
    };
    for f in formulas {
        for a in f.leaves() {
            add(a, &mut atoms);
        }
    }
    for m in &relations.matches {
        add(&m.claim_atom, &mut atoms);
        add(&m.premise_atom, &mut atoms);
    }
    for c in &relations.contradicts {
        add(&c.claim_atom, &mut atoms);
        add(&c.premise_atom, &mut atoms);
    }
    let n = atoms.len();
    let idx = |a: &AmrAtom| index[a];

    let mut classes = UnionFind::new(n);
    for m in &relations.matches {
        classes.union(idx(&m.claim_atom), idx(&m.premise_atom));
    }

    let mut signs = ParityUnionFind::new(n);
    let mut dropped = Vec::new();
    for edge in &relations.contradicts {
        let (ca, cb) = (classes.find(idx(&edge.claim_atom)), classes.find(idx(&edge.premise_atom)));
        let conflict = if ca == cb {
            let class = (0..n).filter(|&i| classes.find(i) == ca).map(|i| atoms[i].clone()).collect();
            Some(ConflictError::ContradictsMatchClass { edge: edge.clone(), class })
        } else if !signs.differ(ca, cb) {
            let (root, _) = signs.find(ca);
            let cycle_atoms = (0..n).filter(|&i| signs.find(classes.find(i)).0 == root).map(|i| atoms[i].clone()).collect();
            Some(ConflictError::OddCycle {
                edge: edge.clone(),
                cycle_atoms,
            })
        } else {
            None
        };
        if let Some(err) = conflict {
            match policy {
                ConflictPolicy::Error => return Err(err),
                ConflictPolicy::DropContradict => dropped.push(edge.clone()),
            }
        }
    }

    // Roots are the smallest members, so iterating atoms in order meets each
    // group's first-appearing member first.
    let mut letters: BTreeMap<usize, (Letter, bool)> = BTreeMap::new();
    let mut assignment = BTreeMap::new();
    let mut next = 0;
    for (i, atom) in atoms.iter().enumerate() {
        let class = classes.find(i);
        let (group, parity) = signs.find(class);
        let (letter, base_parity) = *letters.entry(group).or_insert_with(|| {
            next += 1;
            (Letter(next), parity)
        });
        assignment.insert(
            atom.clone(),
            SignedLetter {
                letter,
                positive: parity == base_parity,
            },
        );
    }
    Ok(Mapping {
        assignment,
        alphabet_size: next,
        dropped,
    })
}

pub fn translate(formula: &AmrFormula, mapping: &Mapping) -> Result<AbstractFormula, UnmappedAtom> {
    mapping.translate(formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use crate::relax::relations::MatchEdge;
    use alloc::vec;

    fn f(s: &str) -> AmrFormula {
        s.parse().unwrap()
    }

    fn atom(s: &str) -> AmrAtom {
        match f(s) {
            Formula::Atom(a) => a,
            _ => panic!("not an atom"),
        }
    }

    fn lit(n: u32, positive: bool) -> SignedLetter {
        SignedLetter {
            letter: Letter(n),
            positive,
        }
    }

    #[test]
    fn shared_atoms_share_letters() {
        let g = build_mapping(&[f("arg1(car,red) & arg2(car,fast)"), f("arg1(car,red)")], &RelationSet::default()).unwrap();
        assert_eq!(g.get(&atom("arg1(car,red)")), Some(lit(1, true)));
        assert_eq!(g.get(&atom("arg2(car,fast)")), Some(lit(2, true)));
        assert_eq!(g.alphabet_size(), 2);
        assert_eq!(g.translate(&f("arg1(car,red) & arg2(car,fast)")).unwrap().to_string(), "x1 & x2");
        assert_eq!(g.translate(&f("arg1(car,red)")).unwrap().to_string(), "x1");
    }

    #[test]
    fn matches_merge() {
        let rel = RelationSet {
            matches: vec![MatchEdge {
                claim_atom: atom("arg0(move,tiger)"),
                premise_atom: atom("arg0(walk,tiger)"),
                score: 0.8483,
            }],
            contradicts: vec![],
        };
        let g = build_mapping(&[f("arg0(walk,tiger) & location(walk,cage)"), f("arg0(move,tiger)")], &rel).unwrap();
        assert_eq!(g.get(&atom("arg0(walk,tiger)")), Some(lit(1, true)));
        assert_eq!(g.get(&atom("arg0(move,tiger)")), Some(lit(1, true)));
        assert_eq!(g.get(&atom("location(walk,cage)")), Some(lit(2, true)));
    }

    #[test]
    fn contradicts_complement() {
        let rel = RelationSet {
            matches: vec![],
            contradicts: vec![
                ContradictEdge {
                    claim_atom: atom("arg0(sleep,tiger)"),
                    premise_atom: atom("arg0(walk,tiger)"),
                    con_score: 85.0,
                },
                ContradictEdge {
                    claim_atom: atom("location(sleep,cage)"),
                    premise_atom: atom("location(walk,cage)"),
                    con_score: 82.0,
                },
            ],
        };
        let g = build_mapping(
            &[f("arg0(walk,tiger) & location(walk,cage)"), f("arg0(sleep,tiger) & location(sleep,cage)")],
            &rel,
        )
        .unwrap();
        assert_eq!(g.get(&atom("arg0(sleep,tiger)")), Some(lit(1, false)));
        assert_eq!(g.get(&atom("location(sleep,cage)")), Some(lit(2, false)));
        assert_eq!(g.translate(&f("arg0(sleep,tiger)")).unwrap().to_string(), "~x1");
    }

    #[test]
    fn conflict_inside_match_class() {
        let (a, b) = (atom("r(a,b)"), atom("s(a,b)"));
        let rel = RelationSet {
            matches: vec![MatchEdge {
                claim_atom: a.clone(),
                premise_atom: b.clone(),
                score: 0.9,
            }],
            contradicts: vec![ContradictEdge {
                claim_atom: a.clone(),
                premise_atom: b.clone(),
                con_score: 95.0,
            }],
        };
        let formulas = [f("r(a,b)"), f("s(a,b)")];
        assert!(matches!(
            build_mapping(&formulas, &rel),
            Err(ConflictError::ContradictsMatchClass { .. })
        ));
        let g = build_mapping_with(&formulas, &rel, ConflictPolicy::DropContradict).unwrap();
        assert_eq!(g.dropped.len(), 1);
        assert_eq!(g.get(&a), g.get(&b));
    }

    #[test]
    fn odd_cycle() {
        let e = |x: &str, y: &str| ContradictEdge {
            claim_atom: atom(x),
            premise_atom: atom(y),
            con_score: 90.0,
        };
        let rel = RelationSet {
            matches: vec![],
            contradicts: vec![e("a(p,q)", "b(p,q)"), e("b(p,q)", "c(p,q)"), e("c(p,q)", "a(p,q)")],
        };
        assert!(matches!(
            build_mapping(&[f("a(p,q) & b(p,q) & c(p,q)")], &rel),
            Err(ConflictError::OddCycle { .. })
        ));
    }

    #[test]
    fn unmapped_atom() {
        let g = build_mapping(&[f("a(p,q)")], &RelationSet::default()).unwrap();
        assert_eq!(g.translate(&f("b(p,q)")), Err(UnmappedAtom(atom("b(p,q)"))));
        assert_eq!(g.translate(&Formula::Top), Ok(Formula::Top));
    }
}
