//! Propositional formulas over `∧`, `¬` and `⊤`.
//!
//! [`AmrFormula`] and [`AbstractFormula`] share one tree type and differ only
//! in their leaves, so two formulas are isomorphic exactly when
//! [`Formula::skeleton`] agrees.
//!
//! Text syntax, used by fixtures and CLI output:
//!
//! ```text
//! formula := conj
//! conj    := unary ( "&" unary )*
//! unary   := "~" unary | "(" formula ")" | "true" | leaf
//! leaf    := role "(" left "," right ")"      (AMR atoms)
//!          | "x" digits                       (abstract letters)
//! ```
//!
//! `∧`, `¬` and `⊤` are accepted as synonyms of `&`, `~` and `true`.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// Ground dyadic atom `role(left, right)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AmrAtom {
    pub role: String,
    pub left: String,
    pub right: String,
}

impl AmrAtom {
    pub fn new(role: impl Into<String>, left: impl Into<String>, right: impl Into<String>) -> Self {
        AmrAtom {
            role: role.into(),
            left: left.into(),
            right: right.into(),
        }
    }
}

impl fmt::Display for AmrAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.role, self.left, self.right)
    }
}

/// Propositional letter `x<n>`; numbering starts at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Letter(pub u32);

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Formula<A> {
    Atom(A),
    And(Box<Formula<A>>, Box<Formula<A>>),
    Not(Box<Formula<A>>),
    Top,
}

pub type AmrFormula = Formula<AmrAtom>;
pub type AbstractFormula = Formula<Letter>;

/// The connective structure of a formula with its leaves erased.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Skeleton {
    Leaf,
    And(Box<Skeleton>, Box<Skeleton>),
    Not(Box<Skeleton>),
    Top,
}

impl<A> Formula<A> {
    pub fn atom(a: A) -> Self {
        Formula::Atom(a)
    }

    pub fn and(left: Self, right: Self) -> Self {
        Formula::And(Box::new(left), Box::new(right))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(body: Self) -> Self {
        Formula::Not(Box::new(body))
    }

    /// Right-nested conjunction; `⊤` when empty.
    pub fn and_all<I>(parts: I) -> Self
    where
        I: IntoIterator<Item = Self>,
        I::IntoIter: DoubleEndedIterator,
    {
        let mut iter = parts.into_iter().rev();
        match iter.next() {
            None => Formula::Top,
            Some(last) => iter.fold(last, |acc, f| Formula::and(f, acc)),
        }
    }

    /// The flattened list of top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<&Formula<A>> {
        let mut out = Vec::new();
        self.push_conjuncts(&mut out);
        out
    }

    fn push_conjuncts<'a>(&'a self, out: &mut Vec<&'a Formula<A>>) {
        match self {
            Formula::And(l, r) => {
                l.push_conjuncts(out);
                r.push_conjuncts(out);
            }
            other => out.push(other),
        }
    }

    /// Leaves in left-to-right order, duplicates included.
    pub fn leaves(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.visit_leaves(&mut |a| out.push(a));
        out
    }

    fn visit_leaves<'a>(&'a self, f: &mut impl FnMut(&'a A)) {
        match self {
            Formula::Atom(a) => f(a),
            Formula::And(l, r) => {
                l.visit_leaves(f);
                r.visit_leaves(f);
            }
            Formula::Not(b) => b.visit_leaves(f),
            Formula::Top => {}
        }
    }

    pub fn skeleton(&self) -> Skeleton {
        match self {
            Formula::Atom(_) => Skeleton::Leaf,
            Formula::And(l, r) => Skeleton::And(Box::new(l.skeleton()), Box::new(r.skeleton())),
            Formula::Not(b) => Skeleton::Not(Box::new(b.skeleton())),
            Formula::Top => Skeleton::Top,
        }
    }

    /// Replaces every leaf, keeping the tree shape.
    pub fn try_map<B, E>(&self, f: &mut impl FnMut(&A) -> Result<Formula<B>, E>) -> Result<Formula<B>, E> {
        Ok(match self {
            Formula::Atom(a) => f(a)?,
            Formula::And(l, r) => Formula::and(l.try_map(f)?, r.try_map(f)?),
            Formula::Not(b) => Formula::not(b.try_map(f)?),
            Formula::Top => Formula::Top,
        })
    }

    pub fn map<B>(&self, f: &mut impl FnMut(&A) -> B) -> Formula<B> {
        match self.try_map::<B, core::convert::Infallible>(&mut |a| Ok(Formula::Atom(f(a)))) {
            Ok(x) => x,
            Err(never) => match never {},
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top => 0,
            Formula::And(l, r) => 1 + l.depth().max(r.depth()),
            Formula::Not(b) => 1 + b.depth(),
        }
    }

    /// Truth value under `valuation`.
    pub fn eval(&self, valuation: &impl Fn(&A) -> bool) -> bool {
        match self {
            Formula::Atom(a) => valuation(a),
            Formula::And(l, r) => l.eval(valuation) && r.eval(valuation),
            Formula::Not(b) => !b.eval(valuation),
            Formula::Top => true,
        }
    }
}

impl<A: Ord + Clone> Formula<A> {
    /// The set of atoms occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<A> {
        self.leaves().into_iter().cloned().collect()
    }

    /// Distinct atoms in order of first occurrence.
    pub fn atoms_in_order(&self) -> Vec<A> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for a in self.leaves() {
            if seen.insert(a) {
                out.push(a.clone());
            }
        }
        out
    }

    /// Canonical form: conjunctions flattened and sorted, recursively.
    pub fn canonical(&self) -> Self {
        match self {
            Formula::And(..) => {
                let mut parts: Vec<Formula<A>> = self.conjuncts().into_iter().map(|c| c.canonical()).collect();
                parts.sort();
                Formula::and_all(parts)
            }
            Formula::Not(b) => Formula::not(b.canonical()),
            other => other.clone(),
        }
    }
}

struct Symbols {
    and: &'static str,
    not: &'static str,
    top: &'static str,
}

const ASCII: Symbols = Symbols {
    and: " & ",
    not: "~",
    top: "true",
};
const UNICODE: Symbols = Symbols {
    and: " ∧ ",
    not: "¬",
    top: "⊤",
};

fn write_formula<A: fmt::Display>(f: &mut fmt::Formatter<'_>, formula: &Formula<A>, sym: &Symbols, nested: bool) -> fmt::Result {
    match formula {
        Formula::Atom(a) => write!(f, "{a}"),
        Formula::Top => f.write_str(sym.top),
        Formula::Not(b) => {
            f.write_str(sym.not)?;
            write_formula(f, b, sym, true)
        }
        Formula::And(..) => {
            if nested {
                f.write_str("(")?;
            }
            for (i, c) in formula.conjuncts().into_iter().enumerate() {
                if i > 0 {
                    f.write_str(sym.and)?;
                }
                write_formula(f, c, sym, true)?;
            }
            if nested {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl<A: fmt::Display> fmt::Display for Formula<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, &ASCII, false)
    }
}

/// Displays a formula with `∧`, `¬` and `⊤`.
pub struct Unicode<'a, A>(pub &'a Formula<A>);

impl<A: fmt::Display> fmt::Display for Unicode<'_, A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self.0, &UNICODE, false)
    }
}

impl<A> Formula<A> {
    pub fn unicode(&self) -> Unicode<'_, A> {
        Unicode(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("formula syntax error at byte {offset}: {message}")]
pub struct FormulaSyntaxError {
    pub offset: usize,
    pub message: String,
}

/// Leaf types readable from the text syntax.
pub trait ParseLeaf: Sized {
    fn parse_leaf(cursor: &mut Cursor<'_>) -> Result<Self, FormulaSyntaxError>;
}

pub struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn error(&self, message: &str) -> FormulaSyntaxError {
        FormulaSyntaxError {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    /// Consumes characters up to (not including) any of `stops`.
    fn take_until(&mut self, stops: &[char]) -> &'a str {
        let rest = self.rest();
        let len = rest.find(|c| stops.contains(&c)).unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }
}

impl ParseLeaf for AmrAtom {
    fn parse_leaf(c: &mut Cursor<'_>) -> Result<Self, FormulaSyntaxError> {
        c.skip_ws();
        let role = c.take_until(&['(', ')', ',', '&', '~', '∧', '¬']).trim();
        if role.is_empty() || role.contains(char::is_whitespace) {
            return Err(c.error("expected an atom role"));
        }
        if !c.eat("(") {
            return Err(c.error("expected '(' after role"));
        }
        let left = c.take_until(&[',', '(', ')']).trim();
        if !c.eat(",") {
            return Err(c.error("expected ','"));
        }
        let right = c.take_until(&[',', '(', ')']).trim();
        if !c.eat(")") {
            return Err(c.error("expected ')'"));
        }
        if left.is_empty() || right.is_empty() {
            return Err(c.error("empty atom argument"));
        }
        Ok(AmrAtom::new(role, left, right))
    }
}

impl ParseLeaf for Letter {
    fn parse_leaf(c: &mut Cursor<'_>) -> Result<Self, FormulaSyntaxError> {
        if !c.eat("x") {
            return Err(c.error("expected a letter x<n>"));
        }
        let digits = c.take_until(&[' ', '\t', '\n', ')', '&', '∧']);
        match digits.parse::<u32>() {
            Ok(n) if n > 0 => Ok(Letter(n)),
            _ => Err(c.error("letter index must be a positive integer")),
        }
    }
}

fn parse_conj<A: ParseLeaf>(c: &mut Cursor<'_>) -> Result<Formula<A>, FormulaSyntaxError> {
    let mut parts = alloc::vec![parse_unary(c)?];
    while c.eat("&") || c.eat("∧") {
        parts.push(parse_unary(c)?);
    }
    Ok(Formula::and_all(parts))
}

fn parse_unary<A: ParseLeaf>(c: &mut Cursor<'_>) -> Result<Formula<A>, FormulaSyntaxError> {
    if c.eat("~") || c.eat("¬") {
        return Ok(Formula::not(parse_unary(c)?));
    }
    if c.eat("(") {
        let inner = parse_conj(c)?;
        if !c.eat(")") {
            return Err(c.error("expected ')'"));
        }
        return Ok(inner);
    }
    if c.eat("⊤") {
        return Ok(Formula::Top);
    }
    c.skip_ws();
    let rest = c.rest();
    if rest.starts_with("true") && !rest[4..].starts_with('(') {
        c.pos += 4;
        return Ok(Formula::Top);
    }
    A::parse_leaf(c).map(Formula::Atom)
}

/// Parses the text syntax described in the module docs.
pub fn parse_formula<A: ParseLeaf>(text: &str) -> Result<Formula<A>, FormulaSyntaxError> {
    let mut c = Cursor { text, pos: 0 };
    let f = parse_conj(&mut c)?;
    c.skip_ws();
    if c.pos != text.len() {
        return Err(c.error("trailing input"));
    }
    Ok(f)
}

impl<A: ParseLeaf> FromStr for Formula<A> {
    type Err = FormulaSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
