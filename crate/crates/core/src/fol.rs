//! Bos-style translation of AMR graphs into existential first-order
//! formulas, and grounding of those formulas into [`AmrFormula`]s.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::amr::{AmrEdge, AmrGraph, AmrNode, Target, Violation};
use crate::formula::{AmrAtom, AmrFormula, Formula};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FolFormula {
    Exists(String, Box<FolFormula>),
    And(Vec<FolFormula>),
    Not(Box<FolFormula>),
    /// `concept(var)`; the concept is stored without its sense suffix.
    Monadic { concept: String, var: String },
    Dyadic { role: String, left: Term, right: Term },
}

impl fmt::Display for FolFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FolFormula::Exists(v, body) => write!(f, "∃{v}({body})"),
            FolFormula::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ∧ ")?;
                    }
                    match p {
                        FolFormula::And(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
            FolFormula::Not(body) => match body.as_ref() {
                FolFormula::And(_) => write!(f, "¬({body})"),
                _ => write!(f, "¬{body}"),
            },
            FolFormula::Monadic { concept, var } => write!(f, "{concept}({var})"),
            FolFormula::Dyadic { role, left, right } => write!(f, "{role}({left},{right})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogicError {
    #[error("invalid graph: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidGraph(Vec<Violation>),
    #[error("variable {0} has no concept declaration")]
    MissingConceptDeclaration(String),
    #[error("variable {0} is not bound by a quantifier")]
    UnboundVariable(String),
}

/// Removes a PropBank sense suffix: `want-01` becomes `want`.
pub fn strip_sense(concept: &str) -> &str {
    match concept.rfind('-') {
        Some(i) if i > 0 && i + 1 < concept.len() && concept[i + 1..].chars().all(|c| c.is_ascii_digit()) => &concept[..i],
        _ => concept,
    }
}

/// `arg1-of` is read as `arg1` with swapped arguments.
fn inverse_base(role: &str) -> Option<&str> {
    if role == "consist-of" || role.starts_with("prep-") {
        return None;
    }
    role.strip_suffix("-of").filter(|base| !base.is_empty())
}

/// Folds leaf `:mod` children into multi-word concepts, e.g. an `insect`
/// with `:mod (l / large)` becomes the node `large insect`.
///
/// Only modifiers without outgoing edges, negation or other incoming
/// edges are folded.
pub fn collapse_modifiers(graph: &AmrGraph) -> AmrGraph {
    let mut incoming: BTreeMap<&str, usize> = BTreeMap::new();
    for e in graph.edges() {
        if let Some(t) = e.target_node() {
            *incoming.entry(t).or_default() += 1;
        }
    }
    let foldable = |e: &AmrEdge| -> Option<&AmrNode> {
        let t = e.target_node()?;
        let node = graph.node(t)?;
        (e.role == "mod" && !node.negated && incoming.get(t) == Some(&1) && graph.outgoing(t).next().is_none()).then_some(node)
    };
    let mut removed = BTreeSet::new();
    let mut prefixes: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in graph.edges() {
        if let Some(node) = foldable(e) {
            removed.insert(node.variable.as_str());
            prefixes.entry(e.source.as_str()).or_default().push(strip_sense(&node.concept));
        }
    }
    let nodes = graph
        .nodes()
        .iter()
        .filter(|n| !removed.contains(n.variable.as_str()))
        .map(|n| {
            let mut n = n.clone();
            if let Some(p) = prefixes.get(n.variable.as_str()) {
                n.concept = format!("{} {}", p.join(" "), n.concept);
            }
            n
        })
        .collect();
    let edges = graph
        .edges()
        .iter()
        .filter(|e| !e.target_node().is_some_and(|t| removed.contains(t)))
        .cloned()
        .collect();
    AmrGraph::from_parts(graph.root(), nodes, edges)
}

struct Layout<'g> {
    graph: &'g AmrGraph,
    /// Index of the edge that first reaches each node in a depth-first walk.
    tree_edge: BTreeMap<&'g str, usize>,
    /// Nodes referenced again after their declaration.
    hoisted: BTreeSet<&'g str>,
    /// Hoisted variables quantified at each anchor node, in pre-order.
    anchored: BTreeMap<&'g str, Vec<&'g str>>,
}

impl<'g> Layout<'g> {
    fn new(graph: &'g AmrGraph) -> Self {
        let mut tree_edge = BTreeMap::new();
        let mut parent: BTreeMap<&'g str, &'g str> = BTreeMap::new();
        let mut order = Vec::new();
        let mut visited = BTreeSet::new();
        let root = graph.root();
        visit(graph, root, &mut visited, &mut order, &mut tree_edge, &mut parent);

        let mut users: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (i, e) in graph.edges().iter().enumerate() {
            if let Some(t) = e.target_node() {
                if tree_edge.get(t) != Some(&i) {
                    users.entry(t).or_default().push(e.source.as_str());
                }
            }
        }
        let hoisted: BTreeSet<&str> = users.keys().copied().collect();

        let depth = |mut v: &'g str| {
            let mut d = 0;
            while let Some(&p) = parent.get(v) {
                v = p;
                d += 1;
            }
            d
        };
        let lca = |a: &'g str, b: &'g str| -> &'g str {
            let (mut a, mut b) = (a, b);
            let (mut da, mut db) = (depth(a), depth(b));
            while da > db {
                a = parent[a];
                da -= 1;
            }
            while db > da {
                b = parent[b];
                db -= 1;
            }
            while a != b {
                a = parent[a];
                b = parent[b];
            }
            a
        };

        let mut anchored: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for &v in &order {
            let Some(refs) = users.get(v) else { continue };
            let mut scope = parent[v];
            for &r in refs {
                scope = lca(scope, r);
            }
            while hoisted.contains(scope) {
                scope = parent[scope];
            }
            anchored.entry(scope).or_default().push(v);
        }
        Layout {
            graph,
            tree_edge,
            hoisted,
            anchored,
        }
    }

    fn edge_atom(&self, e: &AmrEdge) -> FolFormula {
        let source = Term::Var(e.source.clone());
        let target = match &e.target {
            Target::Node(t) => Term::Var(t.clone()),
            Target::Constant(c) => Term::Const(c.text().to_string()),
        };
        match (inverse_base(&e.role), &e.target) {
            (Some(base), Target::Node(_)) => FolFormula::Dyadic {
                role: base.to_string(),
                left: target,
                right: source,
            },
            _ => FolFormula::Dyadic {
                role: e.role.clone(),
                left: source,
                right: target,
            },
        }
    }

    fn body(&self, v: &'g str) -> Vec<FolFormula> {
        let node = self.graph.node(v).expect("validated graph");
        let mut parts = vec![FolFormula::Monadic {
            concept: strip_sense(&node.concept).to_string(),
            var: v.to_string(),
        }];
        for (i, e) in self.graph.edges().iter().enumerate() {
            if e.source != v {
                continue;
            }
            match e.target_node() {
                Some(t) if self.tree_edge.get(t) == Some(&i) => {
                    if self.hoisted.contains(t) {
                        parts.push(self.edge_atom(e));
                        let inner = self.body(t);
                        if self.graph.node(t).is_some_and(|n| n.negated) {
                            parts.push(FolFormula::Not(Box::new(conjunction(inner))));
                        } else {
                            parts.extend(inner);
                        }
                    } else {
                        parts.push(self.scoped(t, Some(self.edge_atom(e))));
                    }
                }
                _ => parts.push(self.edge_atom(e)),
            }
        }
        parts
    }

    /// The existential subformula rooted at a non-hoisted node.
    fn scoped(&self, v: &'g str, incoming: Option<FolFormula>) -> FolFormula {
        let mut parts: Vec<FolFormula> = incoming.into_iter().collect();
        parts.extend(self.body(v));
        let mut f = conjunction(parts);
        if let Some(hs) = self.anchored.get(v) {
            for h in hs.iter().rev() {
                f = FolFormula::Exists(h.to_string(), Box::new(f));
            }
        }
        f = FolFormula::Exists(v.to_string(), Box::new(f));
        if self.graph.node(v).is_some_and(|n| n.negated) {
            f = FolFormula::Not(Box::new(f));
        }
        f
    }
}

fn visit<'g>(
    graph: &'g AmrGraph,
    v: &'g str,
    visited: &mut BTreeSet<&'g str>,
    order: &mut Vec<&'g str>,
    tree_edge: &mut BTreeMap<&'g str, usize>,
    parent: &mut BTreeMap<&'g str, &'g str>,
) {
    visited.insert(v);
    order.push(v);
    for (i, e) in graph.edges().iter().enumerate() {
        if e.source != v {
            continue;
        }
        if let Some(t) = e.target_node() {
            if !visited.contains(t) {
                tree_edge.insert(t, i);
                parent.insert(t, v);
                visit(graph, t, visited, order, tree_edge, parent);
            }
        }
    }
}

fn conjunction(mut parts: Vec<FolFormula>) -> FolFormula {
    if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        FolFormula::And(parts)
    }
}

/// Translates a graph into a nested existential conjunction.
///
/// Each node contributes `∃v(concept(v) ∧ …)` with the edge that declares it
/// placed first inside its scope. A re-entrant node is quantified at the
/// lowest common ancestor of all nodes that mention it, and a negated node
/// wraps its own existential subformula in `¬`.
pub fn amr_to_fol(graph: &AmrGraph) -> Result<FolFormula, LogicError> {
    let violations = graph.validate();
    if !violations.is_empty() {
        return Err(LogicError::InvalidGraph(violations));
    }
    let layout = Layout::new(graph);
    Ok(layout.scoped(graph.root(), None))
}

/// Grounds a first-order formula: every quantified variable becomes a
/// constant named after its concept, monadic atoms are dropped, and so are
/// the quantifiers.
///
/// Repeated concepts get numeric suffixes in quantifier order (`boy`,
/// `boy2`, …). A subformula left without any dyadic atom grounds to `⊤`,
/// including under negation.
pub fn ground_fol(fol: &FolFormula) -> Result<AmrFormula, LogicError> {
    let mut concepts: BTreeMap<&str, &str> = BTreeMap::new();
    let mut quantified = Vec::new();
    collect_bindings(fol, &mut concepts, &mut quantified);
    let mut names: BTreeMap<&str, String> = BTreeMap::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    for v in quantified {
        let concept = *concepts.get(v).ok_or_else(|| LogicError::MissingConceptDeclaration(v.to_string()))?;
        let mut name = concept.to_string();
        let mut n = 2;
        while used.contains(&name) {
            name = format!("{concept}{n}");
            n += 1;
        }
        used.insert(name.clone());
        names.insert(v, name);
    }
    ground(fol, &names)
}

fn collect_bindings<'a>(f: &'a FolFormula, concepts: &mut BTreeMap<&'a str, &'a str>, quantified: &mut Vec<&'a str>) {
    match f {
        FolFormula::Exists(v, body) => {
            quantified.push(v);
            collect_bindings(body, concepts, quantified);
        }
        FolFormula::And(parts) => parts.iter().for_each(|p| collect_bindings(p, concepts, quantified)),
        FolFormula::Not(body) => collect_bindings(body, concepts, quantified),
        FolFormula::Monadic { concept, var } => {
            concepts.entry(var).or_insert(concept);
        }
        FolFormula::Dyadic { .. } => {}
    }
}

fn ground(f: &FolFormula, names: &BTreeMap<&str, String>) -> Result<AmrFormula, LogicError> {
    let term = |t: &Term| -> Result<String, LogicError> {
        match t {
            Term::Const(c) => Ok(c.clone()),
            Term::Var(v) => names.get(v.as_str()).cloned().ok_or_else(|| LogicError::UnboundVariable(v.clone())),
        }
    };
    Ok(match f {
        FolFormula::Exists(_, body) => ground(body, names)?,
        FolFormula::And(parts) => {
            let mut grounded = Vec::new();
            for p in parts {
                let g = ground(p, names)?;
                if g != Formula::Top {
                    grounded.push(g);
                }
            }
            Formula::and_all(grounded)
        }
        FolFormula::Not(body) => match ground(body, names)? {
            Formula::Top => Formula::Top,
            g => Formula::not(g),
        },
        FolFormula::Monadic { .. } => Formula::Top,
        FolFormula::Dyadic { role, left, right } => Formula::atom(AmrAtom::new(role.clone(), term(left)?, term(right)?)),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundOptions {
    /// Fold `:mod` leaves into multi-word constants first.
    pub compound_constants: bool,
}

/// Graph to grounded formula in one step.
pub fn ground_graph(graph: &AmrGraph, options: GroundOptions) -> Result<AmrFormula, LogicError> {
    if options.compound_constants {
        ground_fol(&amr_to_fol(&collapse_modifiers(graph))?)
    } else {
        ground_fol(&amr_to_fol(graph)?)
    }
}
