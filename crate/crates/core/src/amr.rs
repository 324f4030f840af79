//! AMR graphs and the PENMAN text format.
//!
//! The supported PENMAN subset covers node declarations, role edges,
//! constant targets (quoted strings, numerals, bare symbols such as `-`)
//! and re-entrant variable references. Alignment markers (`~e.3`) are
//! ignored and comment lines are skipped, except that a `# ::snt` line is
//! kept as the sentence associated with the graph that follows it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// A concept instance, e.g. `(w / want-01)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AmrNode {
    pub variable: String,
    pub concept: String,
    /// Set by `:polarity -` on this node.
    pub negated: bool,
}

impl AmrNode {
    pub fn new(variable: impl Into<String>, concept: impl Into<String>) -> Self {
        AmrNode {
            variable: variable.into(),
            concept: concept.into(),
            negated: false,
        }
    }

    pub fn negated(mut self) -> Self {
        self.negated = true;
        self
    }
}

/// A literal edge target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Constant {
    /// A quoted string, stored without the quotes.
    Str(String),
    Number(String),
    /// A bare symbol that is not a variable, e.g. `-`, `+` or `imperative`.
    Symbol(String),
}

impl Constant {
    /// The constant as it appears inside a grounded atom.
    pub fn text(&self) -> &str {
        match self {
            Constant::Str(s) | Constant::Number(s) | Constant::Symbol(s) => s,
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    if c == '"' || c == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("\"")
            }
            Constant::Number(s) | Constant::Symbol(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Target {
    Node(String),
    Constant(Constant),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AmrEdge {
    /// Lowercase, without the leading `:`.
    pub role: String,
    pub source: String,
    pub target: Target,
}

impl AmrEdge {
    pub fn to_node(role: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        AmrEdge {
            role: role.into(),
            source: source.into(),
            target: Target::Node(target.into()),
        }
    }

    pub fn to_constant(role: impl Into<String>, source: impl Into<String>, constant: Constant) -> Self {
        AmrEdge {
            role: role.into(),
            source: source.into(),
            target: Target::Constant(constant),
        }
    }

    pub fn target_node(&self) -> Option<&str> {
        match &self.target {
            Target::Node(v) => Some(v),
            Target::Constant(_) => None,
        }
    }
}

/// A rooted, labelled, directed acyclic graph.
///
/// Nodes are kept in declaration order and edges in parse order so that
/// serialization and formula construction are deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AmrGraph {
    root: String,
    nodes: Vec<AmrNode>,
    edges: Vec<AmrEdge>,
}

/// A broken [`AmrGraph`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyConcept { variable: String },
    DuplicateVariable { variable: String },
    MissingRoot { variable: String },
    UndefinedVariable { variable: String, edge: AmrEdge },
    UnnormalizedRole { edge: AmrEdge },
    Unreachable { variable: String },
    CycleDetected { variable: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyConcept { variable } => write!(f, "node {variable} has an empty concept"),
            Violation::DuplicateVariable { variable } => write!(f, "variable {variable} is declared more than once"),
            Violation::MissingRoot { variable } => write!(f, "root {variable} is not a declared node"),
            Violation::UndefinedVariable { variable, edge } => {
                write!(f, "edge :{} from {} refers to undeclared variable {variable}", edge.role, edge.source)
            }
            Violation::UnnormalizedRole { edge } => {
                write!(f, "role {:?} on {} is not normalized", edge.role, edge.source)
            }
            Violation::Unreachable { variable } => write!(f, "node {variable} is not reachable from the root"),
            Violation::CycleDetected { variable } => write!(f, "cycle through node {variable}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced parentheses at byte {offset}")]
    UnbalancedParens { offset: usize },
    #[error("undefined variable {variable}")]
    UndefinedVariable { variable: String },
    #[error("duplicate variable {variable}")]
    DuplicateVariable { variable: String },
    #[error("cycle through node {variable}")]
    CycleDetected { variable: String },
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
}

impl AmrGraph {
    /// Assembles a graph without checking it; see [`AmrGraph::validate`].
    pub fn from_parts(root: impl Into<String>, nodes: Vec<AmrNode>, edges: Vec<AmrEdge>) -> Self {
        AmrGraph {
            root: root.into(),
            nodes,
            edges,
        }
    }

    /// Assembles and validates a graph.
    pub fn new(root: impl Into<String>, nodes: Vec<AmrNode>, edges: Vec<AmrEdge>) -> Result<Self, Vec<Violation>> {
        let graph = Self::from_parts(root, nodes, edges);
        let violations = graph.validate();
        if violations.is_empty() {
            Ok(graph)
        } else {
            Err(violations)
        }
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn nodes(&self) -> &[AmrNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[AmrEdge] {
        &self.edges
    }

    pub fn node(&self, variable: &str) -> Option<&AmrNode> {
        self.nodes.iter().find(|n| n.variable == variable)
    }

    /// Outgoing edges of `variable`, in parse order.
    pub fn outgoing<'a>(&'a self, variable: &'a str) -> impl Iterator<Item = &'a AmrEdge> + 'a {
        self.edges.iter().filter(move |e| e.source == variable)
    }

    /// Checks every graph invariant. An empty result means the graph is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut declared = BTreeSet::new();
        for node in &self.nodes {
            if node.concept.trim().is_empty() {
                violations.push(Violation::EmptyConcept {
                    variable: node.variable.clone(),
                });
            }
            if !declared.insert(node.variable.as_str()) {
                violations.push(Violation::DuplicateVariable {
                    variable: node.variable.clone(),
                });
            }
        }
        if !declared.contains(self.root.as_str()) {
            violations.push(Violation::MissingRoot {
                variable: self.root.clone(),
            });
        }
        let mut dangling = false;
        for edge in &self.edges {
            if !is_normalized_role(&edge.role) {
                violations.push(Violation::UnnormalizedRole { edge: edge.clone() });
            }
            if !declared.contains(edge.source.as_str()) {
                dangling = true;
                violations.push(Violation::UndefinedVariable {
                    variable: edge.source.clone(),
                    edge: edge.clone(),
                });
            }
            if let Some(t) = edge.target_node() {
                if !declared.contains(t) {
                    dangling = true;
                    violations.push(Violation::UndefinedVariable {
                        variable: t.to_string(),
                        edge: edge.clone(),
                    });
                }
            }
        }
        if dangling || !declared.contains(self.root.as_str()) {
            return violations;
        }

        // Cycle check over every node, then reachability from the root.
        let children = self.child_map();
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        for node in &self.nodes {
            if let Some(v) = find_cycle(node.variable.as_str(), &children, &mut state) {
                violations.push(Violation::CycleDetected { variable: v.to_string() });
                break;
            }
        }
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![self.root.as_str()];
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                if let Some(cs) = children.get(v) {
                    stack.extend(cs.iter().copied());
                }
            }
        }
        for node in &self.nodes {
            if !seen.contains(node.variable.as_str()) {
                violations.push(Violation::Unreachable {
                    variable: node.variable.clone(),
                });
            }
        }
        violations
    }

    fn child_map(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for edge in &self.edges {
            if let Some(t) = edge.target_node() {
                children.entry(edge.source.as_str()).or_default().push(t);
            }
        }
        children
    }

    /// Same nodes and the same edge multiset, ignoring edge order.
    pub fn is_isomorphic(&self, other: &AmrGraph) -> bool {
        let mut a = self.nodes.clone();
        let mut b = other.nodes.clone();
        a.sort();
        b.sort();
        let mut ea = self.edges.clone();
        let mut eb = other.edges.clone();
        ea.sort();
        eb.sort();
        self.root == other.root && a == b && ea == eb
    }

    /// PENMAN text for this graph; one indented line per role.
    pub fn to_penman(&self) -> String {
        let mut out = String::new();
        let mut printed = BTreeSet::new();
        self.write_node(&self.root, 1, &mut printed, &mut out);
        out
    }

    fn write_node<'a>(&'a self, var: &'a str, depth: usize, printed: &mut BTreeSet<&'a str>, out: &mut String) {
        printed.insert(var);
        let node = self.node(var).expect("valid graph");
        out.push('(');
        out.push_str(var);
        out.push_str(" / ");
        out.push_str(&node.concept);
        for edge in self.outgoing(var) {
            newline(out, depth);
            out.push(':');
            out.push_str(&edge.role);
            out.push(' ');
            match &edge.target {
                Target::Node(t) if !printed.contains(t.as_str()) => self.write_node(t, depth + 1, printed, out),
                Target::Node(t) => out.push_str(t),
                Target::Constant(c) => out.push_str(&c.to_string()),
            }
        }
        if node.negated {
            newline(out, depth);
            out.push_str(":polarity -");
        }
        out.push(')');
    }
}

fn newline(out: &mut String, depth: usize) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn find_cycle<'a>(v: &'a str, children: &BTreeMap<&'a str, Vec<&'a str>>, state: &mut BTreeMap<&'a str, u8>) -> Option<&'a str> {
    // 1 = on stack, 2 = finished
    match state.get(v) {
        Some(1) => return Some(v),
        Some(_) => return None,
        None => {}
    }
    state.insert(v, 1);
    if let Some(cs) = children.get(v) {
        for &c in cs {
            if let Some(found) = find_cycle(c, children, state) {
                return Some(found);
            }
        }
    }
    state.insert(v, 2);
    None
}

fn is_normalized_role(role: &str) -> bool {
    !role.is_empty() && !role.starts_with(':') && role.chars().all(|c| !c.is_uppercase() && !c.is_whitespace())
}

impl fmt::Display for AmrGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_penman())
    }
}

/// One graph from a multi-graph PENMAN file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PenmanEntry {
    /// Text of the `# ::snt` metadata line, when present.
    pub sentence: Option<String>,
    pub graph: AmrGraph,
}

/// Parses a single PENMAN graph.
pub fn parse_penman(text: &str) -> Result<AmrGraph, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let mut parser = Parser { tokens, pos: 0, end: text.len() };
    let raw = parser.parse_node()?;
    if let Some(tok) = parser.tokens.get(parser.pos) {
        return Err(match tok.kind {
            Tok::Close => ParseError::UnbalancedParens { offset: tok.offset },
            _ => ParseError::Syntax {
                offset: tok.offset,
                message: "trailing input after graph".to_string(),
            },
        });
    }
    resolve(raw)
}

/// Parses a file of blank-line separated graphs.
pub fn parse_penman_many(text: &str) -> Result<Vec<PenmanEntry>, ParseError> {
    let mut entries = Vec::new();
    let mut block = String::new();
    let mut sentence = None;
    let mut flush = |block: &mut String, sentence: &mut Option<String>| -> Result<(), ParseError> {
        if !block.trim().is_empty() {
            entries.push(PenmanEntry {
                sentence: sentence.take(),
                graph: parse_penman(block)?,
            });
        }
        block.clear();
        Ok(())
    };
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut block, &mut sentence)?;
        } else if let Some(meta) = trimmed.strip_prefix('#') {
            if let Some(snt) = meta.trim_start().strip_prefix("::snt") {
                sentence = Some(snt.trim().to_string());
            }
        } else {
            block.push_str(line);
            block.push('\n');
        }
    }
    flush(&mut block, &mut sentence)?;
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Str(String),
    Symbol(String),
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let mut line_start = true;
    while i < bytes.len() {
        let (offset, c) = bytes[i];
        if c == '\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' && line_start {
            while i < bytes.len() && bytes[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        line_start = false;
        match c {
            '(' => {
                tokens.push(Token { kind: Tok::Open, offset });
                i += 1;
            }
            ')' => {
                tokens.push(Token { kind: Tok::Close, offset });
                i += 1;
            }
            '/' => {
                tokens.push(Token { kind: Tok::Slash, offset });
                i += 1;
            }
            '"' => {
                let mut value = String::new();
                i += 1;
                let mut closed = false;
                while i < bytes.len() {
                    let ch = bytes[i].1;
                    if ch == '\\' && i + 1 < bytes.len() {
                        value.push(bytes[i + 1].1);
                        i += 2;
                        continue;
                    }
                    i += 1;
                    if ch == '"' {
                        closed = true;
                        break;
                    }
                    value.push(ch);
                }
                if !closed {
                    return Err(ParseError::Syntax {
                        offset,
                        message: "unterminated string".to_string(),
                    });
                }
                skip_alignment(&bytes, &mut i);
                tokens.push(Token { kind: Tok::Str(value), offset });
            }
            _ => {
                let mut word = String::new();
                while i < bytes.len() {
                    let ch = bytes[i].1;
                    if ch.is_whitespace() || matches!(ch, '(' | ')' | '"') || (ch == '/' && !word.is_empty() && !word.starts_with(':')) {
                        break;
                    }
                    if ch == '~' {
                        skip_alignment(&bytes, &mut i);
                        break;
                    }
                    word.push(ch);
                    i += 1;
                }
                let kind = match word.strip_prefix(':') {
                    Some(role) => {
                        if role.is_empty() {
                            return Err(ParseError::Syntax {
                                offset,
                                message: "empty role".to_string(),
                            });
                        }
                        Tok::Role(role.to_lowercase())
                    }
                    None => Tok::Symbol(word),
                };
                tokens.push(Token { kind, offset });
            }
        }
    }
    Ok(tokens)
}

fn skip_alignment(bytes: &[(usize, char)], i: &mut usize) {
    if *i < bytes.len() && bytes[*i].1 == '~' {
        while *i < bytes.len() && !bytes[*i].1.is_whitespace() && !matches!(bytes[*i].1, '(' | ')') {
            *i += 1;
        }
    }
}

enum RawTarget {
    Node(RawNode),
    Str(String),
    Symbol(String),
}

struct RawNode {
    variable: String,
    concept: String,
    edges: Vec<(String, RawTarget)>,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn next(&mut self) -> Result<Token, ParseError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or(ParseError::UnbalancedParens { offset: self.end })?;
        self.pos += 1;
        Ok(tok)
    }

    fn parse_node(&mut self) -> Result<RawNode, ParseError> {
        let open = self.next()?;
        if open.kind != Tok::Open {
            return Err(ParseError::Syntax {
                offset: open.offset,
                message: "expected '('".to_string(),
            });
        }
        let var = self.next()?;
        let variable = match var.kind {
            Tok::Symbol(s) => s,
            _ => {
                return Err(ParseError::Syntax {
                    offset: var.offset,
                    message: "expected a variable".to_string(),
                })
            }
        };
        let slash = self.next()?;
        if slash.kind != Tok::Slash {
            return Err(ParseError::Syntax {
                offset: slash.offset,
                message: format!("expected '/' after variable {variable}"),
            });
        }
        let concept_tok = self.next()?;
        let concept = match concept_tok.kind {
            Tok::Symbol(s) | Tok::Str(s) => s,
            _ => {
                return Err(ParseError::Syntax {
                    offset: concept_tok.offset,
                    message: format!("expected a concept for {variable}"),
                })
            }
        };
        let mut edges = Vec::new();
        loop {
            let tok = self.next()?;
            match tok.kind {
                Tok::Close => break,
                Tok::Role(role) => {
                    let peek = self.tokens.get(self.pos).cloned().ok_or(ParseError::UnbalancedParens { offset: self.end })?;
                    let target = match peek.kind {
                        Tok::Open => RawTarget::Node(self.parse_node()?),
                        Tok::Str(s) => {
                            self.pos += 1;
                            RawTarget::Str(s)
                        }
                        Tok::Symbol(s) => {
                            self.pos += 1;
                            RawTarget::Symbol(s)
                        }
                        Tok::Close => {
                            return Err(ParseError::Syntax {
                                offset: peek.offset,
                                message: format!("role :{role} has no target"),
                            })
                        }
                        _ => {
                            return Err(ParseError::Syntax {
                                offset: peek.offset,
                                message: format!("unexpected token after :{role}"),
                            })
                        }
                    };
                    edges.push((role, target));
                }
                _ => {
                    return Err(ParseError::Syntax {
                        offset: tok.offset,
                        message: "expected a role or ')'".to_string(),
                    })
                }
            }
        }
        Ok(RawNode { variable, concept, edges })
    }
}

/// Bare symbols shaped like AMR variables (a letter followed by digits).
fn looks_like_variable(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_digit())
}

fn looks_like_number(s: &str) -> bool {
    let digits = s.strip_prefix('-').or_else(|| s.strip_prefix('+')).unwrap_or(s);
    !digits.is_empty() && digits.chars().any(|c| c.is_ascii_digit()) && digits.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '/')
}

fn resolve(root: RawNode) -> Result<AmrGraph, ParseError> {
    let mut declared = BTreeSet::new();
    collect_declared(&root, &mut declared)?;
    let root_var = root.variable.clone();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    flatten(root, &declared, &mut nodes, &mut edges)?;
    let graph = AmrGraph::from_parts(root_var, nodes, edges);
    match graph.validate().into_iter().next() {
        None => Ok(graph),
        Some(Violation::CycleDetected { variable }) => Err(ParseError::CycleDetected { variable }),
        Some(Violation::DuplicateVariable { variable }) => Err(ParseError::DuplicateVariable { variable }),
        Some(Violation::UndefinedVariable { variable, .. }) => Err(ParseError::UndefinedVariable { variable }),
        Some(other) => Err(ParseError::Invalid(other.to_string())),
    }
}

fn collect_declared(node: &RawNode, declared: &mut BTreeSet<String>) -> Result<(), ParseError> {
    if !declared.insert(node.variable.clone()) {
        return Err(ParseError::DuplicateVariable {
            variable: node.variable.clone(),
        });
    }
    for (_, target) in &node.edges {
        if let RawTarget::Node(child) = target {
            collect_declared(child, declared)?;
        }
    }
    Ok(())
}

fn flatten(node: RawNode, declared: &BTreeSet<String>, nodes: &mut Vec<AmrNode>, edges: &mut Vec<AmrEdge>) -> Result<(), ParseError> {
    let index = nodes.len();
    nodes.push(AmrNode::new(node.variable.clone(), node.concept));
    for (role, target) in node.edges {
        let target = match target {
            RawTarget::Symbol(s) if role == "polarity" && s == "-" => {
                nodes[index].negated = true;
                continue;
            }
            RawTarget::Node(child) => {
                let var = child.variable.clone();
                edges.push(AmrEdge::to_node(role, node.variable.clone(), var));
                flatten(child, declared, nodes, edges)?;
                continue;
            }
            RawTarget::Str(s) => Target::Constant(Constant::Str(s)),
            RawTarget::Symbol(s) if declared.contains(&s) => Target::Node(s),
            RawTarget::Symbol(s) if looks_like_number(&s) => Target::Constant(Constant::Number(s)),
            RawTarget::Symbol(s) if looks_like_variable(&s) => return Err(ParseError::UndefinedVariable { variable: s }),
            RawTarget::Symbol(s) => Target::Constant(Constant::Symbol(s)),
        };
        edges.push(AmrEdge {
            role,
            source: node.variable.clone(),
            target,
        });
    }
    Ok(())
}
