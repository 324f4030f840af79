//! Argument graphs: which premise combinations support, contradict or stay
//! neutral to a claim, with DOT export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use enthymeme_core::relax::TemplateRegistry;
use enthymeme_core::{BinaryLabel, Verdict, VerdictKind};
use serde::{Deserialize, Serialize};

use crate::dataset::BinaryInstance;
use crate::pipeline::{penman_for, prepare, sentence_formula, RunConfig, StageError};
use crate::providers::Providers;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Premise,
    Implicit,
    Combination,
    Claim,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgNode {
    pub id: String,
    pub kind: NodeKind,
    pub text: String,
    pub formula: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcLabel {
    Support,
    Contradict,
    Neutral,
    /// Premise or implicit premise feeding a combination node.
    Combine,
}

impl ArcLabel {
    pub fn from_verdict(v: &Verdict) -> Self {
        match v.kind {
            VerdictKind::Entailment => ArcLabel::Support,
            VerdictKind::Contradiction => ArcLabel::Contradict,
            VerdictKind::Neutral => ArcLabel::Neutral,
        }
    }

    pub fn colour(self) -> &'static str {
        match self {
            ArcLabel::Support => "blue",
            ArcLabel::Contradict => "red",
            ArcLabel::Neutral => "green",
            ArcLabel::Combine => "black",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ArcLabel::Support => "Support",
            ArcLabel::Contradict => "Contradict",
            ArcLabel::Neutral => "Neutral",
            ArcLabel::Combine => "Combine",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgArc {
    pub from: String,
    pub to: String,
    pub label: ArcLabel,
    /// `claim ≃ premise (score)` lines behind the label.
    pub matches: Vec<String>,
    /// `claim ⊥ premise (score)` lines behind the label.
    pub contradicts: Vec<String>,
    pub verdict: Option<Verdict>,
    /// The translated formulas the verdict was decided on.
    pub abstract_premise: Option<String>,
    pub abstract_claim: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArgumentGraph {
    pub nodes: Vec<ArgNode>,
    pub arcs: Vec<ArgArc>,
}

impl ArgumentGraph {
    pub fn node(&self, id: &str) -> Option<&ArgNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// The arc from `from` to the claim.
    pub fn verdict_arc(&self, from: &str) -> Option<&ArgArc> {
        self.arcs.iter().find(|a| a.from == from && a.to == "claim")
    }
}

/// Decodes the premise alone and the premise with each implicit premise in
/// turn against the claim.
pub fn build_argument_graph(
    premise: &str,
    implicit: &[String],
    claim: &str,
    amr: &BTreeMap<String, String>,
    config: &RunConfig,
    providers: &Providers,
) -> Result<ArgumentGraph, StageError> {
    let registry = TemplateRegistry::default();
    let options = config.ground_options();
    let formula_of = |s: &str| -> Result<String, StageError> {
        let penman = penman_for(s, amr, providers)?;
        Ok(sentence_formula(s, &penman, options)?.to_string())
    };
    let mut graph = ArgumentGraph::default();
    graph.nodes.push(ArgNode {
        id: "premise".into(),
        kind: NodeKind::Premise,
        text: premise.into(),
        formula: formula_of(premise)?,
    });
    for (i, s) in implicit.iter().enumerate() {
        graph.nodes.push(ArgNode {
            id: format!("implicit_{}", i + 1),
            kind: NodeKind::Implicit,
            text: s.clone(),
            formula: formula_of(s)?,
        });
    }

    let decode = |from: String, implicit: Vec<String>| -> Result<(ArgArc, String), StageError> {
        let instance = BinaryInstance {
            id: from.clone(),
            premise: premise.into(),
            implicit,
            claim: claim.into(),
            gold: BinaryLabel::Entailment,
            amr: amr.clone(),
        };
        let prepared = prepare(&instance, config, &registry, providers).map_err(|f| f.error)?;
        let d = prepared.decide(config)?;
        let arc = ArgArc {
            from,
            to: "claim".into(),
            label: ArcLabel::from_verdict(&d.verdict),
            matches: d
                .relations
                .matches
                .iter()
                .map(|m| format!("{} ≃ {} ({})", m.claim_atom, m.premise_atom, m.score))
                .collect(),
            contradicts: d
                .relations
                .contradicts
                .iter()
                .filter(|c| !d.mapping.dropped.contains(c))
                .map(|c| format!("{} ⊥ {} ({})", c.claim_atom, c.premise_atom, c.con_score))
                .collect(),
            verdict: Some(d.verdict),
            abstract_premise: Some(d.phi.to_string()),
            abstract_claim: Some(d.psi.to_string()),
        };
        Ok((arc, prepared.phi.to_string()))
    };

    let mut verdict_arcs = Vec::new();
    for (i, s) in implicit.iter().enumerate() {
        let id = format!("combination_{}", i + 1);
        let (arc, formula) = decode(id.clone(), vec![s.clone()])?;
        graph.nodes.push(ArgNode {
            id: id.clone(),
            kind: NodeKind::Combination,
            text: format!("Premise + Implicit Premise {}", i + 1),
            formula,
        });
        for from in ["premise".to_string(), format!("implicit_{}", i + 1)] {
            graph.arcs.push(ArgArc {
                from,
                to: id.clone(),
                label: ArcLabel::Combine,
                matches: Vec::new(),
                contradicts: Vec::new(),
                verdict: None,
                abstract_premise: None,
                abstract_claim: None,
            });
        }
        verdict_arcs.push(arc);
    }
    let (premise_arc, _) = decode("premise".into(), Vec::new())?;
    verdict_arcs.push(premise_arc);
    graph.nodes.push(ArgNode {
        id: "claim".into(),
        kind: NodeKind::Claim,
        text: claim.into(),
        formula: formula_of(claim)?,
    });
    graph.arcs.extend(verdict_arcs);
    Ok(graph)
}

/// A double-quoted DOT string.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn node_title(n: &ArgNode) -> String {
    match n.kind {
        NodeKind::Premise => format!("Premise\n{}", n.text),
        NodeKind::Implicit => format!("Implicit Premise {}\n{}", n.id.trim_start_matches("implicit_"), n.text),
        NodeKind::Combination => n.text.clone(),
        NodeKind::Claim => format!("Claim\n{}", n.text),
    }
}

pub fn export_dot(graph: &ArgumentGraph) -> String {
    let mut s = String::new();
    s.push_str("digraph argument {\n  rankdir=LR;\n  node [shape=box, style=rounded];\n");
    for n in &graph.nodes {
        let shape = if n.kind == NodeKind::Combination { ", shape=ellipse" } else { "" };
        let _ = writeln!(
            s,
            "  {} [label={}, tooltip={}{shape}];",
            n.id,
            quote(&node_title(n)),
            quote(&n.formula)
        );
    }
    for a in &graph.arcs {
        let colour = a.label.colour();
        if a.label == ArcLabel::Combine {
            let _ = writeln!(s, "  {} -> {} [color={colour}];", a.from, a.to);
            continue;
        }
        let mut tip = String::new();
        if let (Some(p), Some(c)) = (&a.abstract_premise, &a.abstract_claim) {
            let _ = writeln!(tip, "φ = {p}\nψ = {c}");
        }
        for line in a.matches.iter().chain(&a.contradicts) {
            let _ = writeln!(tip, "{line}");
        }
        let _ = writeln!(
            s,
            "  {} -> {} [label={}, color={colour}, fontcolor={colour}, tooltip={}];",
            a.from,
            a.to,
            quote(a.label.name()),
            quote(tip.trim_end())
        );
    }
    s.push_str("}\n");
    s
}
