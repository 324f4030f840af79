use std::collections::BTreeMap;
use std::path::PathBuf;

use enthymeme::dataset::{load_dataset, Format};
use enthymeme::graph::{build_argument_graph, export_dot, ArcLabel, ArgumentGraph};
use enthymeme::pipeline::RunConfig;
use enthymeme::providers::stub::Fixtures;
use enthymeme_core::{AbstractFormula, Letter};
use graphviz_rust::dot_structures::{Edge, Graph, Stmt};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Truth-table entailment and contradiction over every letter mentioned.
fn truth_table(phi: &AbstractFormula, psi: &AbstractFormula) -> (bool, bool) {
    let n = phi.atoms().into_iter().chain(psi.atoms()).map(|l| l.0).max().unwrap_or(0);
    assert!(n <= 12, "{n} letters");
    let (mut entails, mut contradicts) = (true, true);
    for bits in 0u32..1 << n {
        let v = |l: &Letter| bits >> (l.0 - 1) & 1 == 1;
        if phi.eval(&v) {
            entails &= psi.eval(&v);
            contradicts &= !psi.eval(&v);
        }
    }
    (entails, contradicts)
}

fn reverify(graph: &ArgumentGraph) {
    for arc in graph.arcs.iter().filter(|a| a.label != ArcLabel::Combine) {
        let phi: AbstractFormula = arc.abstract_premise.as_deref().unwrap().parse().unwrap();
        let psi: AbstractFormula = arc.abstract_claim.as_deref().unwrap().parse().unwrap();
        let (entails, contradicts) = truth_table(&phi, &psi);
        match arc.label {
            ArcLabel::Support => assert!(entails, "{phi} / {psi}"),
            ArcLabel::Contradict => assert!(contradicts, "{phi} / {psi}"),
            _ => assert!(!entails && !contradicts, "{phi} / {psi}"),
        }
    }
}

fn edges(g: &Graph) -> usize {
    match g {
        Graph::DiGraph { stmts, .. } | Graph::Graph { stmts, .. } => {
            stmts.iter().filter(|s| matches!(s, Stmt::Edge(Edge { .. }))).count()
        }
    }
}

fn spiderweb() -> ArgumentGraph {
    let fixtures = Fixtures::load(&fixture("spiderweb.json")).unwrap();
    let config = RunConfig {
        compound_constants: true,
        ..RunConfig::default()
    };
    build_argument_graph(
        "The spiderweb is torn.",
        &[
            "Torn webs result from trapped prey escaping.".into(),
            "Small insect fled.".into(),
            "Wind tears a spiderweb.".into(),
        ],
        "A large insect escaped recently.",
        &BTreeMap::new(),
        &config,
        &fixtures.providers(),
    )
    .unwrap()
}

#[test]
fn spiderweb_dot_has_three_arc_classes() {
    let graph = spiderweb();
    reverify(&graph);
    let dot = export_dot(&graph);
    assert_eq!(dot, export_dot(&spiderweb()));
    let parsed = graphviz_rust::parse(&dot).unwrap();
    // Two combine arcs per implicit premise plus four verdict arcs.
    assert_eq!(edges(&parsed), 10);
    for colour in ["blue", "red", "green", "black"] {
        assert!(dot.contains(&format!("color={colour}")), "{colour} missing");
    }
    assert_eq!(graph.nodes.len(), 1 + 3 + 3 + 1);
}

#[test]
fn graphs_over_the_corpus_reverify() {
    let fixtures = Fixtures::load(&fixture("mini_fixtures.json")).unwrap();
    let providers = fixtures.providers();
    let items = load_dataset(&fixture("mini_corpus.jsonl"), Format::Jsonl).unwrap().items;
    let mut labels = std::collections::BTreeSet::new();
    for item in &items {
        let mut implicit = item.helpful["3"].clone();
        implicit.extend(item.unhelpful["original"].iter().cloned());
        for tau_m in [0.5, 0.6, 0.8] {
            let config = RunConfig { tau_m, ..RunConfig::default() };
            let graph = build_argument_graph(&item.premise, &implicit, &item.claim, &item.amr, &config, &providers).unwrap();
            reverify(&graph);
            labels.extend(graph.arcs.iter().map(|a| a.label.name()));
            graphviz_rust::parse(&export_dot(&graph)).unwrap();
        }
    }
    assert_eq!(labels.len(), 4);
}

#[test]
fn quotes_and_backslashes_survive_export() {
    let amr: BTreeMap<String, String> = [
        (r#"He said "go\stop"."#.to_string(), "(s / say-01 :arg0 (h / he))".to_string()),
        ("He left.".to_string(), "(l / leave-11 :arg0 (h / he))".to_string()),
    ]
    .into_iter()
    .collect();
    let providers = Fixtures::default().providers();
    let graph =
        build_argument_graph(r#"He said "go\stop"."#, &[], "He left.", &amr, &RunConfig::default(), &providers).unwrap();
    let dot = export_dot(&graph);
    assert_eq!(graph.nodes.len(), 2);
    let parsed = graphviz_rust::parse(&dot).unwrap();
    assert_eq!(edges(&parsed), 1);
}
