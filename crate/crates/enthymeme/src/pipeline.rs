//! Per-instance decoding and dataset evaluation.
//!
//! Decoding runs in two phases. [`prepare`] does everything that does not
//! depend on thresholds: it parses and grounds every sentence and scores
//! every claim-atom / premise-atom pair with the providers. [`Prepared::decide`]
//! then thresholds the scores, builds the mapping and classifies. Sweeps
//! prepare once and decide many times.

use std::collections::{BTreeMap, HashMap};

use enthymeme_core::reason::{Dpll, ReasoningTrace};
use enthymeme_core::relax::{
    build_mapping_with, ConflictError, ConflictPolicy, ContradictEdge, Mapping, RelationSet, ScoreTable, TemplateRegistry,
    UnmappedAtom,
};
use enthymeme_core::{
    ground_graph, parse_penman, AbstractFormula, AmrFormula, BinaryLabel, Confusion, Formula, GroundOptions, LogicError,
    Metrics, NliScores, ParseError, Reasoner, Verdict, VerdictKind,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{BinaryInstance, StepType};
use crate::providers::{ProviderError, Providers};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tau_m: f64,
    pub tau_c: f64,
    pub step_type: StepType,
    pub seed: u64,
    pub compound_constants: bool,
    pub conflict_policy: ConflictPolicy,
    pub clause_budget: usize,
    /// Drop errored instances from the metric denominators instead of
    /// counting them as wrong.
    pub exclude_errored: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tau_m: 0.6,
            tau_c: 80.0,
            step_type: StepType::Original,
            seed: 0,
            compound_constants: false,
            conflict_policy: ConflictPolicy::Error,
            clause_budget: enthymeme_core::cnf::DEFAULT_CLAUSE_BUDGET,
            exclude_errored: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.tau_m) {
            return Err(format!("tau_m {} outside [0, 1]", self.tau_m));
        }
        if !(0.0..=100.0).contains(&self.tau_c) {
            return Err(format!("tau_c {} outside [0, 100]", self.tau_c));
        }
        Ok(())
    }

    pub fn ground_options(&self) -> GroundOptions {
        GroundOptions {
            compound_constants: self.compound_constants,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("no AMR for {sentence:?}: {source}")]
    AmrUnavailable { sentence: String, source: ProviderError },
    #[error("AMR for {sentence:?} does not parse: {source}")]
    AmrSyntax { sentence: String, source: ParseError },
    #[error("grounding {sentence:?}: {source}")]
    Logic { sentence: String, source: LogicError },
    #[error("scoring: {0}")]
    Provider(#[from] ProviderError),
    #[error("mapping: {0}")]
    Conflict(#[from] ConflictError),
    #[error("translation: {0}")]
    Unmapped(#[from] UnmappedAtom),
}

impl StageError {
    pub fn stage(&self) -> &'static str {
        match self {
            StageError::AmrUnavailable { .. } | StageError::AmrSyntax { .. } => "parse",
            StageError::Logic { .. } => "ground",
            StageError::Provider(_) => "relax",
            StageError::Conflict(_) => "mapping",
            StageError::Unmapped(_) => "translate",
        }
    }

    /// Whether a model or network failure caused this error.
    pub fn is_provider_failure(&self) -> bool {
        matches!(self, StageError::Provider(_) | StageError::AmrUnavailable { .. })
    }
}

/// PENMAN for `sentence`: the instance's own AMR first, then the parser.
pub fn penman_for(sentence: &str, amr: &BTreeMap<String, String>, providers: &Providers) -> Result<String, StageError> {
    if let Some(p) = amr.get(sentence) {
        return Ok(p.clone());
    }
    match &providers.parser {
        Some(parser) => parser.parse(sentence).map_err(|source| StageError::AmrUnavailable {
            sentence: sentence.to_string(),
            source,
        }),
        None => Err(StageError::AmrUnavailable {
            sentence: sentence.to_string(),
            source: ProviderError::MissingFixture("no parser configured".into()),
        }),
    }
}

pub fn sentence_formula(sentence: &str, penman: &str, options: GroundOptions) -> Result<AmrFormula, StageError> {
    let graph = parse_penman(penman).map_err(|source| StageError::AmrSyntax {
        sentence: sentence.to_string(),
        source,
    })?;
    ground_graph(&graph, options).map_err(|source| StageError::Logic {
        sentence: sentence.to_string(),
        source,
    })
}

/// An instance with all threshold-independent work done.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub id: String,
    pub gold: BinaryLabel,
    /// Premise, implicit premises, then the claim.
    pub sentences: Vec<String>,
    pub penman: Vec<String>,
    /// One formula per premise sentence (explicit and implicit).
    pub premise_formulas: Vec<AmrFormula>,
    pub claim: AmrFormula,
    /// The conjunction of `premise_formulas`, `⊤` when there are none.
    pub phi: AmrFormula,
    pub table: ScoreTable,
}

/// Everything known about an instance whose preparation failed.
#[derive(Debug)]
pub struct Failed {
    pub id: String,
    pub gold: BinaryLabel,
    pub sentences: Vec<String>,
    pub error: StageError,
}

/// Scores every pair of verbalized atoms. Provider calls are made in
/// parallel and the results handed to the table in a fixed order.
pub fn score_pairs(
    phi: &AmrFormula,
    claim: &AmrFormula,
    registry: &TemplateRegistry,
    providers: &Providers,
) -> Result<ScoreTable, ProviderError> {
    let premise_atoms = phi.atoms();
    let pairs: Vec<(String, String)> = claim
        .atoms()
        .iter()
        .flat_map(|c| premise_atoms.iter().map(move |p| (registry.instantiate(c), registry.instantiate(p))))
        .collect();
    let scored: Vec<((String, String), (f64, NliScores))> = pairs
        .into_par_iter()
        .map(|(c, p)| {
            let sim = providers.similarity.similarity(&c, &p)?;
            let nli = providers.nli.nli(&c, &p)?;
            Ok(((c, p), (sim, nli)))
        })
        .collect::<Result<_, ProviderError>>()?;
    let lookup: HashMap<(String, String), (f64, NliScores)> = scored.into_iter().collect();
    let get = |a: &str, b: &str| lookup[&(a.to_string(), b.to_string())];
    let mut sim = |a: &str, b: &str| Ok::<_, ProviderError>(get(a, b).0);
    let mut nli = |a: &str, b: &str| Ok::<_, ProviderError>(get(a, b).1);
    ScoreTable::score(phi, claim, registry, Some(&mut sim), Some(&mut nli))
}

pub fn prepare(
    instance: &BinaryInstance,
    config: &RunConfig,
    registry: &TemplateRegistry,
    providers: &Providers,
) -> Result<Prepared, Failed> {
    let mut sentences = vec![instance.premise.clone()];
    sentences.extend(instance.implicit.iter().cloned());
    sentences.push(instance.claim.clone());
    let fail = |error| Failed {
        id: instance.id.clone(),
        gold: instance.gold,
        sentences: sentences.clone(),
        error,
    };

    let mut penman = Vec::with_capacity(sentences.len());
    let mut formulas = Vec::with_capacity(sentences.len());
    for s in &sentences {
        let p = penman_for(s, &instance.amr, providers).map_err(fail)?;
        formulas.push(sentence_formula(s, &p, config.ground_options()).map_err(fail)?);
        penman.push(p);
    }
    let claim = formulas.pop().expect("claim formula");
    let phi = Formula::and_all(formulas.iter().cloned());
    let table = score_pairs(&phi, &claim, registry, providers).map_err(|e| fail(e.into()))?;
    Ok(Prepared {
        id: instance.id.clone(),
        gold: instance.gold,
        sentences,
        penman,
        premise_formulas: formulas,
        claim,
        phi,
        table,
    })
}

/// The outcome of thresholding, mapping and classifying one instance.
#[derive(Debug, Clone)]
pub struct Decision {
    pub relations: RelationSet,
    pub mapping: Mapping,
    pub phi: AbstractFormula,
    pub psi: AbstractFormula,
    pub verdict: Verdict,
    pub reasoning: ReasoningTrace,
}

impl Prepared {
    pub fn decide(&self, config: &RunConfig) -> Result<Decision, StageError> {
        let relations = self.table.relations(config.tau_m, config.tau_c, config.seed);
        let mut formulas = self.premise_formulas.clone();
        formulas.push(self.claim.clone());
        let mapping = build_mapping_with(&formulas, &relations, config.conflict_policy)?;
        for edge in &mapping.dropped {
            log::warn!("{}: dropped conflicting {} ⊥ {}", self.id, edge.claim_atom, edge.premise_atom);
        }
        let phi = mapping.translate(&self.phi)?;
        let psi = mapping.translate(&self.claim)?;
        let reasoner = Reasoner::new(Dpll, config.clause_budget);
        let (verdict, reasoning) = reasoner.classify_traced(&phi, &psi);
        Ok(Decision {
            relations,
            mapping,
            phi,
            psi,
            verdict,
            reasoning,
        })
    }

    pub fn trace(&self, config: &RunConfig) -> DecodingTrace {
        let mut trace = DecodingTrace {
            id: self.id.clone(),
            gold: self.gold,
            predicted: None,
            verdict: None,
            sentences: self.sentences.clone(),
            penman: self.penman.clone(),
            premise_formulas: self.premise_formulas.iter().map(ToString::to_string).collect(),
            claim_formula: Some(self.claim.to_string()),
            pooled_premise: Some(self.phi.to_string()),
            relations: None,
            dropped_contradicts: Vec::new(),
            mapping: Vec::new(),
            abstract_premise: None,
            abstract_claim: None,
            reasoning: None,
            error: None,
        };
        match self.decide(config) {
            Ok(d) => {
                trace.predicted = Some(predicted_label(&d.verdict));
                trace.verdict = Some(d.verdict);
                trace.mapping = d
                    .mapping
                    .assignment()
                    .iter()
                    .map(|(atom, lit)| MappingEntry {
                        atom: atom.to_string(),
                        literal: lit.to_string(),
                    })
                    .collect();
                trace.dropped_contradicts = d.mapping.dropped.clone();
                trace.relations = Some(d.relations);
                trace.abstract_premise = Some(d.phi.to_string());
                trace.abstract_claim = Some(d.psi.to_string());
                trace.reasoning = Some(d.reasoning);
            }
            Err(e) => trace.error = Some(TraceError::from(&e)),
        }
        trace
    }
}

/// Contradiction and neutral both count as non-entailment.
pub fn predicted_label(verdict: &Verdict) -> BinaryLabel {
    match verdict.kind {
        VerdictKind::Entailment => BinaryLabel::Entailment,
        VerdictKind::Contradiction | VerdictKind::Neutral => BinaryLabel::NonEntailment,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub atom: String,
    pub literal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceError {
    pub stage: String,
    pub message: String,
    pub provider_failure: bool,
}

impl From<&StageError> for TraceError {
    fn from(e: &StageError) -> Self {
        TraceError {
            stage: e.stage().to_string(),
            message: e.to_string(),
            provider_failure: e.is_provider_failure(),
        }
    }
}

/// Everything that went into one decision, or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingTrace {
    pub id: String,
    pub gold: BinaryLabel,
    /// `None` when the instance errored.
    pub predicted: Option<BinaryLabel>,
    pub verdict: Option<Verdict>,
    pub sentences: Vec<String>,
    pub penman: Vec<String>,
    pub premise_formulas: Vec<String>,
    pub claim_formula: Option<String>,
    pub pooled_premise: Option<String>,
    pub relations: Option<RelationSet>,
    pub dropped_contradicts: Vec<ContradictEdge>,
    pub mapping: Vec<MappingEntry>,
    pub abstract_premise: Option<String>,
    pub abstract_claim: Option<String>,
    pub reasoning: Option<ReasoningTrace>,
    pub error: Option<TraceError>,
}

impl DecodingTrace {
    pub fn errored(&self) -> bool {
        self.error.is_some()
    }

    fn from_failure(f: &Failed) -> Self {
        DecodingTrace {
            id: f.id.clone(),
            gold: f.gold,
            predicted: None,
            verdict: None,
            sentences: f.sentences.clone(),
            penman: Vec::new(),
            premise_formulas: Vec::new(),
            claim_formula: None,
            pooled_premise: None,
            relations: None,
            dropped_contradicts: Vec::new(),
            mapping: Vec::new(),
            abstract_premise: None,
            abstract_claim: None,
            reasoning: None,
            error: Some(TraceError::from(&f.error)),
        }
    }

    /// One tab-separated line: id, gold class, predicted class (or `-`),
    /// verdict (or `error`).
    pub fn label_line(&self) -> String {
        let class = |l: BinaryLabel| l.class().to_string();
        let verdict = match (&self.verdict, &self.error) {
            (Some(v), _) => match v.kind {
                VerdictKind::Entailment => "entailment".to_string(),
                VerdictKind::Contradiction if v.premise_inconsistent => "contradiction*".to_string(),
                VerdictKind::Contradiction => "contradiction".to_string(),
                VerdictKind::Neutral => "neutral".to_string(),
            },
            (None, _) => "error".to_string(),
        };
        format!(
            "{}\t{}\t{}\t{}",
            self.id,
            class(self.gold),
            self.predicted.map_or("-".to_string(), class),
            verdict
        )
    }
}

/// A prepared instance or the failure that stopped its preparation.
pub type Preparation = Result<Prepared, Failed>;

pub fn prepare_all(instances: &[BinaryInstance], config: &RunConfig, providers: &Providers) -> Vec<Preparation> {
    let registry = TemplateRegistry::default();
    instances.par_iter().map(|i| prepare(i, config, &registry, providers)).collect()
}

pub fn decide_all(prepared: &[Preparation], config: &RunConfig) -> Vec<DecodingTrace> {
    prepared
        .par_iter()
        .map(|p| match p {
            Ok(p) => p.trace(config),
            Err(f) => DecodingTrace::from_failure(f),
        })
        .collect()
}

pub fn run_instance(instance: &BinaryInstance, config: &RunConfig, providers: &Providers) -> DecodingTrace {
    let registry = TemplateRegistry::default();
    match prepare(instance, config, &registry, providers) {
        Ok(p) => p.trace(config),
        Err(f) => DecodingTrace::from_failure(&f),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub instances: usize,
    pub errored: usize,
    pub excluded_errored: bool,
    pub confusion: Confusion,
    pub metrics: Metrics,
}

/// Metrics over `traces`. Errored instances count as wrong predictions
/// unless `exclude_errored` is set.
pub fn report(traces: &[DecodingTrace], exclude_errored: bool) -> EvalReport {
    let mut confusion = Confusion::default();
    let mut errored = 0;
    for t in traces {
        match t.predicted {
            Some(p) => confusion.record(t.gold, p),
            None => {
                errored += 1;
                if !exclude_errored {
                    confusion.record(t.gold, t.gold.flip());
                }
            }
        }
    }
    EvalReport {
        instances: traces.len(),
        errored,
        excluded_errored: exclude_errored,
        metrics: confusion.metrics(),
        confusion,
    }
}

pub fn evaluate(instances: &[BinaryInstance], config: &RunConfig, providers: &Providers) -> (EvalReport, Vec<DecodingTrace>) {
    let prepared = prepare_all(instances, config, providers);
    let traces = decide_all(&prepared, config);
    (report(&traces, config.exclude_errored), traces)
}
