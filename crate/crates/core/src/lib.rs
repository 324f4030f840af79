//! Core algorithms for decoding enthymemes with AMR and propositional
//! logic.
//!
//! The pipeline runs PENMAN text through [`amr::parse_penman`], translates
//! the graph into an existential first-order formula ([`fol::amr_to_fol`]),
//! grounds it into an [`AmrFormula`], relaxes atoms into propositional
//! letters using similarity and contradiction scores ([`relax`]), and
//! decides entailment with a DPLL solver ([`reason`]).
//!
//! The crate is `no_std` and needs only `alloc`. Model access, caching and
//! file formats live in the `enthymeme` crate.

#![no_std]

extern crate alloc;

pub mod amr;
pub mod cnf;
pub mod fol;
pub mod formula;
pub mod metrics;
pub mod reason;
pub mod relax;
pub mod scores;

pub use amr::{parse_penman, parse_penman_many, AmrEdge, AmrGraph, AmrNode, ParseError};
pub use cnf::{to_cnf, Cnf, Lit};
pub use fol::{amr_to_fol, ground_fol, ground_graph, FolFormula, GroundOptions, LogicError};
pub use formula::{AbstractFormula, AmrAtom, AmrFormula, Formula, Letter, Skeleton};
pub use metrics::{BinaryLabel, Confusion, Metrics};
pub use reason::{classify, contradicts, entails, sat, Reasoner, SatResult, Verdict, VerdictKind};
pub use scores::{cosine_similarity, nli_label, EmbeddingVector, NliOutcome, NliScores};
