//! Relaxation of AMR formulas: template verbalization, the `≃`/`⊥`
//! relations, and the atom-to-letter mapping.

pub mod mapping;
pub mod relations;
pub mod template;

pub use mapping::{build_mapping, build_mapping_with, translate, ConflictError, ConflictPolicy, Mapping, SignedLetter, UnmappedAtom};
pub use relations::{compute_contradicts, compute_matches, ContradictEdge, MatchEdge, PairScore, RelationSet, ScoreTable};
pub use template::{instantiate, Template, TemplateError, TemplateRegistry};
