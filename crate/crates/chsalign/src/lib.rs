//! Pairwise alignment of RNA secondary structures whose junctions carry
//! coaxial helical stacking annotations.
//!
//! The pipeline: parse a structure ([`structure`]), turn it into an
//! ordered labeled forest with annotated junctions ([`tree`]), score
//! element pairs ([`scoring`]), run the constrained tree-matching dynamic
//! program ([`align`]), and evaluate junction alignment precision over
//! batches ([`eval`]). The `chsalign` binary exposes the whole pipeline.

pub mod align;
pub mod cli;
pub mod eval;
pub mod pipeline;
pub mod score;
pub mod scoring;
pub mod structure;
pub mod tree;

pub use align::{align_forests, AlignParams, AlignmentResult};
pub use score::Score;
pub use scoring::ScoringScheme;
pub use structure::SecondaryStructure;
pub use tree::StructureForest;
