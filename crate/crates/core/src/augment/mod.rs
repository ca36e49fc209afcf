//! Visual augmentation of script text.
//!
//! Declarative [`AugmentationRule`]s are matched against a document and
//! resolved into a flat list of [`AugmentationSpan`]s, each assigned to one
//! rendering stage. The host renders spans; the document is never modified.

mod advice;
pub mod builtin;
mod engine;
mod rule;
mod taxonomy;

use alloc::string::String;

use thiserror::Error;

pub use advice::{AdviceModel, InsecureAction, SecureAction};
pub use builtin::{builtin_ruleset, BUILTIN_RULESETS, SHA1_TOOLTIP};
pub use engine::{
    compile_rules, compute_spans, primary_stage, sort_spans, Augmentation, AugmentationSpan,
    Channel, CompiledRule, RuleError, RuleErrorKind, Stage,
};
pub use rule::{
    is_valid_color, AugmentationRule, Decoration, DecorationShape, Effects, FontStyle, FontWeight,
    Gutter, GutterSide, Matcher, OverlayText, RuleSet,
};
pub use taxonomy::{taxonomy_coverage, Interaction, Location, Target, TaxonomyRow, Visualization};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("unknown ruleset `{0}`")]
    UnknownRuleset(String),
}
