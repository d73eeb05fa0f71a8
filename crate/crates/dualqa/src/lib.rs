//! Toolkit for building and scoring QA datasets whose models answer twice:
//! once from the supplied context and once from what they memorized.
//!
//! The pipeline composes over JSON-lines files:
//!
//! - [`corpus`] loads and validates source datasets and detects table markup.
//! - [`tagger`] assigns entity-category labels to answers via a gazetteer.
//! - [`augment`] derives factual, counterfactual, empty-context, and
//!   random-context examples, each pairing a contextual target with the
//!   original (parametric) answer.
//! - [`format`] encodes targets and parses model output in the single- and
//!   multi-answer layouts.
//! - [`metrics`] scores prediction files: contextual accuracy, answerability,
//!   answer separation, and parametric accuracy, with table filtering.
//! - [`overlap`] splits evaluation sets by train/eval answer overlap.
//! - [`simulator`] fabricates predictions under fixed behavior profiles so
//!   the whole metric suite is testable without a trained model.
//! - [`manifest`] records a sidecar JSON for every artifact a command writes.

pub mod augment;
pub mod corpus;
pub mod format;
pub mod manifest;
pub mod metrics;
pub mod overlap;
pub mod simulator;
pub mod tagger;

mod error;
mod text;
mod util;

pub use error::{Error, FileDiagnostics, LineDiagnostic, Result};
pub use format::UNANSWERABLE;
