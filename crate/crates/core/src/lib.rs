//! Overgenerate-and-rank building blocks for dialogue-act controlled NLG.
//!
//! Everything in this crate is pure: meaning-representation parsing,
//! pseudo-reference construction, prompt rendering, candidate scoring,
//! ranking and run-level aggregation. IO, remote endpoints and the CLI
//! live in the `darank` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod evaluation;
pub mod generation;
pub mod mock;
pub mod mr;
pub mod ontology;
pub mod prompts;
pub mod pseudo;
pub mod ranking;
pub mod scoring;
pub mod text;

pub use mock::{MockGenerator, MockPolicy, Perturbation};

pub use corpus::{balanced_sample, CorpusItem, InsufficientExamples, Split};
pub use evaluation::{before_after, evaluate_run, pearson, BeforeAfter, Correlation, EvaluationReport, MetricBlock};
pub use generation::{overgenerate, Candidate, CompletionRequest, GenerationConfig, GenerationError, Generator};
pub use mr::{parse_mr, AttrValue, Attribute, MeaningRepresentation, MrError};
pub use ontology::{DialogueActSpec, Ontology, OntologyError, SlotKind, SlotSpec, OTHER_DA};
pub use prompts::{completion_stop_rules, render_prompt, sample_exemplars, Exemplar, PromptError, PromptSpec, PromptStyle};
pub use pseudo::{build_pseudo_reference, PseudoReference};
pub use ranking::{rank_rf2da, rf_scalar, select_best, RankedEntry, RankedPool, RankingError, RankingFunction};
pub use scoring::{assemble_scores, score_dac, score_fluency, score_pbbleu, score_pbleu, score_ser, ScoreVector, Scorer, ScorerError, SlotErrorReport, StubScorer};
