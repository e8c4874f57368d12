//! Runner for overgenerate-and-rank experiments: ontology and corpus
//! files, generator and scorer bindings, the end-to-end pipeline and
//! report files. The pure building blocks live in `darank-core`.

pub mod config;
pub mod corpus;
pub mod error;
pub mod generators;
pub mod ontologies;
pub mod pipeline;
pub mod report;
pub mod retry;
pub mod scorer_client;

pub use config::{GeneratorKind, GeneratorSettings, RunConfig, ScorerKind, ScorerSettings};
pub use error::{DarankError, ExitCode};
pub use pipeline::{compare_rfs, correlate, run_pipeline, RunArtifact, RunOutput};
