//! Per-candidate scoring: dialogue-act probability, slot accuracy,
//! pseudo-reference BLEU, pseudo-reference similarity, fluency.

pub mod bleu;
pub mod ser;
pub mod stub;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::Candidate;
use crate::mr::MeaningRepresentation;
use crate::ontology::Ontology;
use crate::pseudo::{build_pseudo_reference, PseudoReference};

pub use bleu::{corpus_bleu, sentence_bleu, PBLEU_EPSILON};
pub use ser::{score_ser, SlotErrorReport};
pub use stub::StubScorer;

/// Fluency assigned to empty text or text the LM reports no tokens for.
pub const FLUENCY_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub dac_label: String,
    /// Probability of the target act, not of the argmax label.
    pub dac_prob: f64,
    pub sacc: f64,
    pub pbleu: f64,
    pub pbbleu: f64,
    pub fluency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: String,
    pub distribution: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluencyEstimate {
    pub mean_token_logprob: f64,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScorerError {
    #[error("scorer unavailable: {0}")]
    Unavailable(String),
    #[error("malformed scorer response: {0}")]
    BadResponse(String),
}

/// Backend for the model-based scores. The stub lives in this crate; the
/// HTTP client for the scorer service lives in `darank`.
pub trait Scorer: Send + Sync {
    fn classify(&self, text: &str, ontology: &Ontology) -> Result<Classification, ScorerError>;
    fn fluency(&self, text: &str) -> Result<FluencyEstimate, ScorerError>;
    fn similarity(&self, text: &str, reference: &str) -> Result<f64, ScorerError>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn classify(&self, text: &str, ontology: &Ontology) -> Result<Classification, ScorerError> {
        (**self).classify(text, ontology)
    }
    fn fluency(&self, text: &str) -> Result<FluencyEstimate, ScorerError> {
        (**self).fluency(text)
    }
    fn similarity(&self, text: &str, reference: &str) -> Result<f64, ScorerError> {
        (**self).similarity(text, reference)
    }
}

/// Smoothed sentence BLEU-4 of a candidate against its pseudo-reference.
pub fn score_pbleu(candidate: &str, pseudo: &PseudoReference) -> f64 {
    sentence_bleu(
        &crate::text::bleu_tokens(candidate),
        &crate::text::bleu_tokens(&pseudo.text),
        PBLEU_EPSILON,
    )
}

/// Argmax label and the probability mass on `target_da`.
pub fn score_dac<S: Scorer + ?Sized>(
    candidate: &str,
    target_da: &str,
    scorer: &S,
    ontology: &Ontology,
) -> Result<(String, f64), ScorerError> {
    let c = scorer.classify(candidate, ontology)?;
    let p = c.distribution.get(target_da).copied().unwrap_or(0.0);
    Ok((c.label, p))
}

/// exp(mean token log-probability), floored for empty text.
pub fn score_fluency<S: Scorer + ?Sized>(candidate: &str, scorer: &S) -> Result<f64, ScorerError> {
    if candidate.trim().is_empty() {
        return Ok(FLUENCY_FLOOR);
    }
    let est = scorer.fluency(candidate)?;
    if est.token_count == 0 || est.mean_token_logprob.is_nan() {
        return Ok(FLUENCY_FLOOR);
    }
    Ok(libm::exp(est.mean_token_logprob).clamp(FLUENCY_FLOOR, 1.0))
}

pub fn score_pbbleu<S: Scorer + ?Sized>(candidate: &str, pseudo: &PseudoReference, scorer: &S) -> Result<f64, ScorerError> {
    let s = scorer.similarity(candidate, &pseudo.text)?;
    Ok(if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) })
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("scoring candidate {gen_index}: {source}")]
pub struct ScoringError {
    pub gen_index: usize,
    #[source]
    pub source: ScorerError,
}

pub fn score_candidate<S: Scorer + ?Sized>(
    mr: &MeaningRepresentation,
    pseudo: &PseudoReference,
    text: &str,
    scorer: &S,
    ontology: &Ontology,
) -> Result<ScoreVector, ScorerError> {
    let (dac_label, dac_prob) = score_dac(text, &mr.dialogue_act, scorer, ontology)?;
    Ok(ScoreVector {
        dac_label,
        dac_prob,
        sacc: score_ser(mr, text, ontology).sacc,
        pbleu: score_pbleu(text, pseudo),
        pbbleu: score_pbbleu(text, pseudo, scorer)?,
        fluency: score_fluency(text, scorer)?,
    })
}

/// Scores every candidate of one pool. Candidates are scored
/// independently, so the result does not depend on their order.
pub fn assemble_scores<S: Scorer + ?Sized>(
    mr: &MeaningRepresentation,
    candidates: Vec<Candidate>,
    scorer: &S,
    ontology: &Ontology,
) -> Result<Vec<(Candidate, ScoreVector)>, ScoringError> {
    let pseudo = build_pseudo_reference(mr, ontology);
    candidates
        .into_iter()
        .map(|c| {
            let v = score_candidate(mr, &pseudo, &c.text, scorer, ontology)
                .map_err(|source| ScoringError { gen_index: c.gen_index, source })?;
            Ok((c, v))
        })
        .collect()
}
