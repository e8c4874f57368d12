//! Deterministic stand-ins for the model-backed scorers.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Classification, FluencyEstimate, Scorer, ScorerError};
use crate::ontology::{Ontology, OTHER_DA};
use crate::text::{match_tokens, plain_tokens};

/// Stub scorer: starter-prefix act classification, repetition-penalized
/// fluency, and token F1 similarity.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubScorer;

fn starts_with_words(text: &str, prefix: &str) -> bool {
    let t = match_tokens(text);
    let p = match_tokens(prefix);
    !p.is_empty() && t.len() >= p.len() && t[..p.len()] == p[..]
}

/// The act whose declarative or question starter opens the text (longest
/// starter wins); else the ontology's question act for text ending in
/// '?'; else `other`.
pub fn stub_label(text: &str, ontology: &Ontology) -> String {
    let mut best: Option<(&str, usize)> = None;
    for (da, spec) in &ontology.dialogue_acts {
        for starter in [&spec.starter, &spec.question].into_iter().flatten() {
            if starts_with_words(text, starter) {
                let len = match_tokens(starter).len();
                if best.is_none_or(|(_, l)| len > l) {
                    best = Some((da.as_str(), len));
                }
            }
        }
    }
    if let Some((da, _)) = best {
        return da.to_string();
    }
    match &ontology.stub_question_da {
        Some(q) if text.trim_end().ends_with('?') => q.clone(),
        _ => OTHER_DA.to_string(),
    }
}

pub fn stub_classify(text: &str, ontology: &Ontology) -> Classification {
    let label = stub_label(text, ontology);
    let distribution: BTreeMap<String, f64> = ontology
        .dialogue_act_names()
        .map(|da| (da.to_string(), if da == label { 1.0 } else { 0.0 }))
        .collect();
    Classification { label, distribution }
}

/// Mean log-probability falls with the share of repeated tokens and of
/// immediately repeated characters.
pub fn stub_fluency(text: &str) -> FluencyEstimate {
    let tokens = plain_tokens(text);
    if tokens.is_empty() {
        return FluencyEstimate { mean_token_logprob: 0.0, token_count: 0 };
    }
    let mut distinct: Vec<&String> = tokens.iter().collect();
    distinct.sort();
    distinct.dedup();
    let token_rep = 1.0 - distinct.len() as f64 / tokens.len() as f64;
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let char_rep = if chars.len() < 2 {
        0.0
    } else {
        chars.windows(2).filter(|w| w[0] == w[1]).count() as f64 / (chars.len() - 1) as f64
    };
    FluencyEstimate { mean_token_logprob: -(1.5 + 4.0 * token_rep + 2.0 * char_rep), token_count: tokens.len() }
}

/// Token-level F1 over multisets of case-folded word tokens.
pub fn token_f1(a: &str, b: &str) -> f64 {
    let ta = match_tokens(a);
    let tb = match_tokens(b);
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &tb {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut overlap = 0usize;
    for t in &ta {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / ta.len() as f64;
    let r = overlap as f64 / tb.len() as f64;
    2.0 * p * r / (p + r)
}

impl Scorer for StubScorer {
    fn classify(&self, text: &str, ontology: &Ontology) -> Result<Classification, ScorerError> {
        Ok(stub_classify(text, ontology))
    }

    fn fluency(&self, text: &str) -> Result<FluencyEstimate, ScorerError> {
        Ok(stub_fluency(text))
    }

    fn similarity(&self, text: &str, reference: &str) -> Result<f64, ScorerError> {
        Ok(token_f1(text, reference))
    }
}
