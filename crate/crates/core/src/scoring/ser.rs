//! Slot error rate by string matching against the ontology's surface
//! forms.
//!
//! Text and values are compared as case-folded alphanumeric token runs, so
//! casing, whitespace and punctuation around values do not matter. A
//! categorical slot is realized when its value or a listed paraphrase
//! appears; it is incorrect when instead another value from the same
//! slot's vocabulary appears; otherwise it is missing. A boolean slot is
//! realized when its phrase appears with the MR's polarity, where a
//! negation word up to three tokens before the phrase makes it negative.
//! Extra, unrequested content is not counted.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::mr::{AttrValue, MeaningRepresentation};
use crate::ontology::{humanize_slot_name, Ontology, SlotSpec};
use crate::text::{find_token_runs, match_tokens};

pub const NEGATION_WINDOW: usize = 3;
const NEGATORS: &[&str] = &["no", "not", "without", "never", "none", "lacks", "lacking"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotErrorReport {
    pub total_slots: usize,
    pub missing: Vec<String>,
    pub incorrect: Vec<String>,
    pub ser: f64,
    pub sacc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotOutcome {
    Realized,
    Missing,
    Incorrect,
}

fn appears(text: &[String], form: &str) -> bool {
    !find_token_runs(text, &match_tokens(form)).is_empty()
}

/// A value listed as "a, b" is realized only when every part is.
fn value_realized(text: &[String], value: &str, synonyms: &[String]) -> bool {
    if appears(text, value) || synonyms.iter().any(|s| appears(text, s)) {
        return true;
    }
    let parts: Vec<&str> = value.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
    parts.len() > 1 && parts.iter().all(|p| appears(text, p))
}

fn categorical(text: &[String], value: &str, spec: &SlotSpec) -> SlotOutcome {
    let synonyms = spec.values.get(value).map(Vec::as_slice).unwrap_or(&[]);
    if value_realized(text, value, synonyms) {
        return SlotOutcome::Realized;
    }
    let target = match_tokens(value);
    let rival = spec
        .values
        .iter()
        .filter(|(v, _)| match_tokens(v) != target)
        .any(|(v, syns)| value_realized(text, v, syns));
    if rival {
        SlotOutcome::Incorrect
    } else {
        SlotOutcome::Missing
    }
}

fn phrase_forms(slot: &str, spec: &SlotSpec) -> Vec<Vec<String>> {
    let mut forms: Vec<Vec<String>> = Vec::new();
    let mut push = |s: &str| {
        let t = match_tokens(s);
        if !t.is_empty() && !forms.contains(&t) {
            forms.push(t);
        }
    };
    if let Some(p) = &spec.phrase {
        push(p);
    }
    push(&humanize_slot_name(slot));
    for s in &spec.synonyms {
        push(s);
    }
    forms
}

fn boolean(text: &[String], wanted: bool, forms: &[Vec<String>]) -> SlotOutcome {
    let mut seen = false;
    for form in forms {
        for start in find_token_runs(text, form) {
            seen = true;
            let window = &text[start.saturating_sub(NEGATION_WINDOW)..start];
            let negated = window.iter().any(|w| NEGATORS.contains(&w.as_str()));
            if negated != wanted {
                return SlotOutcome::Realized;
            }
        }
    }
    if seen {
        SlotOutcome::Incorrect
    } else {
        SlotOutcome::Missing
    }
}

pub fn score_ser(mr: &MeaningRepresentation, text: &str, ontology: &Ontology) -> SlotErrorReport {
    let tokens = match_tokens(text);
    let mut missing = Vec::new();
    let mut incorrect = Vec::new();
    for attr in &mr.attributes {
        let Ok(spec) = ontology.slot(&attr.slot) else {
            missing.push(attr.slot.clone());
            continue;
        };
        let outcome = match &attr.value {
            AttrValue::Categorical(v) if v.trim().is_empty() => {
                if phrase_forms(&attr.slot, spec).iter().any(|f| !find_token_runs(&tokens, f).is_empty()) {
                    SlotOutcome::Realized
                } else {
                    SlotOutcome::Missing
                }
            }
            AttrValue::Categorical(v) => categorical(&tokens, v, spec),
            AttrValue::Bool(b) => boolean(&tokens, *b, &phrase_forms(&attr.slot, spec)),
        };
        match outcome {
            SlotOutcome::Realized => {}
            SlotOutcome::Missing => missing.push(attr.slot.clone()),
            SlotOutcome::Incorrect => incorrect.push(attr.slot.clone()),
        }
    }
    let total_slots = mr.attributes.len();
    let ser = if total_slots == 0 { 0.0 } else { (missing.len() + incorrect.len()) as f64 / total_slots as f64 };
    SlotErrorReport { total_slots, missing, incorrect, ser, sacc: 1.0 - ser }
}
