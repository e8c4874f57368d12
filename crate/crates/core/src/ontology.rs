//! Domain ontologies: dialogue acts, slots and the per-domain text data
//! (sentence starters, definitions, value synonyms) the rest of the
//! pipeline reads.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved dialogue-act class for utterances that fit no domain act.
pub const OTHER_DA: &str = "other";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    Categorical,
    Boolean,
}

/// Which starter form a prompt or realizer asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarterForm {
    Declarative,
    Question,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSpec {
    pub kind: SlotKind,
    /// Replaces the humanized slot name wherever the slot is rendered as a
    /// phrase (boolean slots, empty-valued categorical slots).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrase: Option<String>,
    /// Extra surface forms accepted for the slot phrase when matching text.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synonyms: Vec<String>,
    /// Known value vocabulary for categorical slots, each with accepted
    /// paraphrases. Used to tell an incorrect value from a missing one.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, Vec<String>>,
}

impl SlotSpec {
    pub fn categorical() -> Self {
        Self { kind: SlotKind::Categorical, phrase: None, synonyms: Vec::new(), values: BTreeMap::new() }
    }

    pub fn boolean() -> Self {
        Self { kind: SlotKind::Boolean, ..Self::categorical() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialogueActSpec {
    /// First-person sentence starter, e.g. "I suggest".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starter: Option<String>,
    /// Request-form starter, e.g. "can you suggest a game".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
    /// The act may be realized with no attributes.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub content_free: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OntologyError {
    #[error("ontology `{0}` does not declare the reserved `other` dialogue act")]
    MissingOther(String),
    #[error("unknown slot `{0}`")]
    UnknownSlot(String),
    #[error("unknown dialogue act `{0}`")]
    UnknownDialogueAct(String),
    #[error("dialogue act `{da}` has no {form} starter")]
    MissingStarter { da: String, form: &'static str },
    #[error("stub question act `{0}` is not a declared dialogue act")]
    BadQuestionAct(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ontology {
    pub domain: String,
    pub dialogue_acts: BTreeMap<String, DialogueActSpec>,
    pub slots: BTreeMap<String, SlotSpec>,
    /// Object phrase inserted after the declarative starter in the
    /// paraphrase prompt ("I suggest a game ...").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paraphrase_object: Option<String>,
    /// Act the stub classifier assigns to unmatched text ending in '?'.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stub_question_da: Option<String>,
    /// Corpus act names folded into one of this ontology's acts on import,
    /// e.g. `inform` into a merged `describe` class.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub da_aliases: BTreeMap<String, String>,
}

impl Ontology {
    /// Checks the structural invariants. Deserialized ontologies should be
    /// passed through here before use.
    pub fn validate(self) -> Result<Self, OntologyError> {
        if !self.dialogue_acts.contains_key(OTHER_DA) {
            return Err(OntologyError::MissingOther(self.domain));
        }
        if let Some(da) = &self.stub_question_da {
            if !self.dialogue_acts.contains_key(da) {
                return Err(OntologyError::BadQuestionAct(da.clone()));
            }
        }
        if let Some(target) = self.da_aliases.values().find(|t| !self.dialogue_acts.contains_key(*t)) {
            return Err(OntologyError::UnknownDialogueAct(target.clone()));
        }
        Ok(self)
    }

    pub fn has_dialogue_act(&self, da: &str) -> bool {
        self.dialogue_acts.contains_key(da)
    }

    pub fn dialogue_act(&self, da: &str) -> Result<&DialogueActSpec, OntologyError> {
        self.dialogue_acts.get(da).ok_or_else(|| OntologyError::UnknownDialogueAct(da.to_string()))
    }

    /// Resolves a slot, falling back from an indexed name such as `name_2`
    /// (repeated slots in comparison acts) to its base slot.
    pub fn slot(&self, slot: &str) -> Result<&SlotSpec, OntologyError> {
        if let Some(spec) = self.slots.get(slot) {
            return Ok(spec);
        }
        if let Some((base, idx)) = slot.rsplit_once('_') {
            if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) {
                if let Some(spec) = self.slots.get(base) {
                    return Ok(spec);
                }
            }
        }
        Err(OntologyError::UnknownSlot(slot.to_string()))
    }

    pub fn humanize_slot(&self, slot: &str) -> Result<String, OntologyError> {
        self.slot(slot)?;
        Ok(humanize_slot_name(slot))
    }

    /// The phrase a slot is rendered as: the ontology override when present,
    /// otherwise the humanized slot name.
    pub fn slot_phrase(&self, slot: &str) -> Result<String, OntologyError> {
        let spec = self.slot(slot)?;
        Ok(match &spec.phrase {
            Some(p) => p.clone(),
            None => humanize_slot_name(slot),
        })
    }

    pub fn starter_for(&self, da: &str, form: StarterForm) -> Result<&str, OntologyError> {
        let spec = self.dialogue_act(da)?;
        let (starter, name) = match form {
            StarterForm::Declarative => (&spec.starter, "declarative"),
            StarterForm::Question => (&spec.question, "question"),
        };
        starter
            .as_deref()
            .ok_or_else(|| OntologyError::MissingStarter { da: da.to_string(), form: name })
    }

    /// The act a corpus act name maps to, after aliasing.
    pub fn canonical_da<'a>(&'a self, da: &'a str) -> &'a str {
        self.da_aliases.get(da).map(String::as_str).unwrap_or(da)
    }

    /// Dialogue acts in label order, `other` included.
    pub fn dialogue_act_names(&self) -> impl Iterator<Item = &str> {
        self.dialogue_acts.keys().map(String::as_str)
    }
}

/// Underscores become spaces and a single leading `has_`/`is_` is dropped.
pub fn humanize_slot_name(slot: &str) -> String {
    let stripped = slot
        .strip_prefix("has_")
        .or_else(|| slot.strip_prefix("is_"))
        .unwrap_or(slot);
    stripped.replace('_', " ")
}
