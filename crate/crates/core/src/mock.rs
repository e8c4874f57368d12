//! Deterministic mock generator: template-realizes the target MR and then
//! injects the errors an error profile asks for.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::generation::{truncate_completion, Candidate, CompletionRequest, GenerationError, Generator};
use crate::mr::{AttrValue, MeaningRepresentation};
use crate::ontology::{Ontology, StarterForm, OTHER_DA};
use crate::prompts::{completion_stop_rules, PromptSpec};
use crate::pseudo::build_pseudo_reference;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    Correct,
    /// Leave out the named slot. No effect when the MR lacks it.
    DropSlot(String),
    /// Open with another act's starter; `None` picks one by seed, and
    /// `Some("other")` drops the starter altogether.
    WrongDa(Option<String>),
    /// Append an unsupported phrase.
    Hallucinate(String),
    /// Stutter the final word.
    Disfluent,
}

/// Perturbations applied together to one candidate. Empty means correct.
pub type ErrorProfile = Vec<Perturbation>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockPolicy {
    /// Every completion is the target's pseudo-reference.
    Echo,
    /// Exactly one correct candidate at a seeded position; the rest each
    /// drop a slot or use the wrong act, sometimes also hallucinating or
    /// stuttering.
    OnePerfect,
    /// One correct candidate, one bare pseudo-reference with no act
    /// starter (highest pBLEU, wrong act), and flawed filler.
    Adversarial,
    /// Explicit per-candidate profiles, cycled when shorter than k.
    Fixed(Vec<ErrorProfile>),
}

/// None of these is a slot phrase, so a hallucination never realizes a
/// dropped slot by accident.
const HALLUCINATIONS: &[&str] = &["a sequel", "free updates", "virtual reality", "a level editor"];

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn join_list(parts: &[String]) -> String {
    match parts {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

fn starter_text(ontology: &Ontology, da: &str) -> Option<String> {
    if da == OTHER_DA {
        return None;
    }
    ontology
        .starter_for(da, StarterForm::Declarative)
        .map(str::to_string)
        .or_else(|_| ontology.starter_for(da, StarterForm::Question).map(capitalize))
        .ok()
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn wrong_da(ontology: &Ontology, target: &str, rng: &mut ChaCha8Rng) -> String {
    let choices: Vec<&str> = ontology.dialogue_act_names().filter(|d| *d != target).collect();
    choices.choose(rng).map(|s| s.to_string()).unwrap_or_else(|| OTHER_DA.to_string())
}

/// Realizes an MR as one sentence, then applies the profile. Positive
/// boolean phrases come first and negated ones last so a "no" never
/// lands in front of a positive phrase.
pub fn realize(mr: &MeaningRepresentation, ontology: &Ontology, profile: &[Perturbation], rng: &mut ChaCha8Rng) -> String {
    let mut act = mr.dialogue_act.clone();
    let mut extras: Vec<&str> = Vec::new();
    let mut disfluent = false;
    for p in profile {
        match p {
            Perturbation::WrongDa(Some(da)) => act = da.clone(),
            Perturbation::WrongDa(None) => act = wrong_da(ontology, &mr.dialogue_act, rng),
            Perturbation::Hallucinate(t) => extras.push(t),
            Perturbation::Disfluent => disfluent = true,
            Perturbation::Correct | Perturbation::DropSlot(_) => {}
        }
    }
    let dropped = |slot: &str| profile.iter().any(|p| matches!(p, Perturbation::DropSlot(s) if s == slot));

    let (mut positive, mut values, mut negative) = (Vec::new(), Vec::new(), Vec::new());
    for attr in mr.attributes.iter().filter(|a| !dropped(&a.slot)) {
        let phrase = || ontology.slot_phrase(&attr.slot).unwrap_or_else(|_| attr.slot.replace('_', " "));
        match &attr.value {
            AttrValue::Bool(true) => positive.push(phrase()),
            AttrValue::Bool(false) => negative.push(format!("no {}", phrase())),
            AttrValue::Categorical(v) if v.trim().is_empty() => values.push(phrase()),
            AttrValue::Categorical(v) => values.push(v.clone()),
        }
    }
    let mut fragments = positive;
    fragments.extend(values);
    fragments.extend(negative);
    let mut body = join_list(&fragments);
    for extra in extras {
        if body.is_empty() {
            body = format!("with {extra}");
        } else {
            body = format!("{body}, with {extra}");
        }
    }
    let mut sentence = match starter_text(ontology, &act) {
        Some(s) if body.is_empty() => s,
        Some(s) => format!("{s} {body}"),
        None => body,
    };
    if disfluent {
        if let Some(last) = sentence.split_whitespace().last().map(str::to_string) {
            for _ in 0..3 {
                sentence.push(' ');
                sentence.push_str(&last);
            }
        }
    }
    sentence.push('.');
    sentence
}

fn flawed_profile(mr: &MeaningRepresentation, rng: &mut ChaCha8Rng) -> ErrorProfile {
    let mut profile = Vec::new();
    if !mr.attributes.is_empty() && rng.random_bool(0.5) {
        let slot = &mr.attributes[rng.random_range(0..mr.attributes.len())].slot;
        profile.push(Perturbation::DropSlot(slot.clone()));
    } else {
        profile.push(Perturbation::WrongDa(None));
    }
    match rng.random_range(0..10) {
        0..=1 => profile.push(Perturbation::Hallucinate(HALLUCINATIONS.choose(rng).unwrap().to_string())),
        2..=3 => profile.push(Perturbation::Disfluent),
        _ => {}
    }
    profile
}

impl MockPolicy {
    pub fn profiles(&self, mr: &MeaningRepresentation, k: usize, rng: &mut ChaCha8Rng) -> Vec<ErrorProfile> {
        match self {
            MockPolicy::Echo => Vec::new(),
            MockPolicy::Fixed(list) if list.is_empty() => (0..k).map(|_| Vec::new()).collect(),
            MockPolicy::Fixed(list) => (0..k).map(|i| list[i % list.len()].clone()).collect(),
            MockPolicy::OnePerfect => {
                let good = rng.random_range(0..k);
                (0..k).map(|i| if i == good { Vec::new() } else { flawed_profile(mr, rng) }).collect()
            }
            MockPolicy::Adversarial => {
                let mut out: Vec<ErrorProfile> = (0..k).map(|_| flawed_profile(mr, rng)).collect();
                let good = rng.random_range(0..k);
                out[good] = Vec::new();
                if k > 1 {
                    let bare = (good + 1 + rng.random_range(0..k - 1)) % k;
                    out[bare] = alloc::vec![Perturbation::WrongDa(Some(OTHER_DA.to_string()))];
                }
                out
            }
        }
    }
}

/// Emits `profiles.len()` candidates for the prompt's target. Each raw
/// completion carries the style's stop sequence and some trailing text so
/// truncation is exercised.
pub fn mock_generate(
    prompt: &PromptSpec,
    prompt_id: &str,
    profiles: &[ErrorProfile],
    ontology: &Ontology,
    seed: u64,
) -> Vec<Candidate> {
    let stop = completion_stop_rules(prompt.style);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    profiles
        .iter()
        .enumerate()
        .map(|(gen_index, profile)| {
            let raw = mock_raw(&realize(&prompt.target, ontology, profile, &mut rng), &stop);
            Candidate {
                text: truncate_completion(&raw, &stop),
                raw,
                prompt_id: prompt_id.to_string(),
                gen_index,
                padded: false,
            }
        })
        .collect()
}

fn mock_raw(text: &str, stop: &[String]) -> String {
    match stop.first() {
        Some(s) => format!("{text}{s}Here is"),
        None => text.to_string(),
    }
}

/// [`Generator`] backed by [`realize`]. Randomness is seeded from the
/// configured seed and the rendered prompt, so results do not depend on
/// call order.
#[derive(Debug, Clone)]
pub struct MockGenerator {
    pub ontology: Ontology,
    pub policy: MockPolicy,
    pub seed: u64,
}

impl MockGenerator {
    pub fn prompt_seed(&self, prompt: &str) -> u64 {
        self.seed ^ fnv1a(prompt.as_bytes())
    }
}

impl Generator for MockGenerator {
    fn generate(&self, prompt: &PromptSpec, request: &CompletionRequest) -> Result<Vec<String>, GenerationError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.prompt_seed(&request.prompt));
        if self.policy == MockPolicy::Echo {
            let echo = build_pseudo_reference(&prompt.target, &self.ontology).text;
            return Ok((0..request.n).map(|_| mock_raw(&echo, &request.stop)).collect());
        }
        let profiles = self.policy.profiles(&prompt.target, request.n, &mut rng);
        Ok(profiles
            .iter()
            .map(|p| mock_raw(&realize(&prompt.target, &self.ontology, p, &mut rng), &request.stop))
            .collect())
    }
}
