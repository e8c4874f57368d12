//! Few-shot prompt rendering for the nine prompt styles.
//!
//! Every style renders each exemplar as one block, separates blocks with a
//! blank line, and ends with the target block left open for the model:
//! TST styles stop right after an opening double quote, all other styles
//! after a newline.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mr::{AttrValue, MeaningRepresentation};
use crate::ontology::{Ontology, StarterForm};
use crate::pseudo::build_pseudo_reference;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStyle {
    TstVanilla,
    TstDialogue,
    TstParaphrase,
    DefinitionalEach,
    DefinitionalTop,
    Paraphrase,
    Dialogic,
    Pseudo,
    #[serde(rename = "s2s")]
    S2S,
}

impl PromptStyle {
    pub const ALL: [PromptStyle; 9] = [
        PromptStyle::TstVanilla,
        PromptStyle::TstDialogue,
        PromptStyle::TstParaphrase,
        PromptStyle::DefinitionalEach,
        PromptStyle::DefinitionalTop,
        PromptStyle::Paraphrase,
        PromptStyle::Dialogic,
        PromptStyle::Pseudo,
        PromptStyle::S2S,
    ];

    pub fn id(self) -> &'static str {
        match self {
            PromptStyle::TstVanilla => "tst-vanilla",
            PromptStyle::TstDialogue => "tst-dialogue",
            PromptStyle::TstParaphrase => "tst-paraphrase",
            PromptStyle::DefinitionalEach => "definitional-each",
            PromptStyle::DefinitionalTop => "definitional-top",
            PromptStyle::Paraphrase => "paraphrase",
            PromptStyle::Dialogic => "dialogic",
            PromptStyle::Pseudo => "pseudo",
            PromptStyle::S2S => "s2s",
        }
    }

    pub fn is_tst(self) -> bool {
        matches!(self, PromptStyle::TstVanilla | PromptStyle::TstDialogue | PromptStyle::TstParaphrase)
    }

    pub fn is_definitional(self) -> bool {
        matches!(self, PromptStyle::DefinitionalEach | PromptStyle::DefinitionalTop)
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown prompt style `{0}`")]
pub struct UnknownStyle(pub String);

impl FromStr for PromptStyle {
    type Err = UnknownStyle;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        PromptStyle::ALL
            .into_iter()
            .find(|p| p.id() == norm)
            .ok_or_else(|| UnknownStyle(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub mr: MeaningRepresentation,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub style: PromptStyle,
    pub exemplars: Vec<Exemplar>,
    pub target: MeaningRepresentation,
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("need {needed} exemplars for `{da}` but the corpus has {available}")]
    InsufficientExamples { da: String, needed: usize, available: usize },
    #[error("dialogue act `{0}` has no sentence starter for this prompt style")]
    MissingStarter(String),
    #[error("dialogue act `{0}` has no definition")]
    MissingDefinition(String),
    #[error("exemplar act `{found}` differs from target act `{target}`")]
    MixedDialogueActs { target: String, found: String },
    #[error("exemplar {0} has an empty reference")]
    EmptyReference(usize),
}

/// Draws `n` distinct exemplars of one act, uniformly without replacement,
/// in a seed-determined order.
pub fn sample_exemplars(corpus: &[Exemplar], da: &str, n: usize, seed: u64) -> Result<Vec<Exemplar>, PromptError> {
    let pool: Vec<&Exemplar> = corpus.iter().filter(|e| e.mr.dialogue_act == da).collect();
    if pool.len() < n {
        return Err(PromptError::InsufficientExamples { da: da.to_string(), needed: n, available: pool.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, pool.len(), n).into_iter().map(|i| pool[i].clone()).collect())
}

/// Stop sequences that cut a completion down to one utterance.
pub fn completion_stop_rules(style: PromptStyle) -> Vec<String> {
    let stops: &[&str] = match style {
        PromptStyle::TstVanilla | PromptStyle::TstDialogue | PromptStyle::TstParaphrase => &["\""],
        PromptStyle::DefinitionalEach => &["\n", "Description of"],
        PromptStyle::DefinitionalTop => &["\n", "Data:"],
        PromptStyle::Paraphrase | PromptStyle::Dialogic | PromptStyle::Pseudo | PromptStyle::S2S => &["\n"],
    };
    stops.iter().map(|s| s.to_string()).collect()
}

fn article(word: &str) -> &'static str {
    match word.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Joins non-empty parts with single spaces.
fn join_words(parts: &[&str]) -> String {
    parts.iter().filter(|p| !p.is_empty()).copied().collect::<Vec<_>>().join(" ")
}

/// `d = yes | slot = value | ...` with a closing period.
pub fn linearize_mr(mr: &MeaningRepresentation) -> String {
    let mut out = format!("{} = yes", mr.dialogue_act);
    for attr in &mr.attributes {
        let value = match &attr.value {
            AttrValue::Categorical(v) if v.is_empty() => "?",
            AttrValue::Categorical(v) => v.as_str(),
            AttrValue::Bool(true) => "yes",
            AttrValue::Bool(false) => "no",
        };
        out.push_str(&format!(" | {} = {}", attr.slot, value));
    }
    out.push('.');
    out
}

const DEFINITION_SUFFIX: &str = "Generate diverse responses.";

struct Renderer<'a> {
    style: PromptStyle,
    ontology: &'a Ontology,
    da: &'a str,
}

impl Renderer<'_> {
    fn starter(&self, form: StarterForm) -> Result<&str, PromptError> {
        self.ontology.starter_for(self.da, form).map_err(|_| PromptError::MissingStarter(self.da.to_string()))
    }

    fn description(&self) -> Result<String, PromptError> {
        let def = self
            .ontology
            .dialogue_act(self.da)
            .ok()
            .and_then(|s| s.definition.as_deref())
            .ok_or_else(|| PromptError::MissingDefinition(self.da.to_string()))?;
        Ok(format!("Description of <{}>: {} {}", self.da, def, DEFINITION_SUFFIX))
    }

    /// One block; `reference` is `None` for the open target block.
    fn block(&self, mr: &MeaningRepresentation, reference: Option<&str>) -> Result<String, PromptError> {
        let pseudo = build_pseudo_reference(mr, self.ontology).text;
        let da = self.da;
        let (head, tail_open) = match self.style {
            PromptStyle::TstVanilla => (
                format!("Here is a text: \"{pseudo}\". Rewrite of the text, which is {} {da} dialogue act: \"", article(da)),
                true,
            ),
            PromptStyle::TstDialogue => (
                format!("Here is a text: \"{pseudo}\". Rewrite it to be {} {da} dialogue act: \"", article(da)),
                true,
            ),
            PromptStyle::TstParaphrase => {
                let text = join_words(&[self.starter(StarterForm::Declarative)?, &pseudo]);
                (format!("Here is a text: \"{text}\". Paraphrase of the text: \""), true)
            }
            PromptStyle::DefinitionalEach | PromptStyle::DefinitionalTop => {
                (format!("Data: {}\nData to Text for <{da}>:\n", linearize_mr(mr)), false)
            }
            PromptStyle::Paraphrase => {
                let object = self.ontology.paraphrase_object.as_deref().unwrap_or("");
                (format!("{}.\n", join_words(&[self.starter(StarterForm::Declarative)?, object, &pseudo])), false)
            }
            PromptStyle::Dialogic => {
                let question = capitalize(self.starter(StarterForm::Question)?);
                (format!("{}?\n", join_words(&[&question, &pseudo])), false)
            }
            PromptStyle::Pseudo => {
                let name = capitalize(&da.replace('_', " "));
                (format!("{}.\n", join_words(&[&name, &pseudo])), false)
            }
            PromptStyle::S2S => (format!("{}\n", linearize_mr(mr)), false),
        };
        Ok(match reference {
            None => head,
            Some(r) if tail_open => format!("{head}{r}\""),
            Some(r) => format!("{head}{r}"),
        })
    }
}

/// Renders a few-shot prompt. All exemplars must share the target's act.
///
/// `DefinitionalTop` prints the act description once above the exemplars;
/// `DefinitionalEach` prints it above every exemplar (so the two coincide
/// for a single exemplar). With no exemplars both print it once.
pub fn render_prompt(
    style: PromptStyle,
    exemplars: &[Exemplar],
    target: &MeaningRepresentation,
    ontology: &Ontology,
) -> Result<PromptSpec, PromptError> {
    let da = target.dialogue_act.as_str();
    for (i, ex) in exemplars.iter().enumerate() {
        if ex.mr.dialogue_act != da {
            return Err(PromptError::MixedDialogueActs { target: da.to_string(), found: ex.mr.dialogue_act.clone() });
        }
        if ex.reference.trim().is_empty() {
            return Err(PromptError::EmptyReference(i));
        }
    }
    let r = Renderer { style, ontology, da };

    let mut blocks: Vec<String> = Vec::with_capacity(exemplars.len() + 1);
    for ex in exemplars {
        blocks.push(r.block(&ex.mr, Some(&ex.reference))?);
    }
    let target_block = r.block(target, None)?;

    let rendered = if style.is_definitional() {
        let description = r.description()?;
        let each = style == PromptStyle::DefinitionalEach && !exemplars.is_empty();
        let mut out = String::new();
        if each {
            for (i, b) in blocks.iter().enumerate() {
                if i > 0 {
                    out.push_str("\n\n");
                }
                out.push_str(&description);
                out.push_str("\n\n\n");
                out.push_str(b);
            }
            out.push_str("\n\n");
        } else {
            out.push_str(&description);
            out.push_str("\n\n\n");
            for b in &blocks {
                out.push_str(b);
                out.push_str("\n\n");
            }
        }
        out.push_str(&target_block);
        out
    } else {
        blocks.push(target_block);
        blocks.join("\n\n")
    };

    Ok(PromptSpec { style, exemplars: exemplars.to_vec(), target: target.clone(), rendered })
}
