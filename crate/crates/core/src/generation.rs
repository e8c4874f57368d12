//! Overgeneration: ask a generator for k completions and cut each down to
//! a single candidate utterance.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompts::{completion_stop_rules, PromptSpec};

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_TOP_P: f64 = 1.0;
pub const DEFAULT_MAX_TOKENS: u32 = 120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub k: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Overrides the prompt style's stop sequences when non-empty.
    pub stop: Vec<String>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            temperature: DEFAULT_TEMPERATURE,
            top_p: DEFAULT_TOP_P,
            max_tokens: DEFAULT_MAX_TOKENS,
            stop: Vec::new(),
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.k == 0 {
            return Err(GenerationError::InvalidConfig("k must be at least 1"));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(GenerationError::InvalidConfig("temperature must be positive"));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GenerationError::InvalidConfig("top_p must be in (0, 1]"));
        }
        Ok(())
    }
}

/// The provider-neutral request a generator receives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub n: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub stop: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub raw: String,
    pub prompt_id: String,
    pub gen_index: usize,
    /// Placeholder added after the endpoint failed to return enough
    /// completions.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub padded: bool,
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(&'static str),
    #[error("endpoint error: {message}")]
    Endpoint { message: String, retryable: bool },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("no replay fixture for request {0}")]
    FixtureMiss(String),
    #[error(transparent)]
    Other(Box<dyn core::error::Error + Send + Sync>),
}

/// Anything that can produce raw completions for a prompt. Implementations
/// may return fewer than `request.n` completions when part of a batch
/// failed; [`overgenerate`] pads and flags the gap.
pub trait Generator: Send + Sync {
    fn generate(&self, prompt: &PromptSpec, request: &CompletionRequest) -> Result<Vec<String>, GenerationError>;
}

impl<G: Generator + ?Sized> Generator for &G {
    fn generate(&self, prompt: &PromptSpec, request: &CompletionRequest) -> Result<Vec<String>, GenerationError> {
        (**self).generate(prompt, request)
    }
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn generate(&self, prompt: &PromptSpec, request: &CompletionRequest) -> Result<Vec<String>, GenerationError> {
        (**self).generate(prompt, request)
    }
}

/// Cuts a raw completion at the earliest stop sequence, then trims
/// whitespace and stray quotes. Leading whitespace is skipped before the
/// stop search so a completion that opens with a newline is not emptied.
pub fn truncate_completion(raw: &str, stop: &[String]) -> String {
    let body = raw.trim_start();
    let cut = stop
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| body.find(s.as_str()))
        .min()
        .unwrap_or(body.len());
    body[..cut].trim().trim_matches(|c| c == '"' || c == '“' || c == '”').trim().to_string()
}

pub fn completion_request(prompt: &PromptSpec, cfg: &GenerationConfig) -> CompletionRequest {
    let stop = if cfg.stop.is_empty() { completion_stop_rules(prompt.style) } else { cfg.stop.clone() };
    CompletionRequest {
        prompt: prompt.rendered.clone(),
        n: cfg.k,
        temperature: cfg.temperature,
        top_p: cfg.top_p,
        max_tokens: cfg.max_tokens,
        stop,
    }
}

/// Produces exactly `cfg.k` candidates in generation order.
pub fn overgenerate<G: Generator + ?Sized>(
    prompt: &PromptSpec,
    prompt_id: &str,
    cfg: &GenerationConfig,
    generator: &G,
) -> Result<Vec<Candidate>, GenerationError> {
    cfg.validate()?;
    let request = completion_request(prompt, cfg);
    let mut raws = generator.generate(prompt, &request)?;
    raws.truncate(cfg.k);
    let produced = raws.len();
    let mut out: Vec<Candidate> = raws
        .into_iter()
        .enumerate()
        .map(|(gen_index, raw)| Candidate {
            text: truncate_completion(&raw, &request.stop),
            raw,
            prompt_id: prompt_id.to_string(),
            gen_index,
            padded: false,
        })
        .collect();
    for gen_index in produced..cfg.k {
        out.push(Candidate {
            text: String::new(),
            raw: String::new(),
            prompt_id: prompt_id.to_string(),
            gen_index,
            padded: true,
        });
    }
    Ok(out)
}
