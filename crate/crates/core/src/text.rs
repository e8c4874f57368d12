//! Tokenizers shared by the metrics.

use alloc::string::String;
use alloc::vec::Vec;

/// Lowercased word tokens for BLEU. Letters, digits and apostrophes form
/// words; every other non-space character is a token of its own.
pub fn bleu_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '\'' {
            word.extend(c.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            out.push(core::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            let mut p = String::new();
            p.push(c);
            out.push(p);
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

/// Case-folded alphanumeric runs with punctuation dropped, used for slot
/// matching. A contracted "n't" is expanded to a separate "not" token.
pub fn match_tokens(text: &str) -> Vec<String> {
    let lowered: String = text.chars().flat_map(char::to_lowercase).collect();
    let expanded = lowered.replace("n't", " not").replace("n’t", " not");
    let mut out = Vec::new();
    let mut word = String::new();
    for c in expanded.chars() {
        if c.is_alphanumeric() {
            word.push(c);
        } else if !word.is_empty() {
            out.push(core::mem::take(&mut word));
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

/// Whitespace tokens, lowercased. Used by the stub scorers.
pub fn plain_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(|w| w.chars().flat_map(char::to_lowercase).collect()).collect()
}

/// Start offsets of every occurrence of `needle` in `haystack` as a
/// contiguous token run.
pub fn find_token_runs(haystack: &[String], needle: &[String]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    haystack
        .windows(needle.len())
        .enumerate()
        .filter(|(_, w)| *w == needle)
        .map(|(i, _)| i)
        .collect()
}
