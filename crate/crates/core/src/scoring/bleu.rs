//! BLEU-4: smoothed sentence-level for pseudo-references, plain
//! corpus-level for human references.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub const MAX_ORDER: usize = 4;

/// Numerator used for an n-gram order with no matches.
pub const PBLEU_EPSILON: f64 = 0.1;

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut counts = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped matches and candidate n-gram total for one order against
/// several references.
fn clipped(candidate: &[String], references: &[&[String]], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let mut max_ref: BTreeMap<&[String], usize> = BTreeMap::new();
    for r in references {
        for (g, c) in ngram_counts(r, n) {
            let e = max_ref.entry(g).or_insert(0);
            *e = (*e).max(c);
        }
    }
    let matches = cand.iter().map(|(g, c)| (*c).min(max_ref.get(g).copied().unwrap_or(0))).sum();
    (matches, candidate.len().saturating_sub(n - 1))
}

fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    if cand_len == 0 {
        0.0
    } else if cand_len > ref_len {
        1.0
    } else {
        libm::exp(1.0 - ref_len as f64 / cand_len as f64)
    }
}

/// Sentence BLEU-4 against one reference. Orders longer than the
/// candidate are left out of the geometric mean; an order with zero
/// matches contributes `epsilon / total` instead of zero. Empty candidates
/// score 0.
pub fn sentence_bleu(candidate: &[String], reference: &[String], epsilon: f64) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=MAX_ORDER {
        let (matches, total) = clipped(candidate, &[reference], n);
        if total == 0 {
            break;
        }
        let p = if matches == 0 { epsilon / total as f64 } else { matches as f64 / total as f64 };
        log_sum += libm::log(p);
        orders += 1;
    }
    brevity_penalty(candidate.len(), reference.len()) * libm::exp(log_sum / orders as f64)
}

/// Unsmoothed corpus BLEU-4 with the closest reference length (shorter on
/// ties). Returns 0 when any order has no matches or the corpus is empty.
pub fn corpus_bleu(candidates: &[Vec<String>], references: &[Vec<Vec<String>>]) -> f64 {
    let mut matches = [0usize; MAX_ORDER];
    let mut totals = vec![0usize; MAX_ORDER];
    let (mut cand_len, mut ref_len) = (0usize, 0usize);
    for (cand, refs) in candidates.iter().zip(references) {
        let refs: Vec<&[String]> = refs.iter().map(Vec::as_slice).collect();
        for n in 1..=MAX_ORDER {
            let (m, t) = clipped(cand, &refs, n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
        cand_len += cand.len();
        ref_len += refs
            .iter()
            .map(|r| r.len())
            .min_by_key(|&l| (l.abs_diff(cand.len()), l))
            .unwrap_or(0);
    }
    if matches.contains(&0) {
        return 0.0;
    }
    let log_mean = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| libm::log(m as f64 / t as f64))
        .sum::<f64>()
        / MAX_ORDER as f64;
    brevity_penalty(cand_len, ref_len) * libm::exp(log_mean)
}
