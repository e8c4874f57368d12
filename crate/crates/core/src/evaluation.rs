//! Run-level metrics: PERF, SACC, DAC and BLEU over selected outputs,
//! before/after-ranking comparison, and Pearson correlation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mr::MeaningRepresentation;
use crate::ranking::RankedPool;
use crate::scoring::{corpus_bleu, ScoreVector};
use crate::text::bleu_tokens;

/// Percentages in [0, 100].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricBlock {
    pub n: usize,
    pub perf: f64,
    pub sacc: f64,
    pub dac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeforeAfter {
    /// Over every candidate of every pool.
    pub before: MetricBlock,
    /// Over the selected candidate of each pool.
    pub after: MetricBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_items: usize,
    pub perf: f64,
    pub sacc: f64,
    pub dac: f64,
    /// Corpus BLEU-4 in [0, 1] against human references, when supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu: Option<f64>,
    pub per_da: BTreeMap<String, MetricBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before_after: Option<BeforeAfter>,
}

/// One output to evaluate.
#[derive(Debug, Clone, Copy)]
pub struct Scored<'a> {
    pub mr: &'a MeaningRepresentation,
    pub text: &'a str,
    pub scores: &'a ScoreVector,
}

/// Correct act label and no slot errors.
pub fn is_perfect(mr: &MeaningRepresentation, v: &ScoreVector) -> bool {
    is_dac_correct(mr, v) && v.sacc >= 1.0
}

/// Any label other than the target, `other` included, counts as wrong.
pub fn is_dac_correct(mr: &MeaningRepresentation, v: &ScoreVector) -> bool {
    v.dac_label == mr.dialogue_act
}

fn block<'a>(items: impl IntoIterator<Item = (&'a MeaningRepresentation, &'a ScoreVector)>) -> MetricBlock {
    let (mut n, mut perf, mut dac) = (0usize, 0usize, 0usize);
    let mut sacc = 0.0;
    for (mr, v) in items {
        n += 1;
        perf += usize::from(is_perfect(mr, v));
        dac += usize::from(is_dac_correct(mr, v));
        sacc += v.sacc;
    }
    if n == 0 {
        return MetricBlock::default();
    }
    let pct = |k: f64| 100.0 * k / n as f64;
    MetricBlock { n, perf: pct(perf as f64), sacc: pct(sacc), dac: pct(dac as f64) }
}

pub fn evaluate_run(selected: &[Scored<'_>], references: Option<&[Vec<String>]>) -> EvaluationReport {
    let overall = block(selected.iter().map(|s| (s.mr, s.scores)));
    let mut by_da: BTreeMap<&str, Vec<(&MeaningRepresentation, &ScoreVector)>> = BTreeMap::new();
    for s in selected {
        by_da.entry(s.mr.dialogue_act.as_str()).or_default().push((s.mr, s.scores));
    }
    let per_da = by_da.into_iter().map(|(da, items)| (da.to_string(), block(items))).collect();

    let bleu = references.and_then(|refs| {
        let pairs: Vec<(Vec<String>, Vec<Vec<String>>)> = selected
            .iter()
            .zip(refs)
            .filter(|(_, r)| !r.is_empty())
            .map(|(s, r)| (bleu_tokens(s.text), r.iter().map(|x| bleu_tokens(x)).collect()))
            .collect();
        if pairs.is_empty() {
            return None;
        }
        let (cands, refs): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        Some(corpus_bleu(&cands, &refs))
    });

    EvaluationReport {
        n_items: overall.n,
        perf: overall.perf,
        sacc: overall.sacc,
        dac: overall.dac,
        bleu,
        per_da,
        before_after: None,
    }
}

pub fn before_after(pools: &[RankedPool]) -> BeforeAfter {
    BeforeAfter {
        before: block(pools.iter().flat_map(|p| p.entries.iter().map(move |e| (&p.mr, &e.scores)))),
        after: block(pools.iter().map(|p| (&p.mr, &p.best().scores))),
    }
}

/// Evaluates the selected output of each pool and attaches the
/// before/after block. `references[i]` belongs to `pools[i]`.
pub fn evaluate_pools(pools: &[RankedPool], references: Option<&[Vec<String>]>) -> EvaluationReport {
    let selected: Vec<Scored<'_>> = pools
        .iter()
        .map(|p| {
            let e = p.best();
            Scored { mr: &p.mr, text: &e.candidate.text, scores: &e.scores }
        })
        .collect();
    let mut report = evaluate_run(&selected, references);
    report.before_after = Some(before_after(pools));
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrelationError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("a series has zero variance")]
    DegenerateVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value from the t distribution with n - 2 degrees of freedom.
    pub p: f64,
}

/// Pearson correlation with a two-sided t-test p-value.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(CorrelationError::TooFewPoints(n));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(CorrelationError::DegenerateVariance);
    }
    let r = (sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if 1.0 - r * r <= 0.0 {
        0.0
    } else {
        let t2 = r * r * df / (1.0 - r * r);
        regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t2))
    };
    Ok(Correlation { r, p })
}

/// I_x(a, b) via the continued fraction (modified Lentz).
fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log(1.0 - x);
    if x < (a + 1.0) / (a + b + 2.0) {
        libm::exp(ln_front) * beta_cf(a, b, x) / a
    } else {
        1.0 - libm::exp(ln_front) * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub metric: String,
    pub n: usize,
    /// `None` when a series had no variance.
    pub r: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub rows: Vec<CorrelationRow>,
}

type Metric = fn(&ScoreVector) -> f64;

/// Correlates SACC with each pseudo-metric over every candidate.
pub fn correlation_table(pools: &[RankedPool]) -> CorrelationTable {
    let all: Vec<&ScoreVector> = pools.iter().flat_map(|p| p.entries.iter().map(|e| &e.scores)).collect();
    let sacc: Vec<f64> = all.iter().map(|v| v.sacc).collect();
    let metrics: [(&str, Metric); 3] =
        [("pbleu", |v| v.pbleu), ("pbbleu", |v| v.pbbleu), ("fluency", |v| v.fluency)];
    let rows = metrics
        .iter()
        .map(|(name, f)| {
            let ys: Vec<f64> = all.iter().map(|v| f(v)).collect();
            let c = pearson(&sacc, &ys).ok();
            CorrelationRow { metric: name.to_string(), n: ys.len(), r: c.map(|c| c.r), p_value: c.map(|c| c.p) }
        })
        .collect();
    CorrelationTable { rows }
}
