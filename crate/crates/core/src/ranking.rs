//! Ranking functions over scored candidate pools.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::Candidate;
use crate::mr::MeaningRepresentation;
use crate::ontology::OTHER_DA;
use crate::scoring::ScoreVector;

/// Values within this distance of a stage maximum count as tied with it.
pub const STAGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RankingFunction {
    /// DAC * SACC * P(S)
    #[serde(rename = "rf1")]
    Rf1,
    /// DAC * SACC * pBLEU * P(S)
    #[serde(rename = "rf2")]
    Rf2,
    /// DAC | SACC | pBLEU | P(S), lexicographic
    #[serde(rename = "rf2da")]
    Rf2Da,
    /// DAC * pBBLEU * P(S)
    #[serde(rename = "rf3")]
    Rf3,
    /// pBBLEU
    #[serde(rename = "rf4")]
    Rf4,
    /// pBLEU
    #[serde(rename = "rf5")]
    Rf5,
}

impl RankingFunction {
    pub const ALL: [RankingFunction; 6] = [
        RankingFunction::Rf1,
        RankingFunction::Rf2,
        RankingFunction::Rf2Da,
        RankingFunction::Rf3,
        RankingFunction::Rf4,
        RankingFunction::Rf5,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RankingFunction::Rf1 => "rf1",
            RankingFunction::Rf2 => "rf2",
            RankingFunction::Rf2Da => "rf2da",
            RankingFunction::Rf3 => "rf3",
            RankingFunction::Rf4 => "rf4",
            RankingFunction::Rf5 => "rf5",
        }
    }
}

impl fmt::Display for RankingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankingError {
    #[error("cannot rank an empty pool")]
    EmptyPool,
    #[error("unknown ranking function `{0}`")]
    UnknownFunction(String),
}

impl FromStr for RankingFunction {
    type Err = RankingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', '-'], "");
        RankingFunction::ALL
            .into_iter()
            .find(|rf| rf.id() == norm)
            .ok_or_else(|| RankingError::UnknownFunction(s.to_string()))
    }
}

/// Scalar score for the product/singleton functions; `None` for RF2_DA.
pub fn rf_scalar(v: &ScoreVector, rf: RankingFunction) -> Option<f64> {
    Some(match rf {
        RankingFunction::Rf1 => v.dac_prob * v.sacc * v.fluency,
        RankingFunction::Rf2 => v.dac_prob * v.sacc * v.pbleu * v.fluency,
        RankingFunction::Rf3 => v.dac_prob * v.pbbleu * v.fluency,
        RankingFunction::Rf4 => v.pbbleu,
        RankingFunction::Rf5 => v.pbleu,
        RankingFunction::Rf2Da => return None,
    })
}

fn ordered(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

/// Keeps the members whose metric is within tolerance of the maximum.
fn keep_max(members: Vec<usize>, metric: impl Fn(usize) -> f64) -> Vec<usize> {
    let best = members.iter().map(|&i| ordered(metric(i))).fold(f64::NEG_INFINITY, f64::max);
    members.into_iter().filter(|&i| ordered(metric(i)) >= best - STAGE_TOLERANCE).collect()
}

/// One pass of the four-stage filter over `remaining`; returns the winner.
fn rf2da_pick(pool: &[(Candidate, ScoreVector)], remaining: &[usize], target_da: &str) -> usize {
    let with_label = |label: &str| -> Vec<usize> {
        remaining.iter().copied().filter(|&i| pool[i].1.dac_label == label).collect()
    };
    let mut group = with_label(target_da);
    if group.is_empty() {
        group = with_label(OTHER_DA);
    }
    if group.is_empty() {
        group = remaining.to_vec();
    }
    let group = keep_max(group, |i| pool[i].1.sacc);
    let group = keep_max(group, |i| pool[i].1.pbleu);
    let group = keep_max(group, |i| pool[i].1.fluency);
    group.into_iter().min_by_key(|&i| pool[i].0.gen_index).expect("stage filters never empty a non-empty group")
}

/// Lexicographic ranking: label match (falling back to `other`, then to
/// everything), then max SACC, then max pBLEU, then max fluency, then
/// lowest `gen_index`. The full ordering is built by repeatedly selecting
/// the winner among the candidates not yet placed.
pub fn rank_rf2da(pool: Vec<(Candidate, ScoreVector)>, target_da: &str) -> Vec<(Candidate, ScoreVector)> {
    let mut remaining: Vec<usize> = (0..pool.len()).collect();
    let mut order = Vec::with_capacity(pool.len());
    while !remaining.is_empty() {
        let pick = rf2da_pick(&pool, &remaining, target_da);
        remaining.retain(|&i| i != pick);
        order.push(pick);
    }
    let mut slots: Vec<Option<(Candidate, ScoreVector)>> = pool.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().expect("each index placed once")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub candidate: Candidate,
    pub scores: ScoreVector,
    /// Scalar ranking score; absent for RF2_DA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPool {
    pub mr: MeaningRepresentation,
    pub rf: RankingFunction,
    /// Best first.
    pub entries: Vec<RankedEntry>,
    pub selected: usize,
}

impl RankedPool {
    pub fn best(&self) -> &RankedEntry {
        &self.entries[self.selected]
    }

    /// The same candidates re-ranked under another function.
    pub fn rerank(&self, rf: RankingFunction) -> RankedPool {
        let pool = self.entries.iter().map(|e| (e.candidate.clone(), e.scores.clone())).collect();
        select_best(&self.mr, pool, rf).expect("a ranked pool is never empty")
    }
}

/// Orders a pool best-first under `rf`. Scalar functions sort descending
/// with ties broken by ascending `gen_index`; NaN scores sort last.
pub fn select_best(
    mr: &MeaningRepresentation,
    pool: Vec<(Candidate, ScoreVector)>,
    rf: RankingFunction,
) -> Result<RankedPool, RankingError> {
    if pool.is_empty() {
        return Err(RankingError::EmptyPool);
    }
    let entries: Vec<RankedEntry> = if rf == RankingFunction::Rf2Da {
        rank_rf2da(pool, &mr.dialogue_act)
            .into_iter()
            .map(|(candidate, scores)| RankedEntry { candidate, scores, key: None })
            .collect()
    } else {
        let mut entries: Vec<RankedEntry> = pool
            .into_iter()
            .map(|(candidate, scores)| {
                let key = rf_scalar(&scores, rf);
                RankedEntry { candidate, scores, key }
            })
            .collect();
        entries.sort_by(|a, b| {
            let (ka, kb) = (ordered(a.key.unwrap_or(f64::NAN)), ordered(b.key.unwrap_or(f64::NAN)));
            kb.total_cmp(&ka).then(a.candidate.gen_index.cmp(&b.candidate.gen_index))
        });
        entries
    };
    Ok(RankedPool { mr: mr.clone(), rf, entries, selected: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mr::AttrValue;
    use alloc::vec;

    fn v(label: &str, dac_prob: f64, sacc: f64, pbleu: f64, pbbleu: f64, fluency: f64) -> ScoreVector {
        ScoreVector { dac_label: label.into(), dac_prob, sacc, pbleu, pbbleu, fluency }
    }

    fn c(i: usize) -> Candidate {
        Candidate { text: alloc::format!("c{i}"), raw: String::new(), prompt_id: "p".into(), gen_index: i, padded: false }
    }

    fn mr() -> MeaningRepresentation {
        MeaningRepresentation {
            dialogue_act: "suggest".into(),
            attributes: vec![crate::mr::Attribute { slot: "name".into(), value: AttrValue::Categorical("X".into()) }],
        }
    }

    #[test]
    fn scalar_arithmetic() {
        let s = v("suggest", 1.0, 0.5, 1.0, 0.73, 0.1);
        assert!((rf_scalar(&s, RankingFunction::Rf1).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(rf_scalar(&s, RankingFunction::Rf4), Some(0.73));
        assert_eq!(rf_scalar(&s, RankingFunction::Rf1), rf_scalar(&s, RankingFunction::Rf2));
        assert_eq!(rf_scalar(&s, RankingFunction::Rf2Da), None);
    }

    #[test]
    fn label_match_beats_sacc() {
        let pool = vec![(c(0), v("suggest", 1.0, 0.8, 0.5, 0.5, 0.5)), (c(1), v("inform", 0.0, 1.0, 0.5, 0.5, 0.5))];
        let ranked = select_best(&mr(), pool, RankingFunction::Rf2Da).unwrap();
        assert_eq!(ranked.best().candidate.gen_index, 0);
    }

    #[test]
    fn other_preferred_when_no_match() {
        let pool = vec![
            (c(0), v("inform", 0.0, 1.0, 0.9, 0.5, 0.9)),
            (c(1), v(OTHER_DA, 0.0, 0.5, 0.1, 0.5, 0.1)),
            (c(2), v("recommend", 0.0, 1.0, 1.0, 0.5, 1.0)),
        ];
        let ranked = select_best(&mr(), pool, RankingFunction::Rf2Da).unwrap();
        assert_eq!(ranked.best().candidate.gen_index, 1);
        let pool = vec![(c(0), v("inform", 0.0, 0.5, 0.9, 0.5, 0.9)), (c(1), v("recommend", 0.0, 1.0, 0.1, 0.5, 0.1))];
        assert_eq!(select_best(&mr(), pool, RankingFunction::Rf2Da).unwrap().best().candidate.gen_index, 1);
    }

    #[test]
    fn pbleu_then_fluency_then_index() {
        let pool = vec![(c(0), v("suggest", 1.0, 1.0, 0.4, 0.5, 0.9)), (c(1), v("suggest", 1.0, 1.0, 0.9, 0.5, 0.1))];
        assert_eq!(select_best(&mr(), pool, RankingFunction::Rf2Da).unwrap().best().candidate.gen_index, 1);
        let pool = vec![
            (c(2), v("suggest", 1.0, 1.0, 0.9, 0.5, 0.5)),
            (c(1), v("suggest", 1.0, 1.0, 0.9, 0.5, 0.5)),
            (c(0), v("suggest", 1.0, 1.0, 0.9, 0.5, 0.4)),
        ];
        let r = select_best(&mr(), pool, RankingFunction::Rf2Da).unwrap();
        assert_eq!(r.entries.iter().map(|e| e.candidate.gen_index).collect::<Vec<_>>(), vec![1, 2, 0]);
    }

    #[test]
    fn scalar_ties_by_gen_index_and_singletons() {
        let pool = vec![(c(3), v("suggest", 1.0, 1.0, 1.0, 0.5, 0.5)), (c(1), v("suggest", 1.0, 1.0, 1.0, 0.5, 0.5))];
        for rf in RankingFunction::ALL {
            let r = select_best(&mr(), pool.clone(), rf).unwrap();
            assert_eq!(r.best().candidate.gen_index, 1, "{rf}");
            assert_eq!(r.selected, 0);
            let single = select_best(&mr(), vec![pool[0].clone()], rf).unwrap();
            assert_eq!(single.best().candidate.gen_index, 3);
        }
        assert_eq!(select_best(&mr(), vec![], RankingFunction::Rf1), Err(RankingError::EmptyPool));
    }

    #[test]
    fn nan_sorts_last() {
        let pool = vec![(c(0), v("suggest", 1.0, 1.0, 1.0, f64::NAN, 0.5)), (c(1), v("suggest", 1.0, 1.0, 1.0, 0.1, 0.5))];
        assert_eq!(select_best(&mr(), pool, RankingFunction::Rf4).unwrap().best().candidate.gen_index, 1);
    }

    #[test]
    fn adversarial_rf1_vs_rf2da() {
        // RF1 favours a fluent wrong-act candidate holding a little target mass.
        let pool = vec![
            (c(0), v("inform", 0.45, 1.0, 0.5, 0.5, 0.9)),
            (c(1), v("suggest", 0.55, 1.0, 0.5, 0.5, 0.3)),
        ];
        let rf1 = select_best(&mr(), pool.clone(), RankingFunction::Rf1).unwrap();
        let da = select_best(&mr(), pool, RankingFunction::Rf2Da).unwrap();
        assert_eq!(rf1.best().candidate.gen_index, 0);
        assert_eq!(da.best().candidate.gen_index, 1);
    }

    #[test]
    fn parse_ids() {
        for rf in RankingFunction::ALL {
            assert_eq!(rf.id().parse::<RankingFunction>().unwrap(), rf);
        }
        assert_eq!("RF2_DA".parse::<RankingFunction>().unwrap(), RankingFunction::Rf2Da);
        assert!("rf9".parse::<RankingFunction>().is_err());
    }
}
