//! In-memory corpus items and the per-act balanced test subset.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mr::MeaningRepresentation;
use crate::prompts::Exemplar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// One MR with all of its human references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusItem {
    /// Position in the source file, for error messages and stable ids.
    pub row: usize,
    pub mr: MeaningRepresentation,
    pub references: Vec<String>,
    pub split: Split,
}

impl CorpusItem {
    /// One exemplar per reference.
    pub fn exemplars(&self) -> impl Iterator<Item = Exemplar> + '_ {
        self.references
            .iter()
            .filter(|r| !r.trim().is_empty())
            .map(|r| Exemplar { mr: self.mr.clone(), reference: r.clone() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dialogue act `{da}` has {available} items, {needed} requested")]
pub struct InsufficientExamples {
    pub da: String,
    pub needed: usize,
    pub available: usize,
}

/// Draws `per_da` items of every act present, without replacement. Output
/// is grouped by act in name order; within an act, the order is the
/// seeded draw order.
pub fn balanced_sample(items: &[CorpusItem], per_da: usize, seed: u64) -> Result<Vec<CorpusItem>, InsufficientExamples> {
    let mut by_da: BTreeMap<&str, Vec<&CorpusItem>> = BTreeMap::new();
    for item in items {
        by_da.entry(item.mr.dialogue_act.as_str()).or_default().push(item);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(by_da.len() * per_da);
    for (da, pool) in by_da {
        if pool.len() < per_da {
            return Err(InsufficientExamples { da: da.into(), needed: per_da, available: pool.len() });
        }
        out.extend(index::sample(&mut rng, pool.len(), per_da).into_iter().map(|i| pool[i].clone()));
    }
    Ok(out)
}
