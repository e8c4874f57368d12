#![allow(dead_code)]

use darank_core::{parse_mr, Candidate, MeaningRepresentation, Ontology, ScoreVector};

pub fn games() -> Ontology {
    let raw = include_str!("../fixtures/games.json");
    serde_json::from_str::<Ontology>(raw).unwrap().validate().unwrap()
}

pub fn mr(raw: &str) -> MeaningRepresentation {
    parse_mr(raw, &games()).unwrap()
}

pub fn candidate(gen_index: usize) -> Candidate {
    Candidate {
        text: format!("candidate {gen_index}"),
        raw: String::new(),
        prompt_id: "p".into(),
        gen_index,
        padded: false,
    }
}

pub fn scores(label: &str, sacc: f64, pbleu: f64, fluency: f64) -> ScoreVector {
    ScoreVector { dac_label: label.into(), dac_prob: 0.5, sacc, pbleu, pbbleu: 0.5, fluency }
}
