//! Pseudo-references: an MR flattened to plain text so reference-based
//! metrics can run at generation time.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::mr::{AttrValue, MeaningRepresentation};
use crate::ontology::Ontology;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoReference {
    pub text: String,
    pub source_mr: MeaningRepresentation,
}

/// Drops parentheses and collapses the whitespace they leave behind.
fn flatten_value(value: &str) -> String {
    let without: String = value.chars().filter(|c| *c != '(' && *c != ')').collect();
    let mut out = String::with_capacity(without.len());
    for (i, word) in without.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// The text fragment one attribute contributes to the pseudo-reference.
pub fn attribute_fragment(slot: &str, value: &AttrValue, ontology: &Ontology) -> String {
    // Unknown slots cannot reach here on a validated MR; fall back to the rule.
    let phrase = || ontology.slot_phrase(slot).unwrap_or_else(|_| crate::ontology::humanize_slot_name(slot));
    match value {
        AttrValue::Categorical(v) if v.trim().is_empty() => phrase(),
        AttrValue::Categorical(v) => flatten_value(v),
        AttrValue::Bool(true) => phrase(),
        AttrValue::Bool(false) => {
            let mut s = String::from("no ");
            s.push_str(&phrase());
            s
        }
    }
}

/// Joins the attribute fragments in MR order with single spaces. Slot
/// names and the act name never appear; value casing is untouched.
pub fn build_pseudo_reference(mr: &MeaningRepresentation, ontology: &Ontology) -> PseudoReference {
    let parts: Vec<String> = mr
        .attributes
        .iter()
        .map(|a| attribute_fragment(&a.slot, &a.value, ontology))
        .filter(|s| !s.is_empty())
        .collect();
    PseudoReference { text: parts.join(" "), source_mr: mr.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mr::{parse_mr, Attribute};
    use crate::ontology::fixtures::games;
    use alloc::string::ToString;
    use proptest::prelude::*;

    #[test]
    fn table_one_pseudo_reference() {
        let o = games();
        let mr = parse_mr(
            "give_opinion(name[Call of Duty: Advanced Warfare], rating[excellent], developer[Sledgehammer Games], esrb[M (for Mature)])",
            &o,
        )
        .unwrap();
        assert_eq!(
            build_pseudo_reference(&mr, &o).text,
            "Call of Duty: Advanced Warfare excellent Sledgehammer Games M for Mature"
        );
    }

    #[test]
    fn boolean_fragments() {
        let o = games();
        let mr = parse_mr("inform(has_multiplayer[no])", &o).unwrap();
        assert_eq!(build_pseudo_reference(&mr, &o).text, "no multiplayer");
        let mr = parse_mr("suggest(name[Worms: Reloaded], available_on_steam[yes])", &o).unwrap();
        assert_eq!(build_pseudo_reference(&mr, &o).text, "Worms: Reloaded Steam");
    }

    #[test]
    fn single_value() {
        let o = games();
        let mr = parse_mr("suggest(name[X])", &o).unwrap();
        assert_eq!(build_pseudo_reference(&mr, &o).text, "X");
    }

    #[test]
    fn empty_value_renders_slot_phrase() {
        let o = games();
        let mr = parse_mr("request(player_perspective[])", &o).unwrap();
        assert_eq!(build_pseudo_reference(&mr, &o).text, "player perspective");
    }

    proptest! {
        #[test]
        fn pseudo_reference_holds_values_not_names(
            values in prop::collection::vec("[A-Z][a-z]{2,8}( [A-Z0-9][a-z0-9:]{0,6}){0,2}", 4),
            multi in any::<bool>(),
        ) {
            let o = games();
            let slots = ["name", "developer", "genres", "rating"];
            prop_assume!(values.iter().all(|v| v.split(' ').all(|w| !slots.contains(&w.to_lowercase().as_str()))));
            let mut attributes: Vec<Attribute> = slots
                .iter()
                .zip(&values)
                .map(|(s, v)| Attribute { slot: s.to_string(), value: AttrValue::Categorical(v.clone()) })
                .collect();
            attributes.push(Attribute { slot: "has_multiplayer".into(), value: AttrValue::Bool(multi) });
            let mr = MeaningRepresentation { dialogue_act: "recommend".into(), attributes };
            let text = build_pseudo_reference(&mr, &o).text;
            prop_assert!(!text.contains('('));
            prop_assert!(!text.contains("recommend"));
            for v in &values {
                prop_assert!(text.contains(v.as_str()));
            }
            let lower = text.to_lowercase();
            for s in &slots {
                prop_assert!(!lower.split(' ').any(|w| w == *s), "slot name {} leaked into {}", s, text);
            }
            prop_assert_eq!(text.ends_with("no multiplayer"), !multi);
        }
    }
}
