//! Slot error rate on constructed texts with known errors.

mod common;

use common::{games, mr};
use darank_core::{parse_mr, score_ser, AttrValue, Attribute, MeaningRepresentation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-12;

/// (mr, text, expected missing, expected incorrect)
const CASES: &[(&str, &str, &[&str], &[&str])] = &[
    ("suggest(name[Portal 2])", "Have you played Portal 2?", &[], &[]),
    ("suggest(name[Portal 2])", "Have you played Portal?", &["name"], &[]),
    ("suggest(name[Portal 2])", "", &["name"], &[]),
    ("suggest(name[Portal 2])", "PORTAL 2 is neat", &[], &[]),
    ("inform(name[Portal 2], developer[Valve Corporation])", "Portal 2 is by Valve Corporation.", &[], &[]),
    ("inform(name[Portal 2], developer[Valve Corporation])", "Portal 2 is by Valve.", &["developer"], &[]),
    ("inform(name[Portal 2], developer[Valve Corporation])", "It is by Valve.", &["name", "developer"], &[]),
    ("give_opinion(name[Halo], rating[excellent])", "Halo is excellent.", &[], &[]),
    ("give_opinion(name[Halo], rating[excellent])", "Halo is one of the best.", &[], &[]),
    ("give_opinion(name[Halo], rating[excellent])", "I love Halo.", &[], &[]),
    ("give_opinion(name[Halo], rating[excellent])", "Halo is bad.", &[], &["rating"]),
    ("give_opinion(name[Halo], rating[excellent])", "Halo is average.", &[], &["rating"]),
    ("give_opinion(name[Halo], rating[excellent])", "Halo is a game.", &["rating"], &[]),
    ("give_opinion(name[Halo], rating[poor])", "Halo is bad.", &[], &[]),
    ("inform(name[Halo], esrb[M (for Mature)])", "Halo is rated M (for Mature).", &[], &[]),
    ("inform(name[Halo], esrb[M (for Mature)])", "Halo is rated M for Mature.", &[], &[]),
    ("inform(name[Halo], esrb[M (for Mature)])", "Halo is M-rated.", &[], &[]),
    ("inform(name[Halo], esrb[M (for Mature)])", "Halo is E-rated.", &[], &["esrb"]),
    ("inform(name[Halo], esrb[M (for Mature)])", "Halo is T (for Teen).", &[], &["esrb"]),
    ("inform(name[Halo], has_multiplayer[yes])", "Halo has multiplayer.", &[], &[]),
    ("inform(name[Halo], has_multiplayer[yes])", "Halo has no multiplayer.", &[], &["has_multiplayer"]),
    ("inform(name[Halo], has_multiplayer[yes])", "Halo doesn't offer multiplayer.", &[], &["has_multiplayer"]),
    ("inform(name[Halo], has_multiplayer[no])", "Halo has no multiplayer.", &[], &[]),
    ("inform(name[Halo], has_multiplayer[no])", "Halo is not a multiplayer game.", &[], &[]),
    ("inform(name[Halo], has_multiplayer[no])", "Halo has multiplayer.", &[], &["has_multiplayer"]),
    ("inform(name[Halo], has_multiplayer[no])", "Halo is a shooter.", &["has_multiplayer"], &[]),
    ("suggest(name[Worms: Reloaded], available_on_steam[yes])", "Worms: Reloaded is on Steam.", &[], &[]),
    ("suggest(name[Worms: Reloaded], available_on_steam[yes])", "Worms: Reloaded is not on Steam.", &[], &["available_on_steam"]),
    ("inform(name[Halo], genres[shooter, action])", "Halo is an action shooter.", &[], &[]),
    ("inform(name[Halo], genres[shooter, action])", "Halo is a shooter.", &["genres"], &[]),
];

#[test]
fn constructed_cases() {
    let o = games();
    for (i, (raw, text, missing, incorrect)) in CASES.iter().enumerate() {
        let m = mr(raw);
        let r = score_ser(&m, text, &o);
        assert_eq!(r.missing, *missing, "case {i}: {text}");
        assert_eq!(r.incorrect, *incorrect, "case {i}: {text}");
        let expected = (missing.len() + incorrect.len()) as f64 / m.attributes.len() as f64;
        assert!((r.ser - expected).abs() < TOL, "case {i}");
        assert!((r.sacc - (1.0 - expected)).abs() < TOL);
    }
}

#[test]
fn content_free_act_has_zero_error() {
    let o = games();
    let m = parse_mr("request()", &o).unwrap();
    let r = score_ser(&m, "What games do you like?", &o);
    assert_eq!((r.total_slots, r.ser, r.sacc), (0, 0.0, 1.0));
}

/// Each slot's value is drawn from its own word pool so deleting one value
/// can never remove another slot's evidence.
#[test]
fn random_deletions() {
    let o = games();
    let pools: [(&str, &[&str]); 4] = [
        ("name", &["Zorblax", "Quintor", "Velmora", "Drakhan"]),
        ("developer", &["Hexworks", "Pixelforge", "Brightmoor"]),
        ("genres", &["roguelike", "metroidvania", "soulslike"]),
        ("player_perspective", &["isometric", "overhead", "sidescrolling"]),
    ];
    let filler = ["it", "is", "a", "game", "that", "people", "enjoy", "really"];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..500 {
        let k = rng.random_range(1..=pools.len());
        let mut chosen: Vec<usize> = (0..pools.len()).collect();
        chosen.shuffle(&mut rng);
        chosen.truncate(k);
        let attributes: Vec<Attribute> = chosen
            .iter()
            .map(|&i| {
                let (slot, words) = pools[i];
                let n_words = rng.random_range(1..=2);
                let value: Vec<&str> = (0..n_words).map(|_| words[rng.random_range(0..words.len())]).collect();
                Attribute { slot: slot.into(), value: AttrValue::Categorical(value.join(" ")) }
            })
            .collect();
        let m = MeaningRepresentation { dialogue_act: "inform".into(), attributes };
        m.validate(&o).unwrap();
        let deleted: Vec<bool> = (0..k).map(|_| rng.random_bool(0.4)).collect();
        let mut words: Vec<String> = Vec::new();
        for (a, del) in m.attributes.iter().zip(&deleted) {
            words.push(filler[rng.random_range(0..filler.len())].into());
            if !del {
                if let AttrValue::Categorical(v) = &a.value {
                    words.push(v.clone());
                }
            }
        }
        let text = words.join(" ");
        let r = score_ser(&m, &text, &o);
        let n_del = deleted.iter().filter(|d| **d).count();
        let expected = n_del as f64 / k as f64;
        assert!((r.ser - expected).abs() < TOL, "case {case}: {m} / {text}: {} vs {expected}", r.ser);
        assert_eq!(r.missing.len(), n_del);
        assert!(r.incorrect.is_empty());
    }
}
