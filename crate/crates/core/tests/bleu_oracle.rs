//! BLEU against a naive nested-loop reimplementation.

use darank_core::scoring::bleu::{corpus_bleu, sentence_bleu, MAX_ORDER, PBLEU_EPSILON};
use darank_core::text::bleu_tokens;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Count occurrences of `gram` in `seq` by scanning every offset.
fn occurrences(seq: &[String], gram: &[String]) -> usize {
    let mut c = 0;
    if seq.len() >= gram.len() {
        for i in 0..=seq.len() - gram.len() {
            if (0..gram.len()).all(|j| seq[i + j] == gram[j]) {
                c += 1;
            }
        }
    }
    c
}

/// Clipped matches, counting each distinct candidate n-gram once.
fn naive_clipped(cand: &[String], refs: &[Vec<String>], n: usize) -> (usize, usize) {
    if cand.len() < n {
        return (0, 0);
    }
    let mut seen: Vec<&[String]> = Vec::new();
    let mut matches = 0;
    for i in 0..=cand.len() - n {
        let g = &cand[i..i + n];
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        let max_ref = refs.iter().map(|r| occurrences(r, g)).max().unwrap_or(0);
        matches += occurrences(cand, g).min(max_ref);
    }
    (matches, cand.len() - n + 1)
}

fn naive_sentence(cand: &[String], r: &[String], eps: f64) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let refs = vec![r.to_vec()];
    let mut precisions = Vec::new();
    for n in 1..=MAX_ORDER.min(cand.len()) {
        let (m, t) = naive_clipped(cand, &refs, n);
        precisions.push(if m == 0 { eps / t as f64 } else { m as f64 / t as f64 });
    }
    let geo = precisions.iter().product::<f64>().powf(1.0 / precisions.len() as f64);
    let (c, rl) = (cand.len() as f64, r.len() as f64);
    let bp = if c > rl { 1.0 } else { (1.0 - rl / c).exp() };
    bp * geo
}

fn random_sentence(rng: &mut ChaCha8Rng, vocab: &[&str]) -> Vec<String> {
    let len = rng.random_range(1..14);
    (0..len).map(|_| vocab[rng.random_range(0..vocab.len())].to_string()).collect()
}

#[test]
fn hand_computed_value() {
    // p1..p4 = 4/5, 3/4, 2/3, 1/2, equal lengths.
    let expected = (0.8f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
    let got = sentence_bleu(&toks("a b c d e"), &toks("a b c d f"), PBLEU_EPSILON);
    assert!((got - expected).abs() < TOL, "{got} vs {expected}");
    let got = corpus_bleu(&[toks("a b c d e")], &[vec![toks("a b c d f")]]);
    assert!((got - expected).abs() < TOL);
    assert_eq!(sentence_bleu(&toks("the cat sat on the mat"), &toks("the cat sat on the mat"), PBLEU_EPSILON), 1.0);
}

#[test]
fn sentence_bleu_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let vocab = ["the", "game", "is", "fun", "portal", "steam", "a", "great", "puzzle", "you"];
    for case in 0..50 {
        let c = random_sentence(&mut rng, &vocab);
        let r = random_sentence(&mut rng, &vocab);
        let got = sentence_bleu(&c, &r, PBLEU_EPSILON);
        let want = naive_sentence(&c, &r, PBLEU_EPSILON);
        assert!((got - want).abs() < TOL, "case {case}: {c:?} / {r:?}: {got} vs {want}");
        assert!((0.0..=1.0).contains(&got));
    }
}

#[test]
fn corpus_bleu_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vocab = ["the", "game", "is", "fun", "portal", "a"];
    for case in 0..20 {
        let n = rng.random_range(1..6);
        let cands: Vec<Vec<String>> = (0..n).map(|_| random_sentence(&mut rng, &vocab)).collect();
        let refs: Vec<Vec<Vec<String>>> = (0..n)
            .map(|_| (0..rng.random_range(1..4)).map(|_| random_sentence(&mut rng, &vocab)).collect())
            .collect();
        let (mut m, mut t) = ([0usize; 4], [0usize; 4]);
        let (mut c_len, mut r_len) = (0usize, 0usize);
        for (c, rs) in cands.iter().zip(&refs) {
            for n in 1..=4 {
                let (a, b) = naive_clipped(c, rs, n);
                m[n - 1] += a;
                t[n - 1] += b;
            }
            c_len += c.len();
            let mut lens: Vec<usize> = rs.iter().map(Vec::len).collect();
            lens.sort_by_key(|&l| (l.abs_diff(c.len()), l));
            r_len += lens[0];
        }
        let want = if m.contains(&0) {
            0.0
        } else {
            let geo = (0..4).map(|i| m[i] as f64 / t[i] as f64).product::<f64>().powf(0.25);
            let bp = if c_len > r_len { 1.0 } else { (1.0 - r_len as f64 / c_len as f64).exp() };
            bp * geo
        };
        let got = corpus_bleu(&cands, &refs);
        assert!((got - want).abs() < TOL, "case {case}: {got} vs {want}");
    }
}

#[test]
fn tokenization_splits_punctuation() {
    assert_eq!(bleu_tokens("Worms: Reloaded, right?"), toks("worms : reloaded , right ?"));
}
