#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use darank::corpus::save_corpus;
use darank::RunConfig;
use darank_core::mock::realize;
use darank_core::{parse_mr, CorpusItem, Ontology, Split};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn viggo() -> Ontology {
    darank::ontologies::builtin("viggo").unwrap()
}

const SYLLABLES: &[&str] = &["ka", "vo", "mi", "ru", "zel", "tan", "quo", "bex", "lir", "dov", "pra", "sun"];

/// A made-up word, unique per `i`, built from letters only.
fn word(i: usize) -> String {
    let mut s = String::new();
    let mut n = i;
    loop {
        s.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
        if n == 0 {
            break;
        }
    }
    let mut c = s.chars();
    c.next().unwrap().to_uppercase().chain(c).collect()
}

const GENRES: &[&str] = &["puzzle", "racing", "strategy", "shooter", "puzzle, racing", "strategy, shooter"];
const RATINGS: &[&str] = &["excellent", "good", "average", "poor"];
const ESRB: &[&str] = &["E (for Everyone)", "T (for Teen)", "M (for Mature)"];
const PERSPECTIVES: &[&str] = &["first person", "third person", "side view", "bird view"];
const DAS: &[&str] = &[
    "confirm",
    "give_opinion",
    "inform",
    "recommend",
    "request",
    "request_attribute",
    "request_explanation",
    "suggest",
    "verify_attribute",
];

/// A random ViGGO MR for `da` whose values never share a token.
pub fn synthetic_mr(da: &str, uid: usize, rng: &mut ChaCha8Rng) -> String {
    if da == "request_attribute" {
        let slot = ["player_perspective", "genres", "esrb"].choose(rng).unwrap();
        return format!("{da}(name[{} Quest], {slot}[])", word(uid));
    }
    let mut attrs = vec![format!("name[{} Quest]", word(uid))];
    if rng.random_bool(0.5) {
        attrs.push(format!("developer[{} Works]", word(uid + 7919)));
    }
    if rng.random_bool(0.5) {
        attrs.push(format!("genres[{}]", GENRES.choose(rng).unwrap()));
    }
    if rng.random_bool(0.4) {
        attrs.push(format!("rating[{}]", RATINGS.choose(rng).unwrap()));
    }
    if rng.random_bool(0.3) {
        attrs.push(format!("esrb[{}]", ESRB.choose(rng).unwrap()));
    }
    if rng.random_bool(0.3) {
        attrs.push(format!("player_perspective[{}]", PERSPECTIVES.choose(rng).unwrap()));
    }
    if rng.random_bool(0.3) {
        attrs.push(format!("release_year[{}]", rng.random_range(1990..2020)));
    }
    if rng.random_bool(0.3) {
        attrs.push(format!("has_linux_release[{}]", if rng.random_bool(0.5) { "yes" } else { "no" }));
    }
    if rng.random_bool(0.3) {
        attrs.push(format!("available_on_steam[{}]", if rng.random_bool(0.5) { "yes" } else { "no" }));
    }
    format!("{da}({})", attrs.join(", "))
}

/// `per_da` items for each of the nine ViGGO acts, referenced by a clean
/// template realization.
pub fn synthetic_items(ontology: &Ontology, per_da: usize, seed: u64, split: Split, uid_base: usize) -> Vec<CorpusItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut uid = uid_base;
    for da in DAS {
        for _ in 0..per_da {
            let mr = parse_mr(&synthetic_mr(da, uid, &mut rng), ontology).unwrap();
            let reference = realize(&mr, ontology, &[], &mut rng);
            out.push(CorpusItem { row: out.len() + 2, mr, references: vec![reference], split });
            uid += 1;
        }
    }
    out
}

/// Writes `train.csv`, `test.csv` and `run.toml` into `dir` and returns the
/// loaded config. `extra` is appended to the TOML verbatim.
pub fn write_experiment(dir: &Path, train_per_da: usize, test_per_da: usize, extra: &str) -> RunConfig {
    let o = viggo();
    save_corpus(&dir.join("train.csv"), &synthetic_items(&o, train_per_da, 1, Split::Train, 0)).unwrap();
    save_corpus(&dir.join("test.csv"), &synthetic_items(&o, test_per_da, 2, Split::Test, 100_000)).unwrap();
    let toml = format!(
        "seed = 7\ndomain = \"viggo\"\nn_exemplars = 2\nout_dir = \"out\"\n{extra}\n[corpus]\ntrain = \"train.csv\"\ntest = \"test.csv\"\n"
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, toml).unwrap();
    RunConfig::load(&path).unwrap()
}

pub fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

pub fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().path()).collect(),
        Err(_) => Vec::new(),
    };
    v.sort();
    v
}

/// Serves `router` on an ephemeral local port from a background runtime
/// that lives for the rest of the test process.
pub fn serve(router: axum::Router) -> String {
    let (tx, rx) = std::sync::mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

/// A local address nothing listens on.
pub fn dead_url() -> String {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}")
}
