//! sample → prompt → generate → score → rank → evaluate, with resumable
//! generation and deterministic artifacts.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use darank_core::evaluation::{correlation_table, evaluate_pools, CorrelationTable};
use darank_core::generation::{completion_request, overgenerate, Candidate, CompletionRequest, Generator};
use darank_core::{
    assemble_scores, balanced_sample, render_prompt, sample_exemplars, select_best, CorpusItem, Ontology, RankedPool,
    RankingFunction, Scorer, Split, StubScorer,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, ScorerKind};
use crate::corpus::{exemplar_pool, load_corpus};
use crate::error::DarankError;
use crate::generators::{request_key, sha256_hex, Binding};
use crate::ontologies;
use crate::report::{emit_report, read_json, write_json, Provenance, ReportFile, ReportRow};
use crate::scorer_client::RemoteScorer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub item_id: String,
    /// Line of the item in the test corpus file.
    pub row: usize,
    /// Key of the completion request, also the generation file name.
    pub prompt_id: String,
    pub references: Vec<String>,
    pub pool: RankedPool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub config: serde_json::Value,
    pub provenance: Provenance,
    pub items: Vec<ItemRecord>,
}

impl RunArtifact {
    pub fn pools(&self) -> Vec<RankedPool> {
        self.items.iter().map(|i| i.pool.clone()).collect()
    }

    pub fn references(&self) -> Vec<Vec<String>> {
        self.items.iter().map(|i| i.references.clone()).collect()
    }

    pub fn load(path: &Path) -> Result<Self, DarankError> {
        read_json(path)
    }
}

pub struct RunOutput {
    pub artifact: RunArtifact,
    pub report: ReportFile,
    pub out_dir: PathBuf,
}

/// Stored generations for one prompt, the unit of resumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub prompt: String,
    pub request: CompletionRequest,
    pub candidates: Vec<Candidate>,
}

/// Serializes all writes to the generations directory.
struct GenerationStore {
    dir: PathBuf,
    lock: Mutex<()>,
}

impl GenerationStore {
    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    fn load(&self, key: &str, request: &CompletionRequest) -> Option<Vec<Candidate>> {
        let rec: GenerationRecord = read_json(&self.path(key)).ok()?;
        (rec.request == *request).then_some(rec.candidates)
    }

    fn save(&self, key: &str, record: &GenerationRecord) -> Result<(), DarankError> {
        let _guard = self.lock.lock().expect("generation store lock");
        let tmp = self.dir.join(format!(".{key}.json.tmp"));
        write_json(&tmp, record)?;
        let path = self.path(key);
        std::fs::rename(&tmp, &path).map_err(|e| DarankError::io(path, e))
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// The ontology and the bytes it came from.
pub fn load_ontology(cfg: &RunConfig) -> Result<(Ontology, Vec<u8>), DarankError> {
    match &cfg.ontology {
        Some(p) => {
            let path = cfg.resolve(p);
            let bytes = std::fs::read(&path).map_err(|e| DarankError::io(&path, e))?;
            Ok((ontologies::load(&path)?, bytes))
        }
        None => {
            let text = ontologies::BUILTIN
                .iter()
                .find(|(name, _)| *name == cfg.domain)
                .map(|(_, t)| *t)
                .ok_or_else(|| DarankError::Config(format!("unknown domain `{}`", cfg.domain)))?;
            Ok((ontologies::builtin(&cfg.domain).expect("checked above"), text.as_bytes().to_vec()))
        }
    }
}

pub struct Inputs {
    pub ontology: Ontology,
    pub train: Vec<CorpusItem>,
    pub test: Vec<CorpusItem>,
    pub provenance: Provenance,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs, DarankError> {
    let (ontology, onto_bytes) = load_ontology(cfg)?;
    let mut provenance = Provenance::default();
    provenance.inputs.insert("ontology".into(), sha256_hex(&onto_bytes));
    let mut load = |name: &str, rel: &Path, split: Split| -> Result<Vec<CorpusItem>, DarankError> {
        let path = cfg.resolve(rel);
        let bytes = std::fs::read(&path).map_err(|e| DarankError::io(&path, e))?;
        provenance.inputs.insert(name.into(), sha256_hex(&bytes));
        Ok(load_corpus(&path, &ontology, split)?)
    };
    let train = load("train", &cfg.corpus.train, Split::Train)?;
    let test = load("test", &cfg.corpus.test, Split::Test)?;
    let test = match cfg.per_da {
        Some(n) => balanced_sample(&test, n, cfg.seed).map_err(|e| DarankError::Config(e.to_string()))?,
        None => test,
    };
    Ok(Inputs { ontology, train, test, provenance })
}

fn scorer_for(cfg: &RunConfig, ontology: &Ontology) -> Result<Box<dyn Scorer>, DarankError> {
    match cfg.scorer.kind {
        ScorerKind::Stub => Ok(Box::new(StubScorer)),
        ScorerKind::Remote => {
            let url = cfg
                .scorer
                .url
                .clone()
                .or_else(|| std::env::var("DARANK_SCORER_URL").ok())
                .ok_or_else(|| DarankError::Config("remote scorer needs a URL".into()))?;
            let s = RemoteScorer::new(
                url,
                ontology.domain.clone(),
                cfg.scorer.retry.clone(),
                Duration::from_secs(cfg.scorer.timeout_secs),
            );
            s.preflight(cfg.scorer.allow_stub_service).map_err(DarankError::Preflight)?;
            Ok(Box::new(s))
        }
    }
}

/// Runs the configured pipeline and writes `run.json`, `report.json` and
/// `report.txt` to the output directory.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutput, DarankError> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let scorer = scorer_for(cfg, &inputs.ontology)?;
    let binding = Binding::from_settings(&cfg.generator, &inputs.ontology, cfg.seed, |p| cfg.resolve(p))?;
    run_with(cfg, inputs, &binding, scorer.as_ref(), || binding.fixture_hashes())
}

/// The pipeline with explicit bindings. `fixture_hashes` is read once
/// generation has finished.
pub fn run_with<G: Generator + ?Sized, S: Scorer + ?Sized>(
    cfg: &RunConfig,
    inputs: Inputs,
    generator: &G,
    scorer: &S,
    fixture_hashes: impl FnOnce() -> std::collections::BTreeMap<String, String>,
) -> Result<RunOutput, DarankError> {
    let Inputs { ontology, train, test, mut provenance } = inputs;
    let out_dir = cfg.out_dir();
    let store = GenerationStore { dir: out_dir.join("generations"), lock: Mutex::new(()) };
    std::fs::create_dir_all(&store.dir).map_err(|e| DarankError::io(&store.dir, e))?;
    let pool = exemplar_pool(&train);

    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| DarankError::Other(e.to_string()))?;
    let results: Vec<Result<ItemRecord, DarankError>> = threads.install(|| {
        test.par_iter()
            .map(|item| {
                let item_id = format!("row-{}", item.row);
                let prompt_err = |message: String| DarankError::Prompt { item: item_id.clone(), message };
                let exemplars = sample_exemplars(
                    &pool,
                    &item.mr.dialogue_act,
                    cfg.n_exemplars,
                    cfg.seed ^ splitmix(item.row as u64),
                )
                .map_err(|e| prompt_err(e.to_string()))?;
                let prompt = render_prompt(cfg.prompt_style, &exemplars, &item.mr, &ontology)
                    .map_err(|e| prompt_err(e.to_string()))?;
                let request = completion_request(&prompt, &cfg.generation);
                let key = request_key(&request);
                let candidates = match store.load(&key, &request) {
                    Some(c) => c,
                    None => {
                        let c = overgenerate(&prompt, &key, &cfg.generation, generator)
                            .map_err(|source| DarankError::Generation { item: item_id.clone(), source })?;
                        let record = GenerationRecord { prompt: prompt.rendered.clone(), request, candidates: c };
                        store.save(&key, &record)?;
                        record.candidates
                    }
                };
                let scored = assemble_scores(&item.mr, candidates, scorer, &ontology)
                    .map_err(|e| DarankError::Scoring { item: format!("{item_id}#{}", e.gen_index), source: e.source })?;
                let ranked = select_best(&item.mr, scored, cfg.rf).map_err(|e| DarankError::Other(e.to_string()))?;
                Ok(ItemRecord { item_id, row: item.row, prompt_id: key, references: item.references.clone(), pool: ranked })
            })
            .collect()
    });
    let items = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    provenance.fixtures = fixture_hashes();

    let artifact = RunArtifact { config: cfg.provenance_view(), provenance, items };
    write_json(&out_dir.join("run.json"), &artifact)?;
    let report = evaluate_artifact(&artifact);
    emit_report(&out_dir, "report", &report)?;
    Ok(RunOutput { artifact, report, out_dir })
}

fn row_for(artifact: &RunArtifact, pools: &[RankedPool], rf: RankingFunction) -> ReportRow {
    let refs = artifact.references();
    let has_refs = refs.iter().any(|r| !r.is_empty());
    ReportRow { id: rf.id().to_string(), rf, report: evaluate_pools(pools, has_refs.then_some(refs.as_slice())) }
}

/// Report for the pools as ranked in the artifact.
pub fn evaluate_artifact(artifact: &RunArtifact) -> ReportFile {
    let pools = artifact.pools();
    let rf = pools.first().map(|p| p.rf).unwrap_or(RankingFunction::Rf2Da);
    ReportFile {
        config: artifact.config.clone(),
        provenance: artifact.provenance.clone(),
        rows: vec![row_for(artifact, &pools, rf)],
    }
}

/// One report row per ranking function, re-ranking the stored pools. The
/// generator is never consulted.
pub fn compare_rfs(artifact: &RunArtifact, rfs: &[RankingFunction]) -> Result<ReportFile, DarankError> {
    if rfs.is_empty() {
        return Err(DarankError::Config("no ranking functions given".into()));
    }
    let stored = artifact.pools();
    let rows = rfs
        .iter()
        .map(|&rf| {
            let pools: Vec<RankedPool> = stored.iter().map(|p| p.rerank(rf)).collect();
            row_for(artifact, &pools, rf)
        })
        .collect();
    Ok(ReportFile { config: artifact.config.clone(), provenance: artifact.provenance.clone(), rows })
}

/// Pearson correlation of each pseudo-metric with SACC over all candidates.
pub fn correlate(artifact: &RunArtifact) -> CorrelationTable {
    correlation_table(&artifact.pools())
}
