//! Run configuration: one TOML file, overridable from the command line.
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use darank_core::mock::MockPolicy;
use darank_core::{GenerationConfig, PromptStyle, RankingFunction};
use serde::{Deserialize, Serialize};

use crate::error::DarankError;
use crate::retry::RetryPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Remote,
    Mock,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSettings {
    pub kind: GeneratorKind,
    /// Mock only.
    pub policy: MockPolicy,
    /// Replay fixture directory.
    pub fixtures: Option<PathBuf>,
    /// When set, every completion is also written here as a replay fixture.
    pub record: Option<PathBuf>,
    /// Remote only; falls back to `DARANK_LLM_URL`.
    pub url: Option<String>,
    /// Remote only; falls back to `DARANK_LLM_MODEL`.
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// Whether the endpoint honours `n`; otherwise k single calls are made.
    pub supports_n: bool,
    pub retry: RetryPolicy,
    pub max_requests: Option<u64>,
    pub max_total_tokens: Option<u64>,
    pub timeout_secs: u64,
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        Self {
            kind: GeneratorKind::Mock,
            policy: MockPolicy::OnePerfect,
            fixtures: None,
            record: None,
            url: None,
            model: None,
            api_key_env: "DARANK_LLM_API_KEY".into(),
            supports_n: true,
            retry: RetryPolicy::default(),
            max_requests: None,
            max_total_tokens: None,
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Stub,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerSettings {
    pub kind: ScorerKind,
    /// Remote only; falls back to `DARANK_SCORER_URL`.
    pub url: Option<String>,
    /// Accept a scorer service that reports stub mode.
    pub allow_stub_service: bool,
    pub retry: RetryPolicy,
    pub timeout_secs: u64,
}

impl Default for ScorerSettings {
    fn default() -> Self {
        Self { kind: ScorerKind::Stub, url: None, allow_stub_service: false, retry: RetryPolicy::default(), timeout_secs: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPaths {
    /// Exemplar source.
    pub train: PathBuf,
    /// Items to generate for.
    pub test: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required: all sampling derives from it.
    pub seed: u64,
    /// Built-in domain name (`viggo`, `laptop`, `tv`) unless `ontology` is set.
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ontology: Option<PathBuf>,
    pub corpus: CorpusPaths,
    #[serde(default = "default_style")]
    pub prompt_style: PromptStyle,
    #[serde(default = "default_n_exemplars")]
    pub n_exemplars: usize,
    /// Balanced test subset size per act; all test items when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_da: Option<usize>,
    #[serde(default = "default_rf")]
    pub rf: RankingFunction,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default)]
    pub generator: GeneratorSettings,
    #[serde(default)]
    pub scorer: ScorerSettings,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_style() -> PromptStyle {
    PromptStyle::TstVanilla
}
fn default_n_exemplars() -> usize {
    10
}
fn default_rf() -> RankingFunction {
    RankingFunction::Rf2Da
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_parallelism() -> usize {
    4
}

/// Command-line values that replace config entries when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub prompt_style: Option<PromptStyle>,
    pub n_exemplars: Option<usize>,
    pub k: Option<usize>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub generator: Option<GeneratorKind>,
    pub fixtures: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub rf: Option<RankingFunction>,
    pub out_dir: Option<PathBuf>,
    pub allow_stub_service: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, DarankError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| DarankError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, DarankError> {
        let text = std::fs::read_to_string(path).map_err(|e| DarankError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    /// Paths given on the command line are taken relative to the working
    /// directory, so they are stored absolute.
    pub fn apply(&mut self, o: Overrides) -> Result<(), DarankError> {
        let cwd = || std::env::current_dir().map_err(|e| DarankError::io(".", e));
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.prompt_style {
            self.prompt_style = v;
        }
        if let Some(v) = o.n_exemplars {
            self.n_exemplars = v;
        }
        if let Some(v) = o.k {
            self.generation.k = v;
        }
        if let Some(v) = o.temperature {
            self.generation.temperature = v;
        }
        if let Some(v) = o.top_p {
            self.generation.top_p = v;
        }
        if let Some(v) = o.generator {
            self.generator.kind = v;
        }
        if let Some(v) = o.fixtures {
            self.generator.fixtures = Some(cwd()?.join(v));
        }
        if let Some(v) = o.record {
            self.generator.record = Some(cwd()?.join(v));
        }
        if let Some(v) = o.rf {
            self.rf = v;
        }
        if let Some(v) = o.out_dir {
            self.out_dir = cwd()?.join(v);
        }
        if o.allow_stub_service {
            self.scorer.allow_stub_service = true;
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    pub fn validate(&self) -> Result<(), DarankError> {
        let bad = |m: &str| Err(DarankError::Config(m.to_string()));
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1");
        }
        if self.per_da == Some(0) {
            return bad("per_da must be at least 1");
        }
        self.generation.validate().map_err(|e| DarankError::Config(e.to_string()))?;
        for (what, p) in [("train corpus", &self.corpus.train), ("test corpus", &self.corpus.test)] {
            if !self.resolve(p).is_file() {
                return Err(DarankError::Config(format!("{what} {} does not exist", self.resolve(p).display())));
            }
        }
        if let Some(p) = &self.ontology {
            if !self.resolve(p).is_file() {
                return Err(DarankError::Config(format!("ontology {} does not exist", self.resolve(p).display())));
            }
        }
        match self.generator.kind {
            GeneratorKind::Replay => match &self.generator.fixtures {
                Some(dir) if self.resolve(dir).is_dir() => {}
                Some(dir) => {
                    return Err(DarankError::Config(format!(
                        "replay fixture directory {} does not exist",
                        self.resolve(dir).display()
                    )))
                }
                None => return bad("replay generator needs `generator.fixtures`"),
            },
            GeneratorKind::Remote => {
                if self.generator.url.is_none() && std::env::var_os("DARANK_LLM_URL").is_none() {
                    return bad("remote generator needs `generator.url` or DARANK_LLM_URL");
                }
            }
            GeneratorKind::Mock => {}
        }
        if self.scorer.kind == ScorerKind::Remote
            && self.scorer.url.is_none()
            && std::env::var_os("DARANK_SCORER_URL").is_none()
        {
            return bad("remote scorer needs `scorer.url` or DARANK_SCORER_URL");
        }
        Ok(())
    }

    /// The config as recorded in artifacts. Output and fixture locations
    /// are left out (fixture contents are hashed separately), so the same
    /// run written elsewhere produces the same bytes.
    pub fn provenance_view(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("out_dir");
            if let Some(g) = m.get_mut("generator").and_then(|g| g.as_object_mut()) {
                g.remove("record");
                g.remove("fixtures");
            }
        }
        v
    }
}
