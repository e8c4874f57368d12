//! HTTP client for the scorer service.
//!
//! Wire contract, all bodies JSON:
//!
//! | endpoint            | request               | response                                  |
//! |---------------------|-----------------------|-------------------------------------------|
//! | `POST /classify`    | `{text, domain}`      | `{label, distribution}`                   |
//! | `POST /fluency`     | `{text}`              | `{mean_token_logprob, token_count}`       |
//! | `POST /similarity`  | `{text, reference}`   | `{score}`                                 |
//! | `GET /health`       |                       | `{api_version, mode, domains}`            |
//!
//! `mode` is `stub` or `model`. The client accepts any `api_version` whose
//! major component equals [`API_VERSION_MAJOR`].

use std::collections::BTreeMap;
use std::time::Duration;

use darank_core::scoring::{Classification, FluencyEstimate};
use darank_core::{Ontology, Scorer, ScorerError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::retry::RetryPolicy;

pub const API_VERSION_MAJOR: u32 = 1;
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub text: String,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub label: String,
    pub distribution: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluencyRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluencyResponse {
    pub mean_token_logprob: f64,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRequest {
    pub text: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResponse {
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceMode {
    Stub,
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub api_version: String,
    pub mode: ServiceMode,
    pub domains: Vec<String>,
}

/// Checks a classification against the response invariants.
pub fn check_classification(c: &ClassifyResponse) -> Result<(), ScorerError> {
    let bad = |m: String| Err(ScorerError::BadResponse(m));
    if c.distribution.values().any(|p| !p.is_finite() || *p < 0.0) {
        return bad("distribution has a negative or non-finite entry".into());
    }
    let sum: f64 = c.distribution.values().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return bad(format!("distribution sums to {sum}"));
    }
    let argmax = c.distribution.iter().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k.as_str());
    let top = c.distribution.get(&c.label).copied();
    let max = argmax.and_then(|k| c.distribution.get(k)).copied();
    if top.is_none() || top != max {
        return bad(format!("label `{}` is not the argmax", c.label));
    }
    Ok(())
}

pub struct RemoteScorer {
    base: String,
    domain: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
}

/// Transport errors and 5xx/429 are retried; anything else is final.
enum CallError {
    Transient(String),
    Final(ScorerError),
}

impl RemoteScorer {
    pub fn new(base: impl Into<String>, domain: impl Into<String>, retry: RetryPolicy, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        Self { base: base.into().trim_end_matches('/').to_string(), domain: domain.into(), agent, retry }
    }

    fn finish<T: DeserializeOwned>(resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<T, CallError> {
        let mut resp = resp.map_err(|e| CallError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            let msg = format!("HTTP {status}: {}", body.trim());
            return Err(if status == 429 || status >= 500 {
                CallError::Transient(msg)
            } else {
                CallError::Final(ScorerError::BadResponse(msg))
            });
        }
        resp.body_mut().read_json().map_err(|e| CallError::Final(ScorerError::BadResponse(e.to_string())))
    }

    fn with_retry<T>(&self, op: impl FnMut() -> Result<T, CallError>) -> Result<T, ScorerError> {
        self.retry.run(op, |e| matches!(e, CallError::Transient(_))).map_err(|e| match e {
            CallError::Transient(m) => ScorerError::Unavailable(m),
            CallError::Final(e) => e,
        })
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ScorerError> {
        let url = format!("{}{path}", self.base);
        self.with_retry(|| Self::finish(self.agent.post(&url).send_json(body)))
    }

    pub fn health(&self) -> Result<HealthResponse, ScorerError> {
        let url = format!("{}/health", self.base);
        self.with_retry(|| Self::finish(self.agent.get(&url).call()))
    }

    /// Fails fast when the service is unreachable, speaks another API
    /// major version, does not serve this domain, or runs in stub mode
    /// without `allow_stub`.
    pub fn preflight(&self, allow_stub: bool) -> Result<HealthResponse, ScorerError> {
        let h = self.health()?;
        let major = h.api_version.split('.').next().and_then(|m| m.trim().parse::<u32>().ok());
        if major != Some(API_VERSION_MAJOR) {
            return Err(ScorerError::Unavailable(format!(
                "service API version {} is not {API_VERSION_MAJOR}.x",
                h.api_version
            )));
        }
        if !h.domains.iter().any(|d| d == &self.domain) {
            return Err(ScorerError::Unavailable(format!("service does not serve domain `{}`", self.domain)));
        }
        if h.mode == ServiceMode::Stub && !allow_stub {
            return Err(ScorerError::Unavailable(
                "service is in stub mode; pass --allow-stub-service to run against it anyway".into(),
            ));
        }
        Ok(h)
    }
}

impl Scorer for RemoteScorer {
    fn classify(&self, text: &str, _ontology: &Ontology) -> Result<Classification, ScorerError> {
        let resp: ClassifyResponse =
            self.post("/classify", &ClassifyRequest { text: text.into(), domain: self.domain.clone() })?;
        check_classification(&resp)?;
        Ok(Classification { label: resp.label, distribution: resp.distribution })
    }

    fn fluency(&self, text: &str) -> Result<FluencyEstimate, ScorerError> {
        let resp: FluencyResponse = self.post("/fluency", &FluencyRequest { text: text.into() })?;
        if !resp.mean_token_logprob.is_finite() && resp.token_count > 0 {
            return Err(ScorerError::BadResponse("non-finite mean logprob".into()));
        }
        Ok(FluencyEstimate { mean_token_logprob: resp.mean_token_logprob, token_count: resp.token_count })
    }

    fn similarity(&self, text: &str, reference: &str) -> Result<f64, ScorerError> {
        let resp: SimilarityResponse =
            self.post("/similarity", &SimilarityRequest { text: text.into(), reference: reference.into() })?;
        if !(0.0..=1.0).contains(&resp.score) {
            return Err(ScorerError::BadResponse(format!("similarity {} outside [0, 1]", resp.score)));
        }
        Ok(resp.score)
    }
}
