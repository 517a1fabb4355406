//! Pluggable answer sources.
//!
//! Three kinds behind one interface: deterministic replay of construction-time
//! knowledge (an oracle envelope for diagnostics), scripted fixed-accuracy
//! profiles, and an HTTP chat-completion client for live models. Replay and
//! scripted agents are pure functions of their inputs and a seed; the HTTP
//! agent enforces a shared in-flight limit and retries transient failures
//! with exponential backoff.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Semaphore;
use tracing::warn;

use crate::model::{Episode, OptionLetter, PeerResponse, QaInstance, PHRASING_POOL};
use crate::prompt::parse_trusted_peer;
use crate::seeding::derive_rng;

#[derive(Debug, Clone, Error)]
pub enum BackendError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("http status {status} after {attempts} attempt(s)")]
    HttpStatus { status: u16, attempts: u32 },
    #[error("empty completion")]
    EmptyCompletion,
    #[error("credentials env var {env_var} is not set")]
    MissingCredentials { env_var: String },
    #[error("empty {which} pool")]
    EmptyPool { which: String },
    #[error("backend config invalid: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Replay,
    Scripted,
    Http,
}

/// Backend selection plus transport and sampling knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default = "default_accuracy")]
    pub scripted_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    /// Bearer token is read from this environment variable, never from config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env_var: Option<String>,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent_requests: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Chat-completions path on the endpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chat_path: Option<String>,
}

fn default_accuracy() -> f64 {
    1.0
}
fn default_timeout_s() -> u64 {
    60
}
fn default_max_retries() -> u32 {
    3
}
fn default_max_concurrent() -> usize {
    8
}
fn default_temperature() -> f64 {
    0.9
}
fn default_max_tokens() -> u32 {
    4096
}
fn default_backoff_ms() -> u64 {
    250
}

pub const DEFAULT_CHAT_PATH: &str = "/v1/chat/completions";

impl BackendConfig {
    pub fn replay() -> Self {
        Self {
            kind: BackendKind::Replay,
            scripted_accuracy: 1.0,
            endpoint_url: None,
            model_id: None,
            auth_env_var: None,
            timeout_s: default_timeout_s(),
            max_retries: default_max_retries(),
            max_concurrent_requests: default_max_concurrent(),
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
            backoff_ms: default_backoff_ms(),
            chat_path: None,
        }
    }

    pub fn scripted(accuracy: f64) -> Self {
        Self {
            kind: BackendKind::Scripted,
            scripted_accuracy: accuracy,
            ..Self::replay()
        }
    }

    pub fn http(endpoint_url: &str, model_id: &str) -> Self {
        Self {
            kind: BackendKind::Http,
            endpoint_url: Some(endpoint_url.to_string()),
            model_id: Some(model_id.to_string()),
            ..Self::replay()
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.kind == BackendKind::Http {
            if self.endpoint_url.is_none() {
                return Err(BackendError::Config("http backend requires endpoint_url".into()));
            }
            if self.model_id.is_none() {
                return Err(BackendError::Config("http backend requires model_id".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.scripted_accuracy) {
            return Err(BackendError::Config(format!(
                "scripted_accuracy must be in [0,1], got {}",
                self.scripted_accuracy
            )));
        }
        Ok(())
    }

    /// A short label identifying the answer source, used to tag rollout pools.
    pub fn source_label(&self) -> String {
        match self.kind {
            BackendKind::Http => self.model_id.clone().unwrap_or_else(|| "http".into()),
            BackendKind::Replay => "replay".into(),
            BackendKind::Scripted => format!("scripted_{}", self.scripted_accuracy),
        }
    }
}

/// What a completion call is for. Deterministic backends key their behavior
/// off this context; the HTTP backend only ever reads the prompt text.
#[derive(Debug, Clone, Copy)]
pub enum CallStage<'a> {
    /// SA, AG, or single-stage call over an episode.
    Single { episode: &'a Episode },
    /// Trust-estimation stage of the two-stage pipeline.
    Stage1 { episode: &'a Episode },
    /// Aggregation stage; carries the raw stage-1 completion.
    Stage2 {
        episode: &'a Episode,
        stage1_raw: &'a str,
    },
    /// The agent's independent pass used by decoupled belief.
    SelfBelief { episode: &'a Episode },
    /// Dataset rollout generation; `stance` is set for adversarial debating.
    Rollout {
        instance: &'a QaInstance,
        stance: Option<OptionLetter>,
        index: usize,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct AgentCall<'a> {
    pub system: &'a str,
    pub user: &'a str,
    pub stage: CallStage<'a>,
}

/// A completion source callable from many concurrent episode tasks.
#[async_trait]
pub trait Agent: Send + Sync {
    async fn complete(&self, call: AgentCall<'_>) -> Result<String, BackendError>;

    fn kind(&self) -> BackendKind;
}

/// Builds the agent described by a config. `seed` fixes all residual sampling
/// of the deterministic kinds and is ignored by the HTTP kind.
pub fn build_agent(cfg: &BackendConfig, seed: u64) -> Result<Arc<dyn Agent>, BackendError> {
    cfg.validate()?;
    Ok(match cfg.kind {
        BackendKind::Replay => Arc::new(ReplayAgent),
        BackendKind::Scripted => Arc::new(ScriptedAgent::new(cfg.scripted_accuracy, seed)),
        BackendKind::Http => Arc::new(HttpAgent::new(cfg.clone())?),
    })
}

/// Canonical completion shapes shared by the deterministic agents, so two
/// kinds that agree on the answer produce byte-identical results.
pub fn answer_completion(letter: OptionLetter, text: &str) -> String {
    format!("<think>\n(omitted)\n</think>\n\nThe best answer is: \"({letter}) {text}\"")
}

pub fn trust_completion(peer: &str) -> String {
    format!("<think>\n(omitted)\n</think>\n\nThe most trustworthy agent is: {peer}")
}

fn rollout_completion(letter: OptionLetter, text: &str, index: usize) -> String {
    format!(
        "<think>\n(omitted)\n</think>\n\nWeighing the listed choices, line of reasoning {n} \
         points to ({letter}) {text}: it matches the conditions stated in the question more \
         closely than the alternatives.\nThe best answer is: \"({letter}) {text}\"",
        n = index + 1
    )
}

/// Replays construction-time knowledge: stage 1 names the designated reliable
/// peer, answer stages follow the trusted peer's current response. This is
/// the oracle envelope used by diagnostics and tests.
pub struct ReplayAgent;

#[async_trait]
impl Agent for ReplayAgent {
    async fn complete(&self, call: AgentCall<'_>) -> Result<String, BackendError> {
        Ok(match call.stage {
            CallStage::Stage1 { episode } => trust_completion(&episode.reliable_peer),
            CallStage::Stage2 { episode, stage1_raw } => {
                let followed = parse_trusted_peer(stage1_raw, &episode.peer_names)
                    .unwrap_or_else(|_| episode.reliable_peer.clone());
                let resp = episode
                    .current_response_of(&followed)
                    .ok_or_else(|| BackendError::EmptyPool { which: "current_responses".into() })?;
                answer_completion(resp.answer_option, &resp.answer_text)
            }
            CallStage::Single { episode } => {
                let resp = episode
                    .current_response_of(&episode.reliable_peer)
                    .ok_or_else(|| BackendError::EmptyPool { which: "current_responses".into() })?;
                answer_completion(resp.answer_option, &resp.answer_text)
            }
            CallStage::SelfBelief { episode } => {
                let gt = episode.instance.gt_option;
                let text = episode.instance.option_text(gt).unwrap_or_default();
                answer_completion(gt, text)
            }
            CallStage::Rollout { instance, stance, index } => {
                let letter = stance.unwrap_or(instance.gt_option);
                let text = instance.option_text(letter).unwrap_or_default();
                rollout_completion(letter, text, index)
            }
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }
}

/// Answers correctly with a fixed probability, seeded per call.
pub struct ScriptedAgent {
    accuracy: f64,
    seed: u64,
}

impl ScriptedAgent {
    pub fn new(accuracy: f64, seed: u64) -> Self {
        Self { accuracy, seed }
    }

    fn answer_for(&self, episode: &Episode, tag: &str) -> (OptionLetter, String) {
        let mut rng = derive_rng(self.seed, &["scripted", tag, episode.id()]);
        let gt = episode.instance.gt_option;
        let letter = if rng.gen::<f64>() < self.accuracy || episode.instance.wrong_options.is_empty()
        {
            gt
        } else {
            let wrong = &episode.instance.wrong_options;
            wrong[rng.gen_range(0..wrong.len())]
        };
        let text = episode.instance.option_text(letter).unwrap_or_default().to_string();
        (letter, text)
    }
}

#[async_trait]
impl Agent for ScriptedAgent {
    async fn complete(&self, call: AgentCall<'_>) -> Result<String, BackendError> {
        Ok(match call.stage {
            CallStage::Stage1 { episode } => {
                let mut rng = derive_rng(self.seed, &["scripted", "stage1", episode.id()]);
                let named = if rng.gen::<f64>() < self.accuracy || episode.peer_names.len() == 1 {
                    episode.reliable_peer.clone()
                } else {
                    let others: Vec<&String> = episode
                        .peer_names
                        .iter()
                        .filter(|n| **n != episode.reliable_peer)
                        .collect();
                    others[rng.gen_range(0..others.len())].clone()
                };
                trust_completion(&named)
            }
            CallStage::Stage2 { episode, .. } => {
                let (letter, text) = self.answer_for(episode, "stage2");
                answer_completion(letter, &text)
            }
            CallStage::Single { episode } => {
                let (letter, text) = self.answer_for(episode, "single");
                answer_completion(letter, &text)
            }
            CallStage::SelfBelief { episode } => {
                let (letter, text) = self.answer_for(episode, "belief");
                answer_completion(letter, &text)
            }
            CallStage::Rollout { instance, stance, index } => {
                match stance {
                    Some(letter) => {
                        let text = instance.option_text(letter).unwrap_or_default();
                        rollout_completion(letter, text, index)
                    }
                    None => {
                        let mut rng = derive_rng(
                            self.seed,
                            &["scripted", "rollout", &instance.id, &index.to_string()],
                        );
                        let letter = if rng.gen::<f64>() < self.accuracy
                            || instance.wrong_options.is_empty()
                        {
                            instance.gt_option
                        } else {
                            let wrong = &instance.wrong_options;
                            wrong[rng.gen_range(0..wrong.len())]
                        };
                        let text = instance.option_text(letter).unwrap_or_default();
                        rollout_completion(letter, text, index)
                    }
                }
            }
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Deserialize)]
struct WireResponseMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

/// Minimal OpenAI-compatible chat-completions client.
pub struct HttpAgent {
    cfg: BackendConfig,
    client: reqwest::Client,
    inflight: Arc<Semaphore>,
}

impl HttpAgent {
    pub fn new(cfg: BackendConfig) -> Result<Self, BackendError> {
        cfg.validate()?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_s))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        let inflight = Arc::new(Semaphore::new(cfg.max_concurrent_requests.max(1)));
        Ok(Self { cfg, client, inflight })
    }

    fn url(&self) -> String {
        let base = self
            .cfg
            .endpoint_url
            .as_deref()
            .unwrap_or_default()
            .trim_end_matches('/');
        let path = self.cfg.chat_path.as_deref().unwrap_or(DEFAULT_CHAT_PATH);
        format!("{base}{path}")
    }

    fn bearer(&self) -> Result<Option<String>, BackendError> {
        match &self.cfg.auth_env_var {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(token) if !token.is_empty() => Ok(Some(token)),
                _ => Err(BackendError::MissingCredentials { env_var: var.clone() }),
            },
        }
    }

    /// One chat-completion round trip with bounded concurrency, retrying
    /// transient failures (timeouts, connection errors, 429, 5xx) with
    /// exponential backoff.
    pub async fn complete_chat(&self, system: &str, user: &str) -> Result<String, BackendError> {
        let bearer = self.bearer()?;
        let model = self.cfg.model_id.as_deref().unwrap_or_default();
        let mut messages = Vec::with_capacity(2);
        if !system.is_empty() {
            messages.push(WireMessage { role: "system", content: system });
        }
        messages.push(WireMessage { role: "user", content: user });
        let body = WireRequest {
            model,
            messages,
            temperature: self.cfg.temperature,
            max_tokens: self.cfg.max_tokens,
        };

        let url = self.url();
        let mut last_err = BackendError::Timeout { attempts: 0 };
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                let backoff = self.cfg.backoff_ms.saturating_mul(1 << (attempt - 1).min(8));
                tokio::time::sleep(Duration::from_millis(backoff)).await;
                warn!(attempt, "retrying chat completion");
            }
            let _permit = self
                .inflight
                .acquire()
                .await
                .map_err(|_| BackendError::Config("semaphore closed".into()))?;
            let mut req = self.client.post(&url).json(&body);
            if let Some(token) = &bearer {
                req = req.bearer_auth(token);
            }
            match req.send().await {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let parsed: WireResponse = match resp.json().await {
                            Ok(p) => p,
                            Err(_) => {
                                last_err = BackendError::EmptyCompletion;
                                continue;
                            }
                        };
                        let content = parsed
                            .choices
                            .first()
                            .and_then(|c| c.message.content.clone())
                            .unwrap_or_default();
                        if content.trim().is_empty() {
                            last_err = BackendError::EmptyCompletion;
                            continue;
                        }
                        return Ok(content);
                    }
                    let code = status.as_u16();
                    last_err = BackendError::HttpStatus { status: code, attempts: attempt + 1 };
                    // Client errors other than rate limiting are permanent.
                    if code != 429 && code < 500 {
                        return Err(last_err);
                    }
                }
                Err(e) => {
                    if e.is_timeout() || e.is_connect() || e.is_request() {
                        last_err = BackendError::Timeout { attempts: attempt + 1 };
                    } else {
                        last_err = BackendError::Config(e.to_string());
                        return Err(last_err);
                    }
                }
            }
        }
        Err(last_err)
    }
}

#[async_trait]
impl Agent for HttpAgent {
    async fn complete(&self, call: AgentCall<'_>) -> Result<String, BackendError> {
        self.complete_chat(call.system, call.user).await
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Http
    }
}

/// One-shot chat completion with a transient client.
pub async fn complete_chat(
    cfg: &BackendConfig,
    system: &str,
    user: &str,
) -> Result<String, BackendError> {
    HttpAgent::new(cfg.clone())?.complete_chat(system, user).await
}

/// Peer role when drawing from pre-generated pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeerRole {
    Reliable,
    Unreliable,
}

/// Draws one peer response from an instance's reasoning pools: the reliable
/// role answers the (pseudo) ground truth with a pooled rationale, the
/// unreliable role a pooled wrong option with its matching rationale.
/// The rationale is attached; callers drop it for outcome-only contexts.
pub fn respond_replay(
    instance: &QaInstance,
    role: PeerRole,
    peer_name: &str,
    round_seed: u64,
) -> Result<PeerResponse, BackendError> {
    let mut rng = derive_rng(round_seed, &["replay", &instance.id, peer_name]);
    let (letter, rationale) = match role {
        PeerRole::Reliable => {
            if instance.gt_reasoning.is_empty() {
                return Err(BackendError::EmptyPool { which: "gt_reasoning".into() });
            }
            let pick = rng.gen_range(0..instance.gt_reasoning.len());
            (instance.answer_key(), instance.gt_reasoning[pick].clone())
        }
        PeerRole::Unreliable => {
            let key = instance.answer_key();
            let letters: Vec<OptionLetter> = instance
                .pooled_wrong_options()
                .into_iter()
                .filter(|l| *l != key)
                .collect();
            if letters.is_empty() {
                return Err(BackendError::EmptyPool { which: "wrong_reasoning".into() });
            }
            let letter = letters[rng.gen_range(0..letters.len())];
            let pool = instance.wrong_rationales_for(letter);
            let pick = rng.gen_range(0..pool.len());
            (letter, pool[pick].to_string())
        }
    };
    let answer_text = instance.option_text(letter).unwrap_or_default().to_string();
    Ok(PeerResponse {
        peer_name: peer_name.to_string(),
        answer_option: letter,
        answer_text,
        reasoning: Some(rationale),
        phrasing_id: rng.gen_range(0..PHRASING_POOL.len()),
    })
}

/// Seeded Bernoulli profile: answers `gt` with probability
/// `profile.scripted_accuracy`, otherwise a seeded distractor. Option texts
/// are resolved from `options` when provided, else the letter itself.
pub fn respond_scripted(
    profile: &BackendConfig,
    gt: OptionLetter,
    distractors: &[OptionLetter],
    options: Option<&BTreeMap<OptionLetter, String>>,
    peer_name: &str,
    round_seed: u64,
) -> PeerResponse {
    let mut rng = derive_rng(round_seed, &["scripted", peer_name]);
    let letter = if rng.gen::<f64>() < profile.scripted_accuracy || distractors.is_empty() {
        gt
    } else {
        distractors[rng.gen_range(0..distractors.len())]
    };
    let answer_text = options
        .and_then(|m| m.get(&letter).cloned())
        .unwrap_or_else(|| letter.to_string());
    PeerResponse {
        peer_name: peer_name.to_string(),
        answer_option: letter,
        answer_text,
        reasoning: None,
        phrasing_id: rng.gen_range(0..PHRASING_POOL.len()),
    }
}
