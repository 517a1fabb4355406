//! Prompt templates, rendering, completion parsing, and method execution.
//!
//! Five prompt shapes cover all methods: the solver prompt with current
//! content only (SA/AG), the single-stage prompt with history plus current
//! content, the two stage-1 shapes (implicit summary vs. explicit
//! trusted-peer naming), and the stage-2 prompt where the raw history is
//! replaced by the stage-1 output. Stage-1 prompts receive only the history;
//! the current question and responses are withheld by construction.

use std::sync::OnceLock;
use std::time::Instant;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::backend::{Agent, AgentCall, CallStage};
use crate::model::{
    normalize_answer, Episode, EpisodeError, EpisodeResult, EpistemicProfile, LatencyMs, Method,
    Perturbation, Setting, Variant,
};
use crate::rewards::{outcome_reward, peer_recognition_reward};
use crate::seeding::prompt_hash;

pub const SYSTEM_SOLVER: &str = "A conversation between User and Assistant. The user asks a question, and the Assistant solves it. The assistant first thinks about the reasoning process in the mind within <think> </think> tags, and then provides the answer directly after without any tags, i.e.,\n<think>\nreasoning process here\n</think>\n\nanswer here";

pub const SYSTEM_SUMMARIZER: &str = "A conversation between User and Assistant. The user provides a history of QA from peers, and the Assistant summerizes key information, especially whether each peer has correctly answered each previous question and their overall accuracy. The assistant first thinks about the reasoning process in the mind within <think> </think> tags, and then provides the summary directly after without any tags, i.e.,\n<think>\nreasoning process here\n</think>\n\nsummary here";

const USER_SA_AG: &str = "You are invited to participate in a Q&A. Here are the current Q&A content:\n\n{current}\n\nPlease give your answer in the following format:\n<think>\nYour reasoning process here.\n</think>\n\nThe best answer is: \"(X) the content of the answer\"";

const USER_ONE_STAGE: &str = "You are invited to participate in a Q&A. There are {number} other players invited along with you. Here are the previous Q&A history:\n\n---- begin of history ----\n{history}\n---- end of history ----\n\nHere are the current Q&A content:\n\n{current}\n\nPlease give your answer in the following format:\n<think>\nYour reasoning process here.\n</think>\n\nThe best answer is: \"(X) the content of the answer\"";

const USER_ECL_I_STAGE1: &str = "You are invited to participate in a Q&A. There are {number} other players invited along with you. Here are the previous Q&A history:\n\n---- begin of history ----\n{history}\n---- end of history ----\n\nPlease give your response in the following format:\n<think>\nYour reasoning process here.\n</think>\n\nYour summary here.";

const USER_ECL_E_STAGE1: &str = "You are invited to participate in a Q&A. There are {number} other players invited along with you. Here are the previous Q&A history:\n\n---- begin of history ----\n{history}\n---- end of history ----\n\nPlease analyze the responses of each player in the history and identify which player is the most trustworthy based on their accuracy in answering previous questions.\nPlease give your response in the following format, where PLAYER_NAME is the name of the most trustworthy player:\n<think>\nYour reasoning process here.\n</think>\n\nThe most trustworthy agent is: PLAYER_NAME";

const USER_STAGE2: &str = "You are invited to participate in a Q&A. There are {number} other players invited along with you.\n\nFrom the previous Q&A history, you have summarized the following key information:\n\n{output_stage1}\n\nHere are the current Q&A content:\n\n{current}\n\nPlease give your answer in the following format:\n<think>\nYour reasoning process here.\n</think>\n\nThe best answer is: \"(X) the content of the answer\"";

const USER_STAGE2_DB: &str = "You are invited to participate in a Q&A. There are {number} other players invited along with you.\n\nFrom the previous Q&A history, you have summarized the following key information:\n\n{output_stage1}\n\nHere are the current Q&A content:\n\n{current}\n\nHere is your own independent reasoning about the current question, derived without referring to any peer:\n\n{self_belief}\n\nPlease give your answer in the following format:\n<think>\nYour reasoning process here.\n</think>\n\nThe best answer is: \"(X) the content of the answer\"";

/// Default cap on stage-1 output characters embedded into stage-2 prompts.
pub const DEFAULT_STAGE1_CHAR_CAP: usize = 8000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("stage 2 requires the stage-1 output")]
    MissingStageOneOutput,
    #[error("decoupled belief requires the agent's independent pass")]
    MissingSelfBelief,
    #[error("no trusted-peer cue found")]
    NoPeerNamed,
    #[error("named peer {0:?} is not in the roster")]
    UnknownPeer(String),
    #[error("invalid method spec: {0}")]
    InvalidSpec(String),
}

/// Which prompt template a pair was rendered from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    SaAg,
    OneStage,
    EclIStage1,
    EclEStage1,
    Stage2,
}

/// A rendered (system, user) prompt pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    pub system: String,
    pub user: String,
    pub kind: PromptKind,
}

impl PromptPair {
    /// Canonical dump format used by golden files and `render --dump`.
    pub fn to_dump_string(&self) -> String {
        format!(
            "==== system ====\n{}\n==== user ====\n{}\n",
            self.system, self.user
        )
    }
}

/// Method selection plus the two-stage options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    /// Append the agent's own independent reasoning to the stage-2 prompt.
    #[serde(default)]
    pub db_enabled: bool,
    /// Also parse a trusted peer (and score PRR) outside ECL-E.
    #[serde(default)]
    pub parse_trusted: bool,
    #[serde(default = "default_stage1_cap")]
    pub stage1_char_cap: usize,
}

fn default_stage1_cap() -> usize {
    DEFAULT_STAGE1_CHAR_CAP
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            db_enabled: false,
            parse_trusted: false,
            stage1_char_cap: DEFAULT_STAGE1_CHAR_CAP,
        }
    }

    pub fn with_db(mut self) -> Self {
        self.db_enabled = true;
        self
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.db_enabled && !self.method.is_two_stage() {
            return Err(PromptError::InvalidSpec(
                "decoupled belief is only defined for the two-stage methods".into(),
            ));
        }
        if self.stage1_char_cap == 0 {
            return Err(PromptError::InvalidSpec("stage1_char_cap must be positive".into()));
        }
        Ok(())
    }
}

/// Pipeline stage being rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    One,
    Two,
}

/// Substitutes placeholders in a single pass over the template, so
/// substituted content is never rescanned.
fn render_template(template: &str, subs: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(pos) = rest.find('{') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        match tail.find('}') {
            Some(end) => {
                let token = &tail[1..end];
                if let Some((_, value)) = subs.iter().find(|(key, _)| *key == token) {
                    out.push_str(value);
                    rest = &tail[end + 1..];
                } else {
                    out.push('{');
                    rest = &rest[pos + 1..];
                }
            }
            None => {
                out.push_str(tail);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Renders the history rounds: each round is the question block followed by
/// one answer line per peer; rounds are joined by `###` separators. The
/// `---- begin/end of history ----` delimiters live in the templates.
pub fn render_history_block(episode: &Episode) -> String {
    let rounds: Vec<String> = episode
        .history
        .iter()
        .map(|round| {
            let lines: Vec<String> = round
                .responses
                .iter()
                .map(|r| format!("{}: {}", r.peer_name, r.answer_sentence()))
                .collect();
            format!("{}\n\n{}", round.question.text, lines.join("\n"))
        })
        .collect();
    rounds.join("\n\n###\n\n")
}

/// Renders the current-round block: the question followed by per-peer
/// responses. The reasoning variant inserts each peer's rationale paragraph
/// before its answer sentence; the outcome variant emits answer lines only.
pub fn render_current_block(episode: &Episode) -> String {
    let parts: Vec<String> = episode
        .current_responses
        .iter()
        .map(|r| match (episode.variant, &r.reasoning) {
            (Variant::MaReasoning, Some(reasoning)) => {
                format!("{}: {}\n\n{}", r.peer_name, reasoning, r.answer_sentence())
            }
            _ => format!("{}: {}", r.peer_name, r.answer_sentence()),
        })
        .collect();
    let joiner = match episode.variant {
        Variant::MaOutcome => "\n",
        Variant::MaReasoning => "\n\n",
    };
    format!(
        "{}\n\n{}",
        episode.instance.formatted_question,
        parts.join(joiner)
    )
}

/// SA prompt for a bare question, with no peer context at all.
pub fn render_sa_for_question(formatted_question: &str) -> PromptPair {
    PromptPair {
        system: SYSTEM_SOLVER.to_string(),
        user: render_template(USER_SA_AG, &[("current", formatted_question)]),
        kind: PromptKind::SaAg,
    }
}

fn truncate_chars(text: &str, cap: usize) -> &str {
    match text.char_indices().nth(cap) {
        Some((idx, _)) => {
            warn!(cap, "stage-1 output truncated before stage-2 prompt");
            &text[..idx]
        }
        None => text,
    }
}

/// Renders the prompt for one method and stage.
///
/// Stage 2 requires the raw stage-1 output, embedded verbatim (up to the
/// configured character cap); with decoupled belief enabled it also requires
/// the agent's independent pass.
pub fn render_prompt(
    spec: &MethodSpec,
    stage: Stage,
    episode: &Episode,
    stage1_output: Option<&str>,
    self_belief: Option<&str>,
) -> Result<PromptPair, PromptError> {
    spec.validate()?;
    let number = episode.num_peers().to_string();
    match (spec.method, stage) {
        (Method::Sa, Stage::One) => Ok(render_sa_for_question(&episode.instance.formatted_question)),
        (Method::Ag, Stage::One) => Ok(PromptPair {
            system: SYSTEM_SOLVER.to_string(),
            user: render_template(USER_SA_AG, &[("current", &render_current_block(episode))]),
            kind: PromptKind::SaAg,
        }),
        (Method::OneStage, Stage::One) => Ok(PromptPair {
            system: SYSTEM_SOLVER.to_string(),
            user: render_template(
                USER_ONE_STAGE,
                &[
                    ("number", number.as_str()),
                    ("history", &render_history_block(episode)),
                    ("current", &render_current_block(episode)),
                ],
            ),
            kind: PromptKind::OneStage,
        }),
        (Method::EclI, Stage::One) => Ok(PromptPair {
            system: SYSTEM_SUMMARIZER.to_string(),
            user: render_template(
                USER_ECL_I_STAGE1,
                &[("number", number.as_str()), ("history", &render_history_block(episode))],
            ),
            kind: PromptKind::EclIStage1,
        }),
        (Method::EclE, Stage::One) => Ok(PromptPair {
            system: SYSTEM_SUMMARIZER.to_string(),
            user: render_template(
                USER_ECL_E_STAGE1,
                &[("number", number.as_str()), ("history", &render_history_block(episode))],
            ),
            kind: PromptKind::EclEStage1,
        }),
        (Method::EclI | Method::EclE, Stage::Two) => {
            let stage1 = stage1_output.ok_or(PromptError::MissingStageOneOutput)?;
            let stage1 = truncate_chars(stage1, spec.stage1_char_cap);
            let current = render_current_block(episode);
            let user = if spec.db_enabled {
                let belief = self_belief.ok_or(PromptError::MissingSelfBelief)?;
                render_template(
                    USER_STAGE2_DB,
                    &[
                        ("number", number.as_str()),
                        ("output_stage1", stage1),
                        ("current", &current),
                        ("self_belief", belief),
                    ],
                )
            } else {
                render_template(
                    USER_STAGE2,
                    &[
                        ("number", number.as_str()),
                        ("output_stage1", stage1),
                        ("current", &current),
                    ],
                )
            };
            Ok(PromptPair {
                system: SYSTEM_SOLVER.to_string(),
                user,
                kind: PromptKind::Stage2,
            })
        }
        (method, Stage::Two) => Err(PromptError::InvalidSpec(format!(
            "method {method} has no stage 2"
        ))),
    }
}

static TRUST_CUE_RE: OnceLock<Regex> = OnceLock::new();

/// Extracts the peer named after the last trusted-peer cue. Both cue
/// wordings are accepted; the name is matched case-insensitively against the
/// roster after trimming quotes and punctuation.
pub fn parse_trusted_peer(text: &str, peer_names: &[String]) -> Result<String, PromptError> {
    let re = TRUST_CUE_RE.get_or_init(|| {
        Regex::new(r"(?i)most (?:reliable peer|trustworthy agent) is\s*:?").expect("static regex")
    });
    let m = re.find_iter(text).last().ok_or(PromptError::NoPeerNamed)?;
    let rest = &text[m.end()..];
    let line = rest.lines().next().unwrap_or("");
    let candidate = line.trim_matches(|c: char| !c.is_alphanumeric());
    if candidate.is_empty() {
        return Err(PromptError::NoPeerNamed);
    }
    let matches = |cand: &str| {
        peer_names
            .iter()
            .find(|n| n.eq_ignore_ascii_case(cand))
            .cloned()
    };
    if let Some(name) = matches(candidate) {
        return Ok(name);
    }
    if let Some(first) = candidate.split_whitespace().next() {
        let first = first.trim_matches(|c: char| !c.is_alphanumeric());
        if let Some(name) = matches(first) {
            return Ok(name);
        }
    }
    Err(PromptError::UnknownPeer(candidate.to_string()))
}

/// Pipeline stage tag on persisted call transcripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStage {
    Stage1,
    Stage2,
    Single,
    Belief,
}

/// Full transcript of one model call, persisted for RL export and audits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CallRecord {
    pub episode_id: String,
    pub method: Method,
    pub db_enabled: bool,
    pub stage: RecordStage,
    pub system: String,
    pub user: String,
    pub completion: String,
    pub prompt_sha256: String,
    pub setting: Setting,
    pub variant: Variant,
    pub perturbation: Perturbation,
}

struct CallCtx<'a> {
    episode: &'a Episode,
    spec: &'a MethodSpec,
    calls: Vec<CallRecord>,
}

impl<'a> CallCtx<'a> {
    async fn call(
        &mut self,
        agent: &dyn Agent,
        pair: &PromptPair,
        stage: CallStage<'_>,
        record_stage: RecordStage,
    ) -> Result<(String, u64), EpisodeError> {
        let started = Instant::now();
        let completion = agent
            .complete(AgentCall { system: &pair.system, user: &pair.user, stage })
            .await
            .map_err(|e| EpisodeError::Backend { message: e.to_string() })?;
        let elapsed = started.elapsed().as_millis() as u64;
        self.calls.push(CallRecord {
            episode_id: self.episode.id().to_string(),
            method: self.spec.method,
            db_enabled: self.spec.db_enabled,
            stage: record_stage,
            system: pair.system.clone(),
            user: pair.user.clone(),
            completion: completion.clone(),
            prompt_sha256: prompt_hash(&pair.system, &pair.user),
            setting: self.episode.setting,
            variant: self.episode.variant,
            perturbation: self.episode.perturbation,
        });
        Ok((completion, elapsed))
    }
}

/// Executes one method over an episode.
///
/// Backend and final-answer parse failures are recorded in the result's
/// `error` field rather than propagated; the returned call transcripts cover
/// every call that completed.
pub async fn run_method(
    spec: &MethodSpec,
    episode: &Episode,
    agent: &dyn Agent,
) -> Result<(EpisodeResult, Vec<CallRecord>), PromptError> {
    spec.validate()?;
    let mut ctx = CallCtx { episode, spec, calls: Vec::new() };
    let mut latency = LatencyMs::default();
    let mut result = EpisodeResult {
        episode_id: episode.id().to_string(),
        method: spec.method,
        db_enabled: spec.db_enabled,
        stage1: None,
        stage2_raw: String::new(),
        predicted: None,
        outcome_reward: 0,
        prr: None,
        latency_ms: LatencyMs::default(),
        error: None,
    };

    let finish = |mut result: EpisodeResult, latency: LatencyMs, ctx: CallCtx<'_>| {
        result.latency_ms = latency;
        Ok((result, ctx.calls))
    };

    // Decoupled belief: obtain the agent's independent pass first.
    let mut belief: Option<String> = None;
    if spec.db_enabled {
        let pair = render_sa_for_question(&episode.instance.formatted_question);
        match ctx
            .call(agent, &pair, CallStage::SelfBelief { episode }, RecordStage::Belief)
            .await
        {
            Ok((text, ms)) => {
                latency.belief = Some(ms);
                belief = Some(text);
            }
            Err(err) => {
                result.error = Some(err);
                return finish(result, latency, ctx);
            }
        }
    }

    let final_raw = if spec.method.is_two_stage() {
        let stage1_pair = render_prompt(spec, Stage::One, episode, None, None)?;
        let stage1_text = match ctx
            .call(agent, &stage1_pair, CallStage::Stage1 { episode }, RecordStage::Stage1)
            .await
        {
            Ok((text, ms)) => {
                latency.stage1 = Some(ms);
                text
            }
            Err(err) => {
                result.error = Some(err);
                return finish(result, latency, ctx);
            }
        };

        let wants_prr = spec.method == Method::EclE || spec.parse_trusted;
        let trusted = if wants_prr {
            parse_trusted_peer(&stage1_text, &episode.peer_names).ok()
        } else {
            None
        };
        if wants_prr {
            // Unparseable stage-1 output counts as failed recognition so the
            // reward stays total.
            result.prr = Some(peer_recognition_reward(
                trusted.as_deref(),
                &episode.reliable_peer,
            ));
        }
        result.stage1 = Some(EpistemicProfile { text: stage1_text.clone(), trusted_peer: trusted });

        let stage2_pair =
            render_prompt(spec, Stage::Two, episode, Some(&stage1_text), belief.as_deref())?;
        match ctx
            .call(
                agent,
                &stage2_pair,
                CallStage::Stage2 { episode, stage1_raw: &stage1_text },
                RecordStage::Stage2,
            )
            .await
        {
            Ok((text, ms)) => {
                latency.stage2 = Some(ms);
                text
            }
            Err(err) => {
                result.error = Some(err);
                return finish(result, latency, ctx);
            }
        }
    } else {
        let pair = render_prompt(spec, Stage::One, episode, None, None)?;
        let text = match ctx
            .call(agent, &pair, CallStage::Single { episode }, RecordStage::Single)
            .await
        {
            Ok((text, ms)) => {
                latency.stage2 = Some(ms);
                text
            }
            Err(err) => {
                result.error = Some(err);
                return finish(result, latency, ctx);
            }
        };
        if spec.parse_trusted {
            // Recognition probe for single-call methods: parse the trusted
            // peer straight out of the one completion.
            let trusted = parse_trusted_peer(&text, &episode.peer_names).ok();
            result.prr = Some(peer_recognition_reward(
                trusted.as_deref(),
                &episode.reliable_peer,
            ));
        }
        text
    };

    result.stage2_raw = final_raw.clone();
    match normalize_answer(&final_raw) {
        Ok(letter) => {
            result.predicted = Some(letter);
            result.outcome_reward = outcome_reward(Some(letter), episode.instance.gt_option);
        }
        Err(e) => {
            result.error = Some(EpisodeError::AnswerParse { message: e.to_string() });
        }
    }
    finish(result, latency, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Method;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn history_block_shape() {
        let episode = fixtures::reference_episode_four_peer(Variant::MaOutcome);
        let block = render_history_block(&episode);
        assert_eq!(block.matches("\n\n###\n\n").count(), 4);
        let answer_lines = block
            .lines()
            .filter(|l| {
                l.starts_with("Jack:") || l.starts_with("Mary:") || l.starts_with("Tony:")
                    || l.starts_with("George:")
            })
            .count();
        assert_eq!(answer_lines, 20);
    }

    #[test]
    fn single_round_history_has_no_separator() {
        let mut episode = fixtures::reference_episode_four_peer(Variant::MaOutcome);
        episode.history.truncate(1);
        let block = render_history_block(&episode);
        assert!(!block.contains("###"));
    }

    #[test]
    fn current_block_variants_differ_only_by_rationales() {
        let outcome = fixtures::reference_episode_four_peer(Variant::MaOutcome);
        let reasoning = fixtures::reference_episode_four_peer(Variant::MaReasoning);
        let a = render_current_block(&outcome);
        let b = render_current_block(&reasoning);
        assert_ne!(a, b);
        // Every outcome answer sentence also appears in the reasoning block.
        for resp in &outcome.current_responses {
            let sentence = resp.answer_sentence();
            assert!(a.contains(&sentence));
            assert!(b.contains(&sentence));
        }
        for resp in &reasoning.current_responses {
            assert!(b.contains(resp.reasoning.as_deref().unwrap()));
        }
    }

    #[test]
    fn stage1_prompts_withhold_current_round() {
        let episode = fixtures::reference_episode_four_peer(Variant::MaReasoning);
        for method in [Method::EclI, Method::EclE] {
            let spec = MethodSpec::new(method);
            let pair = render_prompt(&spec, Stage::One, &episode, None, None).unwrap();
            assert!(!pair.user.contains(&episode.instance.formatted_question));
            for resp in &episode.current_responses {
                assert!(!pair.user.contains(&resp.answer_sentence()));
            }
        }
    }

    #[test]
    fn stage2_embeds_stage1_verbatim_and_no_history_text() {
        let episode = fixtures::reference_episode_four_peer(Variant::MaOutcome);
        let spec = MethodSpec::new(Method::EclE);
        let profile = "George answered everything correctly; the rest did not.";
        let pair = render_prompt(&spec, Stage::Two, &episode, Some(profile), None).unwrap();
        assert!(pair.user.contains(profile));
        for round in &episode.history {
            assert!(!pair.user.contains(&round.question.text));
        }
    }

    #[test]
    fn sa_prompt_is_peer_independent() {
        let four = fixtures::reference_episode_four_peer(Variant::MaReasoning);
        let two = fixtures::reference_episode_two_peer(Variant::MaOutcome);
        let spec = MethodSpec::new(Method::Sa);
        let a = render_prompt(&spec, Stage::One, &four, None, None).unwrap();
        let b = render_prompt(&spec, Stage::One, &two, None, None).unwrap();
        // Both reference episodes share the same current instance.
        assert_eq!(a, b);
        assert!(!a.user.contains("---- begin of history ----"));
    }

    #[test]
    fn ecl_e_stage1_ends_with_player_name_instruction() {
        let episode = fixtures::reference_episode_four_peer(Variant::MaOutcome);
        let spec = MethodSpec::new(Method::EclE);
        let pair = render_prompt(&spec, Stage::One, &episode, None, None).unwrap();
        assert!(pair.user.ends_with("The most trustworthy agent is: PLAYER_NAME"));
        assert!(pair.user.contains(&format!("There are {} other players", episode.num_peers())));
    }

    #[test]
    fn stage2_without_stage1_output_errors() {
        let episode = fixtures::reference_episode_four_peer(Variant::MaOutcome);
        let spec = MethodSpec::new(Method::EclI);
        let err = render_prompt(&spec, Stage::Two, &episode, None, None).unwrap_err();
        assert_eq!(err, PromptError::MissingStageOneOutput);
    }

    #[test]
    fn stage1_output_is_capped() {
        let episode = fixtures::reference_episode_four_peer(Variant::MaOutcome);
        let mut spec = MethodSpec::new(Method::EclI);
        spec.stage1_char_cap = 10;
        let long = "x".repeat(100);
        let pair = render_prompt(&spec, Stage::Two, &episode, Some(&long), None).unwrap();
        assert!(pair.user.contains(&"x".repeat(10)));
        assert!(!pair.user.contains(&"x".repeat(11)));
    }

    #[test]
    fn parse_trusted_peer_cues_and_normalization() {
        let roster = names(&["Jack", "Mary", "Tony", "George"]);
        assert_eq!(
            parse_trusted_peer("The most trustworthy agent is: George", &roster).unwrap(),
            "George"
        );
        assert_eq!(
            parse_trusted_peer("...so the most reliable peer is: george.", &roster).unwrap(),
            "George"
        );
        assert_eq!(
            parse_trusted_peer(
                "Maybe Mary. The most trustworthy agent is: **Tony**",
                &roster
            )
            .unwrap(),
            "Tony"
        );
        // Last occurrence wins.
        assert_eq!(
            parse_trusted_peer(
                "The most trustworthy agent is: Jack\nNo wait.\nThe most trustworthy agent is: Mary",
                &roster
            )
            .unwrap(),
            "Mary"
        );
        assert_eq!(
            parse_trusted_peer("The most trustworthy agent is: Alice", &roster),
            Err(PromptError::UnknownPeer("Alice".into()))
        );
        assert_eq!(
            parse_trusted_peer("I cannot decide.", &roster),
            Err(PromptError::NoPeerNamed)
        );
    }

    #[test]
    fn db_requires_two_stage_method() {
        let spec = MethodSpec { db_enabled: true, ..MethodSpec::new(Method::Ag) };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn template_rendering_is_single_pass() {
        let out = render_template("a {x} b", &[("x", "{y}")]);
        assert_eq!(out, "a {y} b");
        let out = render_template("{x}{x}", &[("x", "1")]);
        assert_eq!(out, "11");
        let out = render_template("keep {unknown} as-is", &[("x", "1")]);
        assert_eq!(out, "keep {unknown} as-is");
    }
}
