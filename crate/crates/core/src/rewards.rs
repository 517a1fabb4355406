//! Reward functions, the frequency-based trust oracle, the follow-trusted
//! aggregation baseline, and RL training-record export.
//!
//! The ground-truth key lives in the harness only; it is never rendered into
//! any prompt. Agents must judge history correctness themselves.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonl::{self, JsonlError};
use crate::model::{answers_equal, Episode, EpisodeResult, HistoryRound, Method, OptionLetter, Setting};
use crate::prompt::{CallRecord, RecordStage};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("history question {0} missing from the ground-truth key")]
    MissingKey(String),
    #[error("not enough observed history to score reliability")]
    InsufficientHistory,
    #[error("peer {0:?} is not in the episode roster")]
    UnknownPeer(String),
    #[error("call from method {got} does not fit the {expected} export scheme")]
    SchemeMismatch { expected: &'static str, got: String },
    #[error("no result recorded for episode {0}")]
    MissingResult(String),
    #[error(transparent)]
    Io(#[from] JsonlError),
}

/// Outcome reward: 1 iff a predicted letter is present and equals the ground
/// truth. An absent prediction scores 0.
pub fn outcome_reward(predicted: Option<OptionLetter>, gt: OptionLetter) -> u8 {
    match predicted {
        Some(p) if answers_equal(p, gt) => 1,
        _ => 0,
    }
}

/// Peer recognition reward: 1.0 iff the named peer matches the designated
/// reliable peer (case-insensitive, trimmed); 0.0 otherwise, including when
/// nothing was named.
pub fn peer_recognition_reward(named: Option<&str>, reliable: &str) -> f64 {
    match named {
        Some(name) if name.trim().eq_ignore_ascii_case(reliable.trim()) => 1.0,
        _ => 0.0,
    }
}

/// One peer's historical tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerReliability {
    pub name: String,
    pub correct_count: u32,
    pub total_count: u32,
    pub fraction: f64,
}

/// Per-peer historical accuracy, in roster order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityScore {
    pub peers: Vec<PeerReliability>,
}

/// Builds the harness-side ground-truth key from a set of instances.
pub fn gt_key_from_instances(instances: &[crate::model::QaInstance]) -> BTreeMap<String, OptionLetter> {
    instances
        .iter()
        .map(|q| (q.id.clone(), q.answer_key()))
        .collect()
}

/// Counts each peer's correct answers over the history against the
/// ground-truth key.
pub fn estimate_reliability(
    history: &[HistoryRound],
    gt_key: &BTreeMap<String, OptionLetter>,
) -> Result<ReliabilityScore, RewardError> {
    let first = history.first().ok_or(RewardError::InsufficientHistory)?;
    let roster: Vec<String> = first.responses.iter().map(|r| r.peer_name.clone()).collect();
    let mut tally: BTreeMap<&str, (u32, u32)> = BTreeMap::new();
    for round in history {
        let key = gt_key
            .get(&round.question.id)
            .ok_or_else(|| RewardError::MissingKey(round.question.id.clone()))?;
        for resp in &round.responses {
            let entry = tally.entry(resp.peer_name.as_str()).or_default();
            entry.1 += 1;
            if answers_equal(resp.answer_option, *key) {
                entry.0 += 1;
            }
        }
    }
    let peers = roster
        .iter()
        .map(|name| {
            let (correct, total) = tally.get(name.as_str()).copied().unwrap_or_default();
            PeerReliability {
                name: name.clone(),
                correct_count: correct,
                total_count: total,
                fraction: if total > 0 { correct as f64 / total as f64 } else { 0.0 },
            }
        })
        .collect();
    Ok(ReliabilityScore { peers })
}

/// The most historically accurate peer: argmax by fraction, ties broken by
/// roster order (lowest index wins).
pub fn oracle_most_reliable(scores: &ReliabilityScore) -> Result<&str, RewardError> {
    if scores.peers.is_empty() || scores.peers.iter().any(|p| p.total_count == 0) {
        return Err(RewardError::InsufficientHistory);
    }
    let mut best = &scores.peers[0];
    for peer in &scores.peers[1..] {
        if peer.fraction > best.fraction {
            best = peer;
        }
    }
    Ok(&best.name)
}

/// Aggregation baseline: answer whatever the trusted peer answered in the
/// current round.
pub fn follow_trusted(episode: &Episode, trusted: &str) -> Result<OptionLetter, RewardError> {
    episode
        .current_response_of(trusted)
        .map(|r| r.answer_option)
        .ok_or_else(|| RewardError::UnknownPeer(trusted.to_string()))
}

/// Reward wiring for exported training records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RlScheme {
    /// Stage-1 records carry the peer recognition reward, stage-2 the outcome.
    EclE,
    /// Both stages carry the outcome reward.
    EclI,
    /// The single call carries the outcome reward; optionally also the
    /// recognition reward, exported as components plus their sum.
    OneStage { include_prr: bool },
}

impl RlScheme {
    fn name(&self) -> &'static str {
        match self {
            RlScheme::EclE => "ecl_e",
            RlScheme::EclI => "ecl_i",
            RlScheme::OneStage { .. } => "one_stage",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardComponents {
    pub outcome: f64,
    pub prr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlMeta {
    pub episode_id: String,
    pub method: Method,
    pub setting: Setting,
}

/// One reward-annotated training record: a full (system, user, completion)
/// transcript of a single model call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlRecord {
    /// 1 for trust-estimation calls, 2 for answer-producing calls.
    pub stage: u8,
    pub system: String,
    pub user: String,
    pub completion: String,
    pub reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<RewardComponents>,
    pub meta: RlMeta,
}

/// Builds one training record per persisted model call under the given
/// scheme. Belief calls (decoupled belief) are not training targets and are
/// skipped.
pub fn build_rl_records(
    results: &[EpisodeResult],
    calls: &[CallRecord],
    scheme: RlScheme,
) -> Result<Vec<RlRecord>, RewardError> {
    let by_id: BTreeMap<&str, &EpisodeResult> =
        results.iter().map(|r| (r.episode_id.as_str(), r)).collect();
    let mut records = Vec::new();
    for call in calls {
        if call.stage == RecordStage::Belief {
            continue;
        }
        let result = by_id
            .get(call.episode_id.as_str())
            .ok_or_else(|| RewardError::MissingResult(call.episode_id.clone()))?;
        let or = result.outcome_reward as f64;
        let prr = result.prr.unwrap_or(0.0);
        let (stage, reward, components) = match (scheme, call.stage) {
            (RlScheme::EclE, RecordStage::Stage1) => (1, prr, None),
            (RlScheme::EclE, RecordStage::Stage2) => (2, or, None),
            (RlScheme::EclI, RecordStage::Stage1) => (1, or, None),
            (RlScheme::EclI, RecordStage::Stage2) => (2, or, None),
            (RlScheme::OneStage { include_prr: false }, RecordStage::Single) => (2, or, None),
            (RlScheme::OneStage { include_prr: true }, RecordStage::Single) => {
                (2, or + prr, Some(RewardComponents { outcome: or, prr }))
            }
            _ => {
                return Err(RewardError::SchemeMismatch {
                    expected: scheme.name(),
                    got: format!("{} ({:?})", call.method, call.stage),
                })
            }
        };
        records.push(RlRecord {
            stage,
            system: call.system.clone(),
            user: call.user.clone(),
            completion: call.completion.clone(),
            reward,
            components,
            meta: RlMeta {
                episode_id: call.episode_id.clone(),
                method: call.method,
                setting: call.setting,
            },
        });
    }
    Ok(records)
}

/// Writes the training records as JSONL; returns how many were written.
pub fn export_rl_records(
    results: &[EpisodeResult],
    calls: &[CallRecord],
    scheme: RlScheme,
    path: &Path,
) -> Result<usize, RewardError> {
    let records = build_rl_records(results, calls, scheme)?;
    jsonl::write_jsonl(path, &records)?;
    Ok(records.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_episode, EpisodeSpec};
    use crate::fixtures;
    use crate::model::Variant;
    use crate::perturb::{apply_all_wrong, apply_flip};

    fn letter(c: char) -> OptionLetter {
        OptionLetter::new(c).unwrap()
    }

    #[test]
    fn outcome_reward_table() {
        assert_eq!(outcome_reward(Some(letter('F')), letter('F')), 1);
        assert_eq!(outcome_reward(Some(letter('C')), letter('F')), 0);
        assert_eq!(outcome_reward(None, letter('F')), 0);
        assert_eq!(outcome_reward(Some(letter('f')), letter('F')), 1);
    }

    #[test]
    fn prr_table() {
        assert_eq!(peer_recognition_reward(Some("George"), "George"), 1.0);
        assert_eq!(peer_recognition_reward(Some("Jack"), "George"), 0.0);
        assert_eq!(peer_recognition_reward(None, "George"), 0.0);
        assert_eq!(peer_recognition_reward(Some("george"), "George"), 1.0);
        assert_eq!(peer_recognition_reward(Some("  George  "), "George"), 1.0);
        assert_eq!(peer_recognition_reward(Some(""), "George"), 0.0);
    }

    #[test]
    fn reference_history_reliability_fractions() {
        // Independent oracle: compare each of the 20 answer letters against
        // the key by hand, then check estimate_reliability agrees.
        let episode = fixtures::reference_episode_four_peer(Variant::MaOutcome);
        let key = fixtures::reference_history_gt_key();
        let mut manual: BTreeMap<String, u32> = BTreeMap::new();
        let mut seen = 0;
        for round in &episode.history {
            let gt = key[&round.question.id];
            for resp in &round.responses {
                seen += 1;
                if resp.answer_option.as_char() == gt.as_char() {
                    *manual.entry(resp.peer_name.clone()).or_default() += 1;
                }
            }
        }
        assert_eq!(seen, 20);

        let scores = estimate_reliability(&episode.history, &key).unwrap();
        for peer in &scores.peers {
            let expected = manual.get(&peer.name).copied().unwrap_or(0);
            assert_eq!(peer.correct_count, expected, "{}", peer.name);
            assert_eq!(peer.total_count, 5);
        }
        // Frozen values: George is 5/5, everyone else 0/5.
        let by_name: BTreeMap<&str, &PeerReliability> =
            scores.peers.iter().map(|p| (p.name.as_str(), p)).collect();
        assert_eq!(by_name["George"].fraction, 1.0);
        for other in ["Jack", "Mary", "Tony"] {
            assert_eq!(by_name[other].fraction, 0.0, "{other}");
        }
        assert_eq!(oracle_most_reliable(&scores).unwrap(), "George");
    }

    #[test]
    fn estimate_reliability_missing_key_and_empty_history() {
        let episode = fixtures::reference_episode_four_peer(Variant::MaOutcome);
        let mut key = fixtures::reference_history_gt_key();
        key.remove(&episode.history[0].question.id);
        assert!(matches!(
            estimate_reliability(&episode.history, &key),
            Err(RewardError::MissingKey(_))
        ));
        assert!(matches!(
            estimate_reliability(&[], &key),
            Err(RewardError::InsufficientHistory)
        ));
    }

    fn scores(entries: &[(&str, u32, u32)]) -> ReliabilityScore {
        ReliabilityScore {
            peers: entries
                .iter()
                .map(|(name, correct, total)| PeerReliability {
                    name: name.to_string(),
                    correct_count: *correct,
                    total_count: *total,
                    fraction: *correct as f64 / *total as f64,
                })
                .collect(),
        }
    }

    #[test]
    fn oracle_argmax_and_tie_break() {
        assert_eq!(
            oracle_most_reliable(&scores(&[("A", 5, 5), ("B", 0, 5)])).unwrap(),
            "A"
        );
        assert_eq!(
            oracle_most_reliable(&scores(&[("A", 3, 5), ("B", 3, 5), ("C", 1, 5)])).unwrap(),
            "A"
        );
        assert_eq!(
            oracle_most_reliable(&scores(&[("A", 1, 5), ("B", 4, 5), ("C", 2, 5)])).unwrap(),
            "B"
        );
        assert!(matches!(
            oracle_most_reliable(&scores(&[("A", 0, 0)])),
            Err(RewardError::InsufficientHistory)
        ));
    }

    #[test]
    fn oracle_decision_is_scale_invariant() {
        let episode = fixtures::reference_episode_four_peer(Variant::MaOutcome);
        let key = fixtures::reference_history_gt_key();
        let base = estimate_reliability(&episode.history, &key).unwrap();
        let winner = oracle_most_reliable(&base).unwrap().to_string();
        for k in 2..=4usize {
            let mut replicated = Vec::new();
            for _ in 0..k {
                replicated.extend(episode.history.iter().cloned());
            }
            let scaled = estimate_reliability(&replicated, &key).unwrap();
            assert_eq!(oracle_most_reliable(&scaled).unwrap(), winner);
            for (a, b) in base.peers.iter().zip(&scaled.peers) {
                assert_eq!(a.fraction, b.fraction);
                assert_eq!(b.total_count, a.total_count * k as u32);
            }
        }
    }

    #[test]
    fn follow_trusted_tracks_the_perturbations() {
        let corpus = fixtures::synthetic_corpus(30, 6, 5);
        let (pool, rest) = corpus.split_at(20);
        let spec = EpisodeSpec {
            num_peers: 4,
            history_length: 5,
            setting: crate::model::Setting::Adversarial,
            variant: Variant::MaOutcome,
            seed: 5,
            peer_pool: None,
        };
        let episode = build_episode(&rest[0], pool, &spec).unwrap();
        let gt = episode.instance.gt_option;
        assert_eq!(follow_trusted(&episode, &episode.reliable_peer).unwrap(), gt);

        let flipped = apply_flip(&episode).unwrap();
        assert_ne!(follow_trusted(&flipped, &flipped.reliable_peer).unwrap(), gt);

        let all_wrong = apply_all_wrong(&episode).unwrap();
        for peer in &all_wrong.peer_names {
            assert_ne!(follow_trusted(&all_wrong, peer).unwrap(), gt);
        }
        assert!(matches!(
            follow_trusted(&episode, "Nobody"),
            Err(RewardError::UnknownPeer(_))
        ));
    }

    #[test]
    fn oracle_soundness_over_builder_episodes() {
        let corpus = fixtures::synthetic_corpus(80, 6, 2);
        let (pool, rest) = corpus.split_at(40);
        let key = gt_key_from_instances(pool);
        for (i, instance) in rest.iter().enumerate() {
            let episode = build_episode(
                instance,
                pool,
                &EpisodeSpec {
                    num_peers: 4,
                    history_length: 5,
                    setting: crate::model::Setting::Adversarial,
                    variant: Variant::MaOutcome,
                    seed: i as u64,
                    peer_pool: None,
                },
            )
            .unwrap();
            let scores = estimate_reliability(&episode.history, &key).unwrap();
            assert_eq!(oracle_most_reliable(&scores).unwrap(), episode.reliable_peer);

            // History-only statistic: perturbations cannot move it.
            let flipped = apply_flip(&episode).unwrap();
            assert_eq!(estimate_reliability(&flipped.history, &key).unwrap(), scores);
            let all_wrong = apply_all_wrong(&episode).unwrap();
            assert_eq!(estimate_reliability(&all_wrong.history, &key).unwrap(), scores);
        }
    }
}
