//! Shared domain types and answer normalization.
//!
//! Everything downstream (dataset construction, prompt rendering,
//! perturbations, rewards, the runner) consumes the types defined here. All
//! types are immutable after construction and safe to share across concurrent
//! evaluation tasks. The canonical on-disk encoding is JSONL: one record per
//! line, UTF-8, snake_case field names.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default display names assigned to peers, in order.
pub const DEFAULT_PEER_NAMES: [&str; 6] = ["Jack", "Mary", "Tony", "George", "Tom", "John"];

/// Fixed pool of answer-sentence templates used when rendering peer
/// responses. `{answer}` stands for `(X) option text`. A response's
/// `phrasing_id` indexes this pool.
pub const PHRASING_POOL: [&str; 10] = [
    "I'd favor \"{answer}\" as the most fitting option",
    "I'd stand by \"{answer}\" as the correct answer",
    "I'd select \"{answer}\" as the best answer",
    "I believe \"{answer}\" is the right answer",
    "I'd vote for \"{answer}\" as the most appropriate choice",
    "I think \"{answer}\" is the most suitable option",
    "My preference would be \"{answer}\"",
    "The best answer is \"{answer}\"",
    "My choice would be \"{answer}\"",
    "I'm inclined to choose \"{answer}\"",
];

/// A single multiple-choice option label (`A`..`Z`), stored upper-case.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OptionLetter(char);

impl OptionLetter {
    pub fn new(c: char) -> Result<Self, AnswerParseError> {
        if c.is_ascii_alphabetic() {
            Ok(Self(c.to_ascii_uppercase()))
        } else {
            Err(AnswerParseError::InvalidOptionLetter(c))
        }
    }

    /// Letter for a zero-based option index (0 -> A).
    pub fn from_index(idx: usize) -> Result<Self, AnswerParseError> {
        if idx < 26 {
            Ok(Self((b'A' + idx as u8) as char))
        } else {
            Err(AnswerParseError::InvalidOptionIndex(idx))
        }
    }

    pub fn as_char(&self) -> char {
        self.0
    }
}

impl fmt::Display for OptionLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for OptionLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<String> for OptionLetter {
    type Error = AnswerParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Self::new(c),
            _ => Err(AnswerParseError::InvalidOptionString(s)),
        }
    }
}

impl From<OptionLetter> for String {
    fn from(l: OptionLetter) -> String {
        l.0.to_string()
    }
}

/// Errors from answer parsing and option-letter construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnswerParseError {
    #[error("no answer pattern found in completion")]
    NoAnswerFound,
    #[error("invalid option letter: {0:?}")]
    InvalidOptionLetter(char),
    #[error("option index {0} out of range (max 25)")]
    InvalidOptionIndex(usize),
    #[error("option letter must be a single character, got {0:?}")]
    InvalidOptionString(String),
}

/// One standardized question with ground truth, distractors, and
/// pre-generated peer reasoning pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaInstance {
    pub id: String,
    /// Rendered `Q: ...` block including the lettered answer choices.
    pub formatted_question: String,
    /// Ordered map from option letter to option text.
    pub options: BTreeMap<OptionLetter, String>,
    pub gt_option: OptionLetter,
    pub wrong_options: Vec<OptionLetter>,
    /// Rationales supporting the (pseudo) ground-truth answer.
    pub gt_reasoning: Vec<String>,
    /// Designated strong-peer answer in the natural setting. When present it
    /// stands in for correctness during episode construction; absent in the
    /// adversarial setting, where `gt_reasoning` argues the real ground truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_gt_option: Option<OptionLetter>,
    /// Wrong-answer rationales grouped by source label, each paired with the
    /// option letter it argues for.
    pub wrong_reasoning: BTreeMap<String, Vec<(OptionLetter, String)>>,
}

impl QaInstance {
    /// The correctness key used for episode construction and reliability
    /// scoring: the designated pseudo answer in the natural setting,
    /// otherwise the real ground truth.
    pub fn answer_key(&self) -> OptionLetter {
        self.pseudo_gt_option.unwrap_or(self.gt_option)
    }

    pub fn option_text(&self, letter: OptionLetter) -> Option<&str> {
        self.options.get(&letter).map(String::as_str)
    }

    /// Checks the structural invariants of the instance.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.options.len() < 2 {
            return Err(ModelError::invariant(format!(
                "instance {}: needs >= 2 options, got {}",
                self.id,
                self.options.len()
            )));
        }
        if !self.options.contains_key(&self.gt_option) {
            return Err(ModelError::invariant(format!(
                "instance {}: gt_option {} is not an option key",
                self.id, self.gt_option
            )));
        }
        for w in &self.wrong_options {
            if !self.options.contains_key(w) {
                return Err(ModelError::invariant(format!(
                    "instance {}: wrong option {} is not an option key",
                    self.id, w
                )));
            }
            if *w == self.gt_option {
                return Err(ModelError::invariant(format!(
                    "instance {}: wrong_options contains gt_option {}",
                    self.id, w
                )));
            }
        }
        for (source, entries) in &self.wrong_reasoning {
            for (letter, _) in entries {
                if !self.wrong_options.contains(letter) {
                    return Err(ModelError::invariant(format!(
                        "instance {}: wrong_reasoning[{}] argues {} which is not in wrong_options",
                        self.id, source, letter
                    )));
                }
            }
        }
        Ok(())
    }

    /// Distinct wrong options that have at least one pooled rationale.
    pub fn pooled_wrong_options(&self) -> Vec<OptionLetter> {
        let mut seen = Vec::new();
        for entries in self.wrong_reasoning.values() {
            for (letter, _) in entries {
                if !seen.contains(letter) {
                    seen.push(*letter);
                }
            }
        }
        seen.sort();
        seen
    }

    /// All pooled rationales arguing for the given wrong option.
    pub fn wrong_rationales_for(&self, letter: OptionLetter) -> Vec<&str> {
        let mut out = Vec::new();
        for entries in self.wrong_reasoning.values() {
            for (l, text) in entries {
                if *l == letter {
                    out.push(text.as_str());
                }
            }
        }
        out
    }
}

/// Structural invariant violations on domain types.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl ModelError {
    fn invariant(msg: String) -> Self {
        Self::Invariant(msg)
    }
}

/// One peer's answer to a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerResponse {
    pub peer_name: String,
    pub answer_option: OptionLetter,
    pub answer_text: String,
    /// Present only for current-round responses under the reasoning variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    /// Index into [`PHRASING_POOL`].
    pub phrasing_id: usize,
}

impl PeerResponse {
    /// The peer's one-line answer sentence, e.g.
    /// `My choice would be "(C) wavelength"`.
    pub fn answer_sentence(&self) -> String {
        let answer = format!("({}) {}", self.answer_option, self.answer_text);
        PHRASING_POOL[self.phrasing_id % PHRASING_POOL.len()].replace("{answer}", &answer)
    }
}

/// Reference to a question inside a history round: id plus rendered text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRef {
    pub id: String,
    pub text: String,
}

/// One past round: a question and every peer's answer to it. History is
/// outcome-only, so responses never carry reasoning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRound {
    pub question: QuestionRef,
    pub responses: Vec<PeerResponse>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Natural,
    Adversarial,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Natural => write!(f, "natural"),
            Setting::Adversarial => write!(f, "adversarial"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    MaOutcome,
    MaReasoning,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::MaOutcome => write!(f, "ma_outcome"),
            Variant::MaReasoning => write!(f, "ma_reasoning"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    None,
    Flip,
    AllWrong,
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::None => write!(f, "none"),
            Perturbation::Flip => write!(f, "flip"),
            Perturbation::AllWrong => write!(f, "all_wrong"),
        }
    }
}

/// A fully materialized evaluation unit: the target question, T rounds of
/// history, current-round peer responses, and the construction-time labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub instance: QaInstance,
    pub history: Vec<HistoryRound>,
    pub current_responses: Vec<PeerResponse>,
    pub peer_names: Vec<String>,
    /// The designated peer whose responses track the (pseudo) ground truth
    /// across all history rounds. This labels the historical identity:
    /// perturbations never change it.
    pub reliable_peer: String,
    pub setting: Setting,
    pub variant: Variant,
    pub perturbation: Perturbation,
    pub seed: u64,
}

impl Episode {
    /// Stable identifier used in result records (unique within one episodes
    /// file: each instance is materialized at most once per file).
    pub fn id(&self) -> &str {
        &self.instance.id
    }

    pub fn num_peers(&self) -> usize {
        self.peer_names.len()
    }

    pub fn current_response_of(&self, peer: &str) -> Option<&PeerResponse> {
        self.current_responses.iter().find(|r| r.peer_name == peer)
    }

    /// Checks construction invariants. The reliability dichotomy is only
    /// guaranteed for pristine (unperturbed) episodes.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.instance.validate()?;
        if self.peer_names.len() < 2 {
            return Err(ModelError::invariant(format!(
                "episode {}: needs >= 2 peers",
                self.id()
            )));
        }
        if !self.peer_names.contains(&self.reliable_peer) {
            return Err(ModelError::invariant(format!(
                "episode {}: reliable peer {} not in roster",
                self.id(),
                self.reliable_peer
            )));
        }
        let mut ids: Vec<&str> = self.history.iter().map(|r| r.question.id.as_str()).collect();
        ids.push(self.instance.id.as_str());
        let mut dedup = ids.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != ids.len() {
            return Err(ModelError::invariant(format!(
                "episode {}: history question ids are not pairwise distinct from each other and the instance",
                self.id()
            )));
        }
        for round in &self.history {
            if round.responses.len() != self.peer_names.len() {
                return Err(ModelError::invariant(format!(
                    "episode {}: history round {} does not cover all peers",
                    self.id(),
                    round.question.id
                )));
            }
            for (resp, name) in round.responses.iter().zip(&self.peer_names) {
                if &resp.peer_name != name {
                    return Err(ModelError::invariant(format!(
                        "episode {}: history responses out of roster order",
                        self.id()
                    )));
                }
                if resp.reasoning.is_some() {
                    return Err(ModelError::invariant(format!(
                        "episode {}: history response carries reasoning",
                        self.id()
                    )));
                }
            }
        }
        if self.current_responses.len() != self.peer_names.len() {
            return Err(ModelError::invariant(format!(
                "episode {}: current round does not cover all peers",
                self.id()
            )));
        }
        if self.perturbation == Perturbation::None {
            let key = self.instance.answer_key();
            for resp in &self.current_responses {
                let is_reliable = resp.peer_name == self.reliable_peer;
                if is_reliable != (resp.answer_option == key) {
                    return Err(ModelError::invariant(format!(
                        "episode {}: pristine current round breaks the reliability dichotomy",
                        self.id()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Stage-1 output: a free-text peer summary, plus the named trusted peer
/// when the explicit format was used and parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpistemicProfile {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trusted_peer: Option<String>,
}

/// Evaluation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Single agent: the target query only, no peer context.
    Sa,
    /// History-agnostic aggregator: current peer responses only.
    Ag,
    /// Single stage: history and current context in one prompt.
    OneStage,
    /// Two-stage pipeline, implicit stage-1 summary.
    EclI,
    /// Two-stage pipeline, explicit trusted-peer naming in stage 1.
    EclE,
}

impl Method {
    pub fn is_two_stage(&self) -> bool {
        matches!(self, Method::EclI | Method::EclE)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Sa => write!(f, "sa"),
            Method::Ag => write!(f, "ag"),
            Method::OneStage => write!(f, "one_stage"),
            Method::EclI => write!(f, "ecl_i"),
            Method::EclE => write!(f, "ecl_e"),
        }
    }
}

/// Typed failure attached to an episode result instead of aborting a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpisodeError {
    Backend { message: String },
    AnswerParse { message: String },
}

/// Wall-clock milliseconds per pipeline stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyMs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage1: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage2: Option<u64>,
    /// The agent's own independent pass when decoupled belief is enabled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief: Option<u64>,
}

/// Per-episode outcome of running one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    pub method: Method,
    pub db_enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage1: Option<EpistemicProfile>,
    pub stage2_raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<OptionLetter>,
    pub outcome_reward: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prr: Option<f64>,
    pub latency_ms: LatencyMs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<EpisodeError>,
}

static CUE_ANSWER_RE: OnceLock<Regex> = OnceLock::new();
static BARE_LETTER_RE: OnceLock<Regex> = OnceLock::new();

/// Extracts the answered option letter from a model completion.
///
/// Takes the letter of the last `"(X) ..."` pattern that follows the literal
/// cue `The best answer is:`; falls back to the last standalone parenthesized
/// capital letter anywhere in the text. The returned letter is upper-cased.
pub fn normalize_answer(raw: &str) -> Result<OptionLetter, AnswerParseError> {
    let cue_re = CUE_ANSWER_RE.get_or_init(|| {
        Regex::new(r#"The best answer is:\s*"?\s*\(([A-Za-z])\)"#).expect("static regex")
    });
    if let Some(caps) = cue_re.captures_iter(raw).last() {
        let c = caps[1].chars().next().expect("single capture");
        return OptionLetter::new(c);
    }
    let bare_re =
        BARE_LETTER_RE.get_or_init(|| Regex::new(r"\(([A-Z])\)").expect("static regex"));
    if let Some(caps) = bare_re.captures_iter(raw).last() {
        let c = caps[1].chars().next().expect("single capture");
        return OptionLetter::new(c);
    }
    Err(AnswerParseError::NoAnswerFound)
}

/// Case-insensitive option-letter equality. `OptionLetter` is normalized to
/// upper case at construction, so this is plain equality.
pub fn answers_equal(a: OptionLetter, b: OptionLetter) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_cue_form() {
        assert_eq!(
            normalize_answer(r#"The best answer is: "(F) frequency""#).unwrap(),
            OptionLetter::new('F').unwrap()
        );
    }

    #[test]
    fn normalize_bare_fragment() {
        assert_eq!(normalize_answer("(A)").unwrap(), OptionLetter::new('A').unwrap());
    }

    #[test]
    fn normalize_last_occurrence_wins() {
        let raw = r#"First I thought (B)... The best answer is: "(C) wavelength""#;
        assert_eq!(normalize_answer(raw).unwrap(), OptionLetter::new('C').unwrap());
    }

    #[test]
    fn normalize_cue_beats_later_bare_letter() {
        // Bare letters inside the answer text must not override the cue match.
        let raw = r#"The best answer is: "(C) pick (D) instead""#;
        assert_eq!(normalize_answer(raw).unwrap(), OptionLetter::new('C').unwrap());
    }

    #[test]
    fn normalize_lowercase_after_cue_is_upcased() {
        let raw = r#"The best answer is: "(c) wavelength""#;
        assert_eq!(normalize_answer(raw).unwrap(), OptionLetter::new('C').unwrap());
    }

    #[test]
    fn normalize_no_answer() {
        assert_eq!(normalize_answer("I do not know"), Err(AnswerParseError::NoAnswerFound));
    }

    #[test]
    fn answers_equal_is_case_insensitive_via_construction() {
        let lower = OptionLetter::new('c').unwrap();
        let upper = OptionLetter::new('C').unwrap();
        assert!(answers_equal(lower, upper));
        assert!(!answers_equal(upper, OptionLetter::new('G').unwrap()));
    }

    #[test]
    fn option_letter_rejects_non_alphabetic() {
        assert!(OptionLetter::new('3').is_err());
        assert!(OptionLetter::from_index(26).is_err());
        assert_eq!(OptionLetter::from_index(2).unwrap().as_char(), 'C');
    }

    #[test]
    fn phrasing_pool_sentences_parse_back() {
        // Every pool sentence exposes the letter to the fallback parser.
        for (i, _) in PHRASING_POOL.iter().enumerate() {
            let resp = PeerResponse {
                peer_name: "Jack".into(),
                answer_option: OptionLetter::new('F').unwrap(),
                answer_text: "frequency".into(),
                reasoning: None,
                phrasing_id: i,
            };
            let sentence = resp.answer_sentence();
            assert_eq!(
                normalize_answer(&sentence).unwrap(),
                OptionLetter::new('F').unwrap(),
                "phrasing {i} broke parsing: {sentence}"
            );
        }
    }

    proptest! {
        // Any completion in the instructed answer format parses to its letter.
        #[test]
        fn template_conforming_completions_always_parse(
            idx in 0usize..26,
            think in "[a-zA-Z0-9 .,\n]{0,120}",
            text in "[a-zA-Z0-9 .,()-]{1,60}",
        ) {
            prop_assume!(!text.contains("The best answer is:"));
            let letter = OptionLetter::from_index(idx).unwrap();
            let raw = format!(
                "<think>\n{think}\n</think>\n\nThe best answer is: \"({letter}) {text}\""
            );
            prop_assert_eq!(normalize_answer(&raw).unwrap(), letter);
        }

        #[test]
        fn option_letter_roundtrip(idx in 0usize..26) {
            let letter = OptionLetter::from_index(idx).unwrap();
            let json = serde_json::to_string(&letter).unwrap();
            let back: OptionLetter = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(letter, back);
        }
    }
}
