//! Evaluation harness for history-aware peer reference in LLM multi-agent
//! systems.
//!
//! The crate builds multiple-choice datasets with a controlled peer-reliability
//! structure, materializes evaluation episodes (a target question, several
//! rounds of past peer answers, and the current round of peer responses),
//! renders the prompt pipelines for the single-agent, history-agnostic,
//! single-stage and two-stage epistemic-context (ECL) methods, applies
//! test-time reliability perturbations, and scores runs with outcome and
//! peer-recognition rewards. Reward-annotated records can be exported for
//! external RL trainers.

pub mod backend;
pub mod dataset;
pub mod fixtures;
pub mod jsonl;
pub mod mock;
pub mod model;
pub mod perturb;
pub mod prompt;
pub mod rewards;
pub mod runner;
pub mod seeding;

pub use backend::{Agent, AgentCall, BackendConfig, BackendError, BackendKind, CallStage};
pub use model::{
    answers_equal, normalize_answer, AnswerParseError, Episode, EpisodeError, EpisodeResult,
    EpistemicProfile, HistoryRound, Method, OptionLetter, Perturbation, PeerResponse, QaInstance,
    QuestionRef, Setting, Variant,
};
pub use prompt::{MethodSpec, PromptKind, PromptPair};
