//! Test-time episode transforms.
//!
//! Both transforms touch only the current round; the history (and therefore
//! any reliability statistic computed from it) is left byte-identical. The
//! `reliable_peer` label keeps naming the historical identity.

use thiserror::Error;

use crate::dataset::{response_for_letter, sample_wrong_letters, DatasetError};
use crate::model::{Episode, Perturbation, Variant};
use crate::seeding::derive_rng;

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("episode {0} is already perturbed")]
    NotPristine(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn require_pristine(episode: &Episode) -> Result<(), PerturbError> {
    if episode.perturbation != Perturbation::None {
        return Err(PerturbError::NotPristine(episode.id().to_string()));
    }
    Ok(())
}

/// Inverts reliability in the current round only: the historically reliable
/// peer now answers a seeded wrong option, and the lowest-index unreliable
/// peer answers the (pseudo) ground truth. Every other response is untouched,
/// so the current round still has exactly one correct answer.
pub fn apply_flip(episode: &Episode) -> Result<Episode, PerturbError> {
    require_pristine(episode)?;
    let mut out = episode.clone();
    let mut rng = derive_rng(episode.seed, &["flip", &episode.instance.id]);
    let with_reasoning = episode.variant == Variant::MaReasoning;

    let reliable_idx = episode
        .peer_names
        .iter()
        .position(|n| n == &episode.reliable_peer)
        .expect("reliable peer is in the roster");
    let promoted_idx = episode
        .peer_names
        .iter()
        .position(|n| n != &episode.reliable_peer)
        .expect("episodes have >= 2 peers");

    let wrong = sample_wrong_letters(&episode.instance, 1, &mut rng)?[0];
    out.current_responses[reliable_idx] = response_for_letter(
        &episode.instance,
        &episode.peer_names[reliable_idx],
        wrong,
        with_reasoning,
        &mut rng,
    )?;
    out.current_responses[promoted_idx] = response_for_letter(
        &episode.instance,
        &episode.peer_names[promoted_idx],
        episode.instance.answer_key(),
        with_reasoning,
        &mut rng,
    )?;
    out.perturbation = Perturbation::Flip;
    Ok(out)
}

/// Replaces every current-round response with a seeded wrong-option draw
/// (distinct across peers when the option arity allows), so no peer answers
/// correctly.
pub fn apply_all_wrong(episode: &Episode) -> Result<Episode, PerturbError> {
    require_pristine(episode)?;
    let mut out = episode.clone();
    let mut rng = derive_rng(episode.seed, &["all_wrong", &episode.instance.id]);
    let with_reasoning = episode.variant == Variant::MaReasoning;

    let letters = sample_wrong_letters(&episode.instance, episode.num_peers(), &mut rng)?;
    for (idx, (name, letter)) in episode.peer_names.iter().zip(letters).enumerate() {
        out.current_responses[idx] =
            response_for_letter(&episode.instance, name, letter, with_reasoning, &mut rng)?;
    }
    out.perturbation = Perturbation::AllWrong;
    Ok(out)
}
