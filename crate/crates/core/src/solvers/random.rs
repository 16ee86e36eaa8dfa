use rand::seq::SliceRandom;
use rand::Rng;

use crate::episode::EpisodeState;
use crate::grid::{Action, JointAction};

/// Uniform random joint action; with masking enabled each agent draws only
/// from its allowed actions.
pub fn random_policy<R: Rng + ?Sized>(state: &EpisodeState, rng: &mut R) -> JointAction {
    let masked = state.config().action_mask;
    JointAction(
        (0..state.n_agents())
            .map(|i| {
                if masked {
                    *state.action_mask(i).choose(rng).unwrap_or(&Action::Stay)
                } else {
                    Action::ALL[rng.gen_range(0..Action::ALL.len())]
                }
            })
            .collect(),
    )
}
