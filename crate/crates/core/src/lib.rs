//! Grid worlds, reference layouts, the episode engine, deadlock analysis and
//! solvers for deadlock-prone multi-agent path finding.

pub mod deadlock;
pub mod episode;
pub mod error;
pub mod grid;
pub mod layouts;
pub mod solvers;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use error::{DeadlockError, EpisodeError, GridError, LayoutError, SolverError};
pub use grid::{Action, CollisionModel, GridLayout, JointAction, Position};

/// Every random draw in the suite comes from this generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
