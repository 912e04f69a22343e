//! Episodic environments: exact tabular specifications and the continuous ball.

mod ball;
mod tabular;

pub use ball::{project_unit_ball, BallEnvSpec, BallState};
pub use tabular::{chain, gridworld, random_mdp, GridNoise, TabularMdpSpec};

/// Outcome of one environment transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeStep<S> {
    pub next_state: S,
    /// Reward collected for the transition, in `[0, 1]`.
    pub reward: f64,
}
