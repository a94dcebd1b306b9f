//! Particle mixing with grid-controlled, switchable pair interactions.
//!
//! Particles in a periodic square box are switched between inactive,
//! attractive and repulsive states by a coarse control grid. Same-type
//! activated particles interact through truncated springs under overdamped
//! dynamics. The crate provides the simulator, the mixing and homogeneity
//! rewards, an RL-style step/reset environment, scripted control policies,
//! and the update-matrix spectral analysis that explains which interaction
//! sets can mix.

pub mod dynamics;
pub mod env;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod neighbors;
pub mod params;
pub mod policy;
pub mod reward;
pub mod spectral;
pub mod state;

pub use dynamics::{
    apply_activation_field, compute_forces, compute_forces_with, integrate_step, pair_coefficient, ForceMethod,
    ForceVector,
};
pub use env::{init_episode, EnvConfig, Environment, Placement, StepResult};
pub use error::{Error, Result};
pub use geometry::{minimum_image_displacement, Vec2};
pub use grid::{ActionGrid, CellAction, ObservationTensor};
pub use linalg::SquareMatrix;
pub use params::{InteractionSet, SimParams};
pub use policy::{PolicyKind, PolicySpec, Side};
pub use reward::{combined_reward, homogeneity_reward, mixing_reward};
pub use spectral::{
    analyze_state, build_update_matrix, gershgorin_bounds, log_determinant, symmetric_eigenvalues, Histogram,
    SpectrumRecord, UpdateMatrix,
};
pub use state::{Activation, InteractionMode, Particle, ParticleState, Tag};

/// Action chosen by a scripted policy for the current observation and step.
pub fn policy_action(spec: &PolicySpec, obs: &ObservationTensor, t: usize, params: &SimParams) -> Result<ActionGrid> {
    spec.action(obs, t, params)
}
