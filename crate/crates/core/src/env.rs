//! Episode management: initial placement, stepping and rewards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_activation_field, compute_forces_with, integrate_step, ForceMethod};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::grid::{ActionGrid, ObservationTensor};
use crate::params::SimParams;
use crate::reward::{check_alpha, homogeneity_reward, mixing_reward};
use crate::state::{Activation, Particle, ParticleState, Tag};

pub type EnvRng = ChaCha8Rng;

/// How the tagged halves are filled at reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Independent uniform positions over each half.
    #[default]
    Uniform,
    /// Exactly `Np / Ng^2` particles per cell, uniform within the cell.
    /// Needs an even grid and `Np` divisible by `Ng^2`.
    Stratified,
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Placement::Uniform),
            "stratified" => Ok(Placement::Stratified),
            other => Err(Error::InvalidParams(format!("unknown placement '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub params: SimParams,
    /// Weight of the mixing reward against the homogeneity reward.
    pub alpha: f64,
    pub placement: Placement,
    /// Simulation steps per control action.
    pub frame_skip: usize,
    pub force_method: ForceMethod,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            params: SimParams::default(),
            alpha: 0.5,
            placement: Placement::Uniform,
            frame_skip: 1,
            force_method: ForceMethod::Pairwise,
        }
    }
}

impl EnvConfig {
    pub fn new(params: SimParams, alpha: f64) -> Self {
        Self {
            params,
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        check_alpha(self.alpha)?;
        if self.frame_skip == 0 || !self.params.n_steps.is_multiple_of(self.frame_skip) {
            return Err(Error::InvalidParams(format!(
                "frame_skip {} must be positive and divide n_steps {}",
                self.frame_skip, self.params.n_steps
            )));
        }
        if self.placement == Placement::Stratified {
            let p = &self.params;
            if !p.n_grid.is_multiple_of(2) || !p.n_part.is_multiple_of(p.n_cells()) {
                return Err(Error::InvalidParams(format!(
                    "stratified placement needs an even grid and n_part divisible by {}",
                    p.n_cells()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: ObservationTensor,
    pub reward: f64,
    /// Mixing contribution (before the alpha blend).
    pub r_m: f64,
    /// Homogeneity contribution (before the alpha blend).
    pub r_h: f64,
    pub done: bool,
    /// Simulation steps taken so far in this episode.
    pub t: usize,
}

fn uniform_in(rng: &mut EnvRng, lo: f64, width: f64) -> f64 {
    lo + width * rng.gen::<f64>()
}

/// Samples an episode start: the first `Np/2` particles are left-tagged in
/// `[-L, 0) x [-L, L)`, the rest right-tagged in `[0, L) x [-L, L)`, all
/// inactive. Returns the generator so the episode continues on the same stream.
pub fn init_episode(seed: u64, params: &SimParams, placement: Placement) -> (ParticleState, ObservationTensor, EnvRng) {
    let mut rng = EnvRng::seed_from_u64(seed);
    let l = params.half_width;
    let half = params.n_part / 2;
    let mut particles = Vec::with_capacity(params.n_part);

    match placement {
        Placement::Uniform => {
            for (tag, x0) in [(Tag::Left, -l), (Tag::Right, 0.0)] {
                for _ in 0..half {
                    let x = uniform_in(&mut rng, x0, l);
                    let y = uniform_in(&mut rng, -l, 2.0 * l);
                    particles.push(Particle {
                        position: Vec2::new(x, y),
                        activation: Activation::Inactive,
                        tag,
                    });
                }
            }
        }
        Placement::Stratified => {
            let ng = params.n_grid;
            let w = params.cell_width();
            let per_cell = params.n_part / params.n_cells();
            for (tag, columns) in [(Tag::Left, 0..ng / 2), (Tag::Right, ng / 2..ng)] {
                for ix in columns {
                    for iy in 0..ng {
                        for _ in 0..per_cell {
                            let x = uniform_in(&mut rng, -l + ix as f64 * w, w);
                            let y = uniform_in(&mut rng, -l + iy as f64 * w, w);
                            particles.push(Particle {
                                position: Vec2::new(x, y),
                                activation: Activation::Inactive,
                                tag,
                            });
                        }
                    }
                }
            }
        }
    }

    let state = ParticleState::new(particles);
    let obs = ObservationTensor::bin(&state, params);
    (state, obs, rng)
}

/// One simulation instance. Stepping order per simulation step: activation
/// field, forces, integration with wrap, observation and reward.
#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    state: ParticleState,
    rng: EnvRng,
    t: usize,
    ready: bool,
}

impl Environment {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state: ParticleState::default(),
            rng: EnvRng::seed_from_u64(0),
            t: 0,
            ready: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn params(&self) -> &SimParams {
        &self.config.params
    }

    pub fn state(&self) -> &ParticleState {
        &self.state
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// True after a reset, until the episode has run `n_steps`.
    pub fn is_active(&self) -> bool {
        self.ready && self.t < self.config.params.n_steps
    }

    pub fn is_reset(&self) -> bool {
        self.ready
    }

    pub fn reset(&mut self, seed: u64) -> ObservationTensor {
        let (state, obs, rng) = init_episode(seed, &self.config.params, self.config.placement);
        self.state = state;
        self.rng = rng;
        self.t = 0;
        self.ready = true;
        obs
    }

    pub fn observe(&self) -> ObservationTensor {
        ObservationTensor::bin(&self.state, &self.config.params)
    }

    pub fn step(&mut self, action: &ActionGrid) -> Result<StepResult> {
        self.step_with_probe(action, |_, _| {})
    }

    /// Like [`Environment::step`], calling `probe(t, state)` after the
    /// activation field is applied and before integration, once per
    /// simulation step. `t` is the step index within the episode.
    pub fn step_with_probe<F>(&mut self, action: &ActionGrid, mut probe: F) -> Result<StepResult>
    where
        F: FnMut(usize, &ParticleState),
    {
        let params = &self.config.params;
        if !self.ready {
            return Err(Error::NotReset);
        }
        if self.t >= params.n_steps {
            return Err(Error::EpisodeFinished(self.t));
        }
        action.validate(params)?;

        let (mut r_m, mut r_h) = (0.0, 0.0);
        let mut observation = None;
        for _ in 0..self.config.frame_skip {
            apply_activation_field(&mut self.state, action, &mut self.rng, params)?;
            probe(self.t, &self.state);
            let forces = compute_forces_with(&self.state, params, self.config.force_method);
            integrate_step(&mut self.state, &forces, params);
            self.t += 1;

            let obs = ObservationTensor::bin(&self.state, params);
            r_m += mixing_reward(&obs, params);
            r_h += homogeneity_reward(&obs, params);
            observation = Some(obs);
        }

        let alpha = self.config.alpha;
        Ok(StepResult {
            observation: observation.expect("frame_skip >= 1"),
            reward: alpha * r_m + (1.0 - alpha) * r_h,
            r_m,
            r_h,
            done: self.t == params.n_steps,
            t: self.t,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellAction;

    #[test]
    fn init_places_tags_in_halves() {
        let p = SimParams::default();
        for seed in 0..20 {
            let (state, obs, _) = init_episode(seed, &p, Placement::Uniform);
            assert_eq!(obs.plane_total(Tag::Left), 48);
            assert_eq!(obs.plane_total(Tag::Right), 48);
            assert!(state.all_in_box(p.half_width));
            for ix in 0..2 {
                for iy in 0..4 {
                    assert_eq!(obs.get(Tag::Right, ix, iy), 0);
                    assert_eq!(obs.get(Tag::Left, ix + 2, iy), 0);
                }
            }
            assert!(state.particles.iter().all(|q| q.activation == Activation::Inactive));
        }
    }

    #[test]
    fn init_is_deterministic() {
        let p = SimParams::default();
        let (a, oa, _) = init_episode(42, &p, Placement::Uniform);
        let (b, ob, _) = init_episode(42, &p, Placement::Uniform);
        assert_eq!(oa, ob);
        assert_eq!(a, b);
        let (c, _, _) = init_episode(43, &p, Placement::Uniform);
        assert_ne!(a, c);
    }

    #[test]
    fn stratified_fills_every_cell_equally() {
        let p = SimParams::default();
        let (_, obs, _) = init_episode(5, &p, Placement::Stratified);
        assert!(obs.occupancy().iter().all(|&c| c == 6));
        assert!((mixing_reward(&obs, &p) - -0.01).abs() < 1e-17);
    }

    #[test]
    fn no_op_freezes_positions() {
        let mut env = Environment::new(EnvConfig::new(SimParams::default(), 1.0)).unwrap();
        let obs0 = env.reset(11);
        let start = env.state().clone();
        let r0 = mixing_reward(&obs0, env.params());
        for step in 1..=100 {
            let res = env.step(&ActionGrid::none(4)).unwrap();
            assert_eq!(res.reward, r0);
            assert_eq!(res.t, step);
            assert_eq!(res.done, step == 100);
        }
        assert_eq!(env.state(), &start);
        assert!(matches!(
            env.step(&ActionGrid::none(4)),
            Err(Error::EpisodeFinished(100))
        ));
    }

    #[test]
    fn step_before_reset_fails() {
        let mut env = Environment::new(EnvConfig::default()).unwrap();
        assert!(matches!(env.step(&ActionGrid::none(4)), Err(Error::NotReset)));
    }

    #[test]
    fn invalid_action_is_rejected_without_advancing() {
        let params = SimParams::default().with_interaction_set(crate::params::InteractionSet::AttractiveOnly);
        let mut env = Environment::new(EnvConfig::new(params, 0.5)).unwrap();
        env.reset(0);
        let err = env.step(&ActionGrid::filled(4, CellAction::Repulsive));
        assert!(matches!(err, Err(Error::InvalidAction(_))));
        assert_eq!(env.t(), 0);
    }

    #[test]
    fn frame_skip_sums_rewards() {
        let mut cfg = EnvConfig::new(SimParams::default(), 1.0);
        cfg.frame_skip = 4;
        let mut env = Environment::new(cfg).unwrap();
        let obs = env.reset(3);
        let r = env.step(&ActionGrid::none(4)).unwrap();
        assert_eq!(r.t, 4);
        assert!((r.reward - 4.0 * mixing_reward(&obs, env.params())).abs() < 1e-15);

        let bad = EnvConfig {
            frame_skip: 3,
            ..EnvConfig::default()
        };
        assert!(Environment::new(bad).is_err());
    }

    #[test]
    fn observation_is_conserved_under_dynamics() {
        let mut env = Environment::new(EnvConfig::default()).unwrap();
        env.reset(9);
        let mut grid = ActionGrid::none(4);
        grid.set(0, 0, CellAction::Attractive);
        grid.set(3, 3, CellAction::Repulsive);
        grid.set(1, 2, CellAction::Repulsive);
        for _ in 0..100 {
            let r = env.step(&grid).unwrap();
            assert_eq!(r.observation.total(), 96);
            assert_eq!(r.observation.plane_total(Tag::Left), 48);
            assert!(env.state().all_in_box(2.0));
        }
    }
}
