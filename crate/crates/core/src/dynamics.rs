//! Overdamped spring dynamics with switchable pair interactions.
//!
//! Activated particles interact only with particles of the same activation
//! through a truncated spring: rest length 0 when attractive and `R_c` when
//! repulsive, acting only for `r_c < |d| < R_c`. Positions advance as
//! `x += mobility * dt^2 / m * F` and wrap into the periodic box.

use rand::Rng;

use crate::error::Result;
use crate::geometry::{minimum_image_displacement, wrap_point, Vec2};
use crate::grid::{ActionGrid, CellAction};
use crate::neighbors::CellList;
use crate::params::SimParams;
use crate::state::{Activation, InteractionMode, ParticleState};

impl InteractionMode {
    pub fn rest_length(self, params: &SimParams) -> f64 {
        match self {
            InteractionMode::Attractive => 0.0,
            InteractionMode::Repulsive => params.big_r_c,
        }
    }
}

/// Strict truncation window `r_c < dist < R_c`.
pub fn within_cutoffs(dist: f64, params: &SimParams) -> bool {
    params.r_c < dist && dist < params.big_r_c
}

/// Spring factor `(dist - r_0) / dist`, zero outside the cutoff window.
fn spring_factor(dist: f64, mode: InteractionMode, params: &SimParams) -> f64 {
    if within_cutoffs(dist, params) {
        (dist - mode.rest_length(params)) / dist
    } else {
        0.0
    }
}

/// Coupling `c_ij` of one pair in the position update,
/// `x_i' = x_i - sum_j c_ij (x_i - x_j)`. Non-negative for attractive pairs,
/// non-positive for repulsive pairs.
pub fn pair_coefficient(dist: f64, mode: InteractionMode, params: &SimParams) -> f64 {
    params.k * params.step_scale() * spring_factor(dist, mode, params)
}

/// Per-particle force split into its attractive and repulsive parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceVector {
    pub attractive: Vec<Vec2>,
    pub repulsive: Vec<Vec2>,
}

impl ForceVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            attractive: vec![Vec2::ZERO; n],
            repulsive: vec![Vec2::ZERO; n],
        }
    }

    pub fn len(&self) -> usize {
        self.attractive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attractive.is_empty()
    }

    pub fn total(&self, i: usize) -> Vec2 {
        self.attractive[i] + self.repulsive[i]
    }

    pub fn totals(&self) -> Vec<Vec2> {
        (0..self.len()).map(|i| self.total(i)).collect()
    }
}

/// Pair search strategy. Both visit partners in ascending index order and
/// give bit-identical forces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForceMethod {
    #[default]
    Pairwise,
    CellList,
}

fn pair_force(state: &ParticleState, i: usize, j: usize, mode: InteractionMode, params: &SimParams) -> Option<Vec2> {
    let d = minimum_image_displacement(
        state.particles[i].position,
        state.particles[j].position,
        params.half_width,
    );
    let dist = d.norm();
    within_cutoffs(dist, params).then(|| (-params.k * spring_factor(dist, mode, params)) * d)
}

fn store(forces: &mut ForceVector, i: usize, mode: InteractionMode, f: Vec2) {
    match mode {
        InteractionMode::Attractive => forces.attractive[i] = f,
        InteractionMode::Repulsive => forces.repulsive[i] = f,
    }
}

pub fn compute_forces(state: &ParticleState, params: &SimParams) -> ForceVector {
    compute_forces_with(state, params, ForceMethod::Pairwise)
}

pub fn compute_forces_with(state: &ParticleState, params: &SimParams, method: ForceMethod) -> ForceVector {
    let n = state.len();
    let mut forces = ForceVector::zeros(n);
    let modes: Vec<Option<InteractionMode>> = state
        .particles
        .iter()
        .map(|p| InteractionMode::of(p.activation))
        .collect();

    match method {
        ForceMethod::Pairwise => {
            for i in 0..n {
                let Some(mode) = modes[i] else { continue };
                let mut f = Vec2::ZERO;
                for (j, &other) in modes.iter().enumerate() {
                    if j != i && other == Some(mode) {
                        if let Some(term) = pair_force(state, i, j, mode, params) {
                            f += term;
                        }
                    }
                }
                store(&mut forces, i, mode, f);
            }
        }
        ForceMethod::CellList => {
            let list = CellList::build(
                state
                    .particles
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.activation.is_active())
                    .map(|(i, p)| (i, p.position)),
                params.half_width,
                params.big_r_c,
            );
            let mut candidates = Vec::new();
            for i in 0..n {
                let Some(mode) = modes[i] else { continue };
                list.candidates(state.particles[i].position, &mut candidates);
                let mut f = Vec2::ZERO;
                for &j in &candidates {
                    if j != i && modes[j] == Some(mode) {
                        if let Some(term) = pair_force(state, i, j, mode, params) {
                            f += term;
                        }
                    }
                }
                store(&mut forces, i, mode, f);
            }
        }
    }
    forces
}

/// Advances positions by `step_scale * F` and wraps them into the box.
/// Activation and tags are untouched.
pub fn integrate_step(state: &mut ParticleState, forces: &ForceVector, params: &SimParams) {
    assert_eq!(state.len(), forces.len(), "force vector does not match state");
    let scale = params.step_scale();
    for (i, p) in state.particles.iter_mut().enumerate() {
        let f = forces.total(i);
        if !f.is_zero() {
            p.position = wrap_point(p.position + scale * f, params.half_width);
        }
    }
}

/// Applies the control grid: particles inside an activation area take that
/// activation (overriding any previous one); activated particles outside
/// every area switch off with probability `1 - exp(-lambda dt)`.
///
/// One uniform draw is consumed per activated particle sitting in a `None`
/// cell, in particle order.
pub fn apply_activation_field<R: Rng + ?Sized>(
    state: &mut ParticleState,
    action: &ActionGrid,
    rng: &mut R,
    params: &SimParams,
) -> Result<()> {
    action.validate(params)?;
    let p_off = params.deactivation_probability();
    for p in &mut state.particles {
        p.activation = match action.at(p.position, params) {
            CellAction::Attractive => Activation::Attractive,
            CellAction::Repulsive => Activation::Repulsive,
            CellAction::None if p.activation.is_active() => {
                if rng.gen::<f64>() < p_off {
                    Activation::Inactive
                } else {
                    p.activation
                }
            }
            CellAction::None => Activation::Inactive,
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::params::InteractionSet;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(points: &[(f64, f64, Activation)]) -> ParticleState {
        let pos: Vec<Vec2> = points.iter().map(|&(x, y, _)| Vec2::new(x, y)).collect();
        let act: Vec<Activation> = points.iter().map(|&(_, _, a)| a).collect();
        ParticleState::from_parts(&pos, &act)
    }

    #[test]
    fn pair_coefficient_examples() {
        let p = SimParams::default();
        assert!((pair_coefficient(1.0, InteractionMode::Attractive, &p) - 0.0075).abs() < 1e-15);
        assert!((pair_coefficient(0.75, InteractionMode::Repulsive, &p) + 0.0075).abs() < 1e-15);
        assert_eq!(pair_coefficient(1.6, InteractionMode::Attractive, &p), 0.0);
        assert_eq!(pair_coefficient(1.6, InteractionMode::Repulsive, &p), 0.0);
        assert_eq!(pair_coefficient(0.0, InteractionMode::Attractive, &p), 0.0);
        // strict window
        assert_eq!(pair_coefficient(1.5, InteractionMode::Attractive, &p), 0.0);
        assert_eq!(pair_coefficient(0.015, InteractionMode::Attractive, &p), 0.0);
    }

    #[test]
    fn inactive_particles_feel_nothing() {
        let p = SimParams::default();
        let s = state(&[(0.0, 0.0, Activation::Inactive), (0.5, 0.0, Activation::Inactive)]);
        let f = compute_forces(&s, &p);
        assert!(f.totals().iter().all(|v| v.is_zero()));
    }

    #[test]
    fn attractive_pair_pulls_together() {
        let p = SimParams::default();
        let s = state(&[(0.0, 0.0, Activation::Attractive), (1.0, 0.0, Activation::Attractive)]);
        let f = compute_forces(&s, &p);
        assert!((f.attractive[0].x - 3.0).abs() < 1e-14 && f.attractive[0].y == 0.0);
        assert!((f.attractive[1].x + 3.0).abs() < 1e-14);
        assert!(f.repulsive[0].is_zero() && f.repulsive[1].is_zero());

        // central difference of (k/2)|x0 - x1|^2 with respect to x0
        let h = 1e-6;
        let u = |x: f64| 0.5 * p.k * (x - 1.0).powi(2);
        let grad = (u(h) - u(-h)) / (2.0 * h);
        assert!((f.attractive[0].x + grad).abs() < 1e-6);
    }

    #[test]
    fn cross_type_pairs_do_not_interact() {
        let p = SimParams::default();
        let s = state(&[(0.0, 0.0, Activation::Attractive), (0.5, 0.0, Activation::Repulsive)]);
        let f = compute_forces(&s, &p);
        assert!(f.totals().iter().all(|v| v.is_zero()));
    }

    #[test]
    fn integrate_moves_attractive_pair() {
        let p = SimParams::default();
        let mut s = state(&[(0.0, 0.0, Activation::Attractive), (1.0, 0.0, Activation::Attractive)]);
        let f = compute_forces(&s, &p);
        integrate_step(&mut s, &f, &p);
        assert!((s.particles[0].position.x - 0.0075).abs() < 1e-15);
        assert!((s.particles[1].position.x - 0.9925).abs() < 1e-15);
    }

    #[test]
    fn integrate_wraps() {
        let p = SimParams::default();
        let mut s = state(&[(1.95, 0.0, Activation::Inactive)]);
        let mut f = ForceVector::zeros(1);
        f.attractive[0] = Vec2::new(0.15 / p.step_scale(), 0.0);
        integrate_step(&mut s, &f, &p);
        assert!((s.particles[0].position.x - -1.9).abs() < 1e-12);

        let before = s.clone();
        integrate_step(&mut s, &ForceVector::zeros(1), &p);
        assert_eq!(before, s);
    }

    #[test]
    fn activation_field_overrides() {
        let p = SimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = state(&[(-1.0, -1.0, Activation::Repulsive), (1.0, 1.0, Activation::Inactive)]);
        apply_activation_field(&mut s, &ActionGrid::filled(4, CellAction::Attractive), &mut rng, &p).unwrap();
        assert!(s.particles.iter().all(|q| q.activation == Activation::Attractive));
    }

    #[test]
    fn activation_field_rejects_disallowed_cells() {
        let p = SimParams::default().with_interaction_set(InteractionSet::AttractiveOnly);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = state(&[(0.0, 0.0, Activation::Inactive)]);
        let err = apply_activation_field(&mut s, &ActionGrid::filled(4, CellAction::Repulsive), &mut rng, &p);
        assert!(matches!(err, Err(Error::InvalidAction(_))));
    }

    #[test]
    fn deactivation_rate_is_exponential() {
        let p = SimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let none = ActionGrid::none(4);
        let trials = 200_000usize;
        let mut off = 0usize;
        let mut s = state(&[(0.0, 0.0, Activation::Attractive)]);
        for _ in 0..trials {
            s.particles[0].activation = Activation::Attractive;
            apply_activation_field(&mut s, &none, &mut rng, &p).unwrap();
            if s.particles[0].activation == Activation::Inactive {
                off += 1;
            }
        }
        let expected = 1.0 - (-0.5f64).exp();
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        let observed = off as f64 / trials as f64;
        assert!((observed - expected).abs() < 3.0 * sigma, "{observed} vs {expected}");
    }

    #[test]
    fn inactive_particles_stay_inactive_in_empty_cells() {
        let p = SimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = state(&[(0.0, 0.0, Activation::Inactive)]);
        for _ in 0..100 {
            apply_activation_field(&mut s, &ActionGrid::none(4), &mut rng, &p).unwrap();
            assert_eq!(s.particles[0].activation, Activation::Inactive);
        }
    }

    fn arb_state(n: usize) -> impl Strategy<Value = ParticleState> {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0u8..3), n).prop_map(|v| {
            let pts: Vec<(f64, f64, Activation)> = v
                .into_iter()
                .map(|(x, y, a)| {
                    let a = match a {
                        0 => Activation::Inactive,
                        1 => Activation::Attractive,
                        _ => Activation::Repulsive,
                    };
                    (x, y, a)
                })
                .collect();
            state(&pts)
        })
    }

    /// Total pair potential with the minimum-image distance.
    fn potential(s: &ParticleState, p: &SimParams) -> f64 {
        let mut u = 0.0;
        for i in 0..s.len() {
            for j in (i + 1)..s.len() {
                let (a, b) = (s.particles[i].activation, s.particles[j].activation);
                let Some(mode) = InteractionMode::of(a) else { continue };
                if a != b {
                    continue;
                }
                let d = minimum_image_displacement(s.particles[i].position, s.particles[j].position, p.half_width);
                let dist = d.norm();
                if within_cutoffs(dist, p) {
                    u += 0.5 * p.k * (dist - mode.rest_length(p)).powi(2);
                }
            }
        }
        u
    }

    proptest! {
        #[test]
        fn newtons_third_law(s in arb_state(40)) {
            let p = SimParams::default();
            let f = compute_forces(&s, &p);
            let (mut net, mut mag) = (Vec2::ZERO, 0.0);
            for v in f.totals() {
                net += v;
                mag += v.norm();
            }
            prop_assert!(net.norm() <= 1e-10 * mag.max(1e-300) || mag == 0.0);
        }

        #[test]
        fn exclusive_decomposition(s in arb_state(40)) {
            let f = compute_forces(&s, &SimParams::default());
            for i in 0..f.len() {
                prop_assert!(f.attractive[i].is_zero() || f.repulsive[i].is_zero());
            }
        }

        #[test]
        fn translation_invariance(s in arb_state(30), sx in -4.0f64..4.0, sy in -4.0f64..4.0) {
            let p = SimParams::default();
            let f0 = compute_forces(&s, &p);
            let mut shifted = s.clone();
            for q in &mut shifted.particles {
                q.position = wrap_point(q.position + Vec2::new(sx, sy), p.half_width);
            }
            let f1 = compute_forces(&shifted, &p);
            for i in 0..s.len() {
                let (a, b) = (f0.total(i), f1.total(i));
                // pairs sitting on a cutoff edge can flip after rounding; those are measure zero
                prop_assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()), "{:?} vs {:?}", a, b);
            }
        }

        #[test]
        fn cell_list_matches_pairwise_bitwise(s in arb_state(96)) {
            let p = SimParams::default();
            prop_assert_eq!(
                compute_forces_with(&s, &p, ForceMethod::Pairwise),
                compute_forces_with(&s, &p, ForceMethod::CellList)
            );
        }

        #[test]
        fn forces_are_negative_potential_gradient(
            cx in -1.0f64..1.0, cy in -1.0f64..1.0,
            offsets in proptest::collection::vec((0.0f64..std::f64::consts::TAU, 0.05f64..0.6), 5),
            repulsive in any::<bool>(),
        ) {
            let p = SimParams::default();
            let act = if repulsive { Activation::Repulsive } else { Activation::Attractive };
            let pts: Vec<(f64, f64, Activation)> = offsets
                .iter()
                .map(|&(a, r)| (cx + r * a.cos(), cy + r * a.sin(), act))
                .collect();
            let s = state(&pts);
            // all pair distances within (0.015, 1.2)
            for i in 0..5 {
                for j in (i + 1)..5 {
                    let d = (s.particles[i].position - s.particles[j].position).norm();
                    prop_assume!(d > 0.05);
                }
            }
            let f = compute_forces(&s, &p);
            let h = 1e-6;
            for i in 0..5 {
                for axis in 0..2 {
                    let mut plus = s.clone();
                    let mut minus = s.clone();
                    if axis == 0 {
                        plus.particles[i].position.x += h;
                        minus.particles[i].position.x -= h;
                    } else {
                        plus.particles[i].position.y += h;
                        minus.particles[i].position.y -= h;
                    }
                    let grad = (potential(&plus, &p) - potential(&minus, &p)) / (2.0 * h);
                    let analytic = if axis == 0 { f.total(i).x } else { f.total(i).y };
                    let scale = analytic.abs().max(1.0);
                    prop_assert!((analytic + grad).abs() <= 1e-6 * scale, "{} vs {}", analytic, -grad);
                }
            }
        }
    }
}
