//! Per-step mixing and homogeneity rewards.
//!
//! Both carry the `1 / Nt` factor, so summing over an episode gives the
//! normalized return: the mixing part lies in `[-Ng^2 / 2, 0]` and the
//! homogeneity part in `[-1, 0]`.

use crate::error::{Error, Result};
use crate::grid::ObservationTensor;
use crate::params::SimParams;
use crate::state::Tag;

/// Normalizer of the mixing reward, `(Np / Ng)^2`.
pub fn mixing_normalizer(params: &SimParams) -> f64 {
    let r = params.n_part as f64 / params.n_grid as f64;
    r * r
}

/// Normalizer of the homogeneity reward, `Np^2 (1 - 1/Ng^2)`.
/// Zero for a single-cell grid, where the reward is identically 0.
pub fn homogeneity_normalizer(params: &SimParams) -> f64 {
    let np = params.n_part as f64;
    np * np * (1.0 - 1.0 / params.n_cells() as f64)
}

/// `-(1 / (Nt N_m)) * sum_cells (left - right)^2`.
pub fn mixing_reward(obs: &ObservationTensor, params: &SimParams) -> f64 {
    let sum: i64 = obs
        .plane(Tag::Left)
        .iter()
        .zip(obs.plane(Tag::Right))
        .map(|(&l, &r)| {
            let d = l as i64 - r as i64;
            d * d
        })
        .sum();
    -(sum as f64) / (params.n_steps as f64 * mixing_normalizer(params))
}

/// `-(1 / (Nt N_h)) * sum_cells (Np / Ng^2 - occupancy)^2`.
pub fn homogeneity_reward(obs: &ObservationTensor, params: &SimParams) -> f64 {
    let norm = homogeneity_normalizer(params);
    if norm == 0.0 {
        return 0.0;
    }
    let mean = params.mean_occupancy();
    let sum: f64 = obs
        .occupancy()
        .iter()
        .map(|&c| {
            let d = mean - c as f64;
            d * d
        })
        .sum();
    -sum / (params.n_steps as f64 * norm)
}

/// `alpha * r_m + (1 - alpha) * r_h`.
pub fn combined_reward(r_m: f64, r_h: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha * r_m + (1.0 - alpha) * r_h)
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("alpha must lie in [0, 1], got {alpha}")))
    }
}
