//! Update-matrix spectra.
//!
//! Without wrap-around, one simulation step is linear in the positions of
//! the activated particles, coordinate by coordinate:
//!
//! ```text
//! x_i' = (1 - sum_j c_ij) x_i + sum_j c_ij x_j
//! ```
//!
//! with `c_ij` from [`pair_coefficient`]. The matrix has unit row sums, is
//! symmetric, and its off-diagonal entries are all `>= 0` for attractive pairs
//! and `<= 0` for repulsive pairs. By Gershgorin's theorem the spectrum then
//! sits in `[1 - 2 max_i s_i, 1]` (attractive) or `[1, 1 + 2 max_i |s_i|]`
//! (repulsive): attraction alone can only contract phase space, repulsion
//! alone can only expand it.

mod eigen;
mod histogram;

pub use eigen::{symmetric_eigen, symmetric_eigenvalues, SymmetricEigen};
pub use histogram::Histogram;

use serde::{Deserialize, Serialize};

use crate::dynamics::pair_coefficient;
use crate::error::Result;
use crate::geometry::minimum_image_displacement;
use crate::linalg::SquareMatrix;
use crate::params::SimParams;
use crate::state::{InteractionMode, ParticleState};

/// Per-coordinate update matrix over a subset of particles.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateMatrix {
    pub matrix: SquareMatrix,
    /// Row index to global particle index.
    pub index_map: Vec<usize>,
    /// Interaction mode per row; `None` for inactive particles (only
    /// present when they were explicitly included).
    pub mode_map: Vec<Option<InteractionMode>>,
}

impl UpdateMatrix {
    pub fn size(&self) -> usize {
        self.index_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_map.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    /// Applies the matrix to one coordinate (0 = x, 1 = y) of the covered
    /// particles' positions.
    pub fn apply_to_coordinate(&self, state: &ParticleState, axis: usize) -> Vec<f64> {
        let coords: Vec<f64> = self
            .index_map
            .iter()
            .map(|&g| {
                let p = state.particles[g].position;
                if axis == 0 {
                    p.x
                } else {
                    p.y
                }
            })
            .collect();
        self.matrix.mul_vec(&coords)
    }

    pub fn mode_summary(&self) -> (usize, usize) {
        self.mode_map.iter().fold((0, 0), |(a, r), m| match m {
            Some(InteractionMode::Attractive) => (a + 1, r),
            Some(InteractionMode::Repulsive) => (a, r + 1),
            None => (a, r),
        })
    }
}

/// Builds the update matrix from the state as it stands just before
/// integration. Inactive particles are fixed points (eigenvalue exactly 1)
/// and are left out unless `include_inactive` is set.
pub fn build_update_matrix(state: &ParticleState, params: &SimParams, include_inactive: bool) -> UpdateMatrix {
    let (index_map, mode_map): (Vec<usize>, Vec<Option<InteractionMode>>) = state
        .particles
        .iter()
        .enumerate()
        .map(|(i, p)| (i, InteractionMode::of(p.activation)))
        .filter(|(_, m)| include_inactive || m.is_some())
        .unzip();

    let n = index_map.len();
    let mut matrix = SquareMatrix::zeros(n);
    for a in 0..n {
        let Some(mode) = mode_map[a] else { continue };
        for b in (a + 1)..n {
            if mode_map[b] != Some(mode) {
                continue;
            }
            let d = minimum_image_displacement(
                state.particles[index_map[a]].position,
                state.particles[index_map[b]].position,
                params.half_width,
            );
            let c = pair_coefficient(d.norm(), mode, params);
            matrix.set(a, b, c);
            matrix.set(b, a, c);
        }
    }
    for a in 0..n {
        let off: f64 = (0..n).filter(|&b| b != a).map(|b| matrix.get(a, b)).sum();
        matrix.set(a, a, 1.0 - off);
    }

    UpdateMatrix {
        matrix,
        index_map,
        mode_map,
    }
}

/// Hull of the Gershgorin intervals, `(min_i (m_ii - a_i), max_i (m_ii + a_i))`
/// with `a_i` the absolute off-diagonal row sum. `None` for an empty matrix.
pub fn gershgorin_bounds(m: &SquareMatrix) -> Option<(f64, f64)> {
    let n = m.size();
    (0..n)
        .map(|i| {
            let radius: f64 = (0..n).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
            let center = m.get(i, i);
            (center - radius, center + radius)
        })
        .reduce(|(lo, hi), (l, h)| (lo.min(l), hi.max(h)))
}

/// `sum log(lambda)`, or `None` if any eigenvalue is non-positive.
pub fn log_determinant(eigenvalues: &[f64]) -> Option<f64> {
    if eigenvalues.iter().any(|&l| l <= 0.0 || l.is_nan()) {
        return None;
    }
    Some(eigenvalues.iter().map(|l| l.ln()).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub t: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub gershgorin: Option<(f64, f64)>,
    pub log_det: Option<f64>,
    pub n_attractive: usize,
    pub n_repulsive: usize,
}

impl SpectrumRecord {
    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Whether every eigenvalue lies inside the Gershgorin hull widened by `tol`.
    pub fn within_gershgorin(&self, tol: f64) -> bool {
        match self.gershgorin {
            None => self.eigenvalues.is_empty(),
            Some((lo, hi)) => self.eigenvalues.iter().all(|&l| l >= lo - tol && l <= hi + tol),
        }
    }
}

/// Builds, solves and summarizes the update matrix of `state`.
pub fn analyze_state(
    t: usize,
    state: &ParticleState,
    params: &SimParams,
    include_inactive: bool,
) -> Result<SpectrumRecord> {
    let m = build_update_matrix(state, params, include_inactive);
    let eigenvalues = symmetric_eigenvalues(&m.matrix)?;
    let (n_attractive, n_repulsive) = m.mode_summary();
    Ok(SpectrumRecord {
        t,
        gershgorin: gershgorin_bounds(&m.matrix),
        log_det: log_determinant(&eigenvalues),
        eigenvalues,
        n_attractive,
        n_repulsive,
    })
}
