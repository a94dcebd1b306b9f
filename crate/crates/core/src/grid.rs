//! The control grid and the per-tag occupancy observation.
//!
//! Both share one binning: cell `(ix, iy)` covers
//! `[-L + ix*w, -L + (ix+1)*w) x [-L + iy*w, -L + (iy+1)*w)` with `w = 2L / Ng`,
//! so cell `(0, 0)` sits at the `(-L, -L)` corner. Flat cell indices are
//! row-major in `(ix, iy)`: `flat = ix * Ng + iy`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::params::{InteractionSet, SimParams};
use crate::state::{ParticleState, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum CellAction {
    #[default]
    None,
    Attractive,
    Repulsive,
}

impl CellAction {
    pub fn digit(self) -> u8 {
        match self {
            CellAction::None => 0,
            CellAction::Attractive => 1,
            CellAction::Repulsive => 2,
        }
    }

    pub fn from_digit(d: u8) -> Option<CellAction> {
        match d {
            0 => Some(CellAction::None),
            1 => Some(CellAction::Attractive),
            2 => Some(CellAction::Repulsive),
            _ => None,
        }
    }

    pub fn allowed_in(self, set: InteractionSet) -> bool {
        match self {
            CellAction::None => true,
            CellAction::Attractive => set.allows_attractive(),
            CellAction::Repulsive => set.allows_repulsive(),
        }
    }
}

/// Bin index of a coordinate along one axis.
pub fn axis_bin(coord: f64, params: &SimParams) -> usize {
    let b = ((coord + params.half_width) / params.cell_width()).floor();
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(params.n_grid - 1)
    }
}

pub fn cell_of(position: Vec2, params: &SimParams) -> (usize, usize) {
    (axis_bin(position.x, params), axis_bin(position.y, params))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionGrid {
    n_grid: usize,
    cells: Vec<CellAction>,
}

impl ActionGrid {
    pub fn filled(n_grid: usize, action: CellAction) -> Self {
        Self {
            n_grid,
            cells: vec![action; n_grid * n_grid],
        }
    }

    pub fn none(n_grid: usize) -> Self {
        Self::filled(n_grid, CellAction::None)
    }

    pub fn from_cells(n_grid: usize, cells: Vec<CellAction>) -> Result<Self> {
        if cells.len() != n_grid * n_grid {
            return Err(Error::InvalidAction(format!(
                "expected {} cells, got {}",
                n_grid * n_grid,
                cells.len()
            )));
        }
        Ok(Self { n_grid, cells })
    }

    /// Parses the flat digit form (0 none, 1 attractive, 2 repulsive).
    pub fn from_digits(n_grid: usize, digits: &[u8]) -> Result<Self> {
        let cells = digits
            .iter()
            .map(|&d| {
                CellAction::from_digit(d).ok_or_else(|| Error::InvalidAction(format!("cell digit {d} not in 0..=2")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_cells(n_grid, cells)
    }

    pub fn digits(&self) -> Vec<u8> {
        self.cells.iter().map(|c| c.digit()).collect()
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    pub fn cells(&self) -> &[CellAction] {
        &self.cells
    }

    pub fn get(&self, ix: usize, iy: usize) -> CellAction {
        self.cells[ix * self.n_grid + iy]
    }

    pub fn set(&mut self, ix: usize, iy: usize, action: CellAction) {
        self.cells[ix * self.n_grid + iy] = action;
    }

    pub fn at(&self, position: Vec2, params: &SimParams) -> CellAction {
        let (ix, iy) = cell_of(position, params);
        self.get(ix, iy)
    }

    /// Checks dimensions and that every cell type is permitted.
    pub fn validate(&self, params: &SimParams) -> Result<()> {
        if self.n_grid != params.n_grid {
            return Err(Error::InvalidAction(format!(
                "grid is {0}x{0}, environment expects {1}x{1}",
                self.n_grid, params.n_grid
            )));
        }
        if let Some(bad) = self.cells.iter().find(|c| !c.allowed_in(params.interaction_set)) {
            return Err(Error::InvalidAction(format!(
                "{bad:?} cells are not available with interaction set {}",
                params.interaction_set
            )));
        }
        Ok(())
    }

    /// Base-3 little-endian decode of a flat action index.
    pub fn encode(index: u128, n_grid: usize) -> Result<Self> {
        let n_cells = n_grid * n_grid;
        let out_of_range = || Error::ActionIndexOutOfRange { index, cells: n_cells };
        let limit = action_space_size(n_grid).ok_or_else(out_of_range)?;
        if index >= limit {
            return Err(out_of_range());
        }
        let mut rest = index;
        let cells = (0..n_cells)
            .map(|_| {
                let d = (rest % 3) as u8;
                rest /= 3;
                CellAction::from_digit(d).expect("digit < 3")
            })
            .collect();
        Ok(Self { n_grid, cells })
    }

    /// Inverse of [`ActionGrid::encode`].
    pub fn decode(&self) -> u128 {
        self.cells
            .iter()
            .rev()
            .fold(0u128, |acc, c| acc * 3 + c.digit() as u128)
    }
}

/// `3^(Ng^2)`, or `None` when that overflows `u128` (Ng > 8).
pub fn action_space_size(n_grid: usize) -> Option<u128> {
    let cells = u32::try_from(n_grid * n_grid).ok()?;
    3u128.checked_pow(cells)
}

/// Per-tag particle counts in each grid cell, indexed `(tag, ix, iy)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservationTensor {
    n_grid: usize,
    counts: Vec<u32>,
}

impl ObservationTensor {
    pub fn zeros(n_grid: usize) -> Self {
        Self {
            n_grid,
            counts: vec![0; 2 * n_grid * n_grid],
        }
    }

    /// Builds from `[left plane, right plane]`, each `Ng*Ng` counts in flat cell order.
    pub fn from_planes(n_grid: usize, left: &[u32], right: &[u32]) -> Self {
        let n = n_grid * n_grid;
        assert!(left.len() == n && right.len() == n, "plane size mismatch");
        let mut counts = Vec::with_capacity(2 * n);
        counts.extend_from_slice(left);
        counts.extend_from_slice(right);
        Self { n_grid, counts }
    }

    pub fn bin(state: &ParticleState, params: &SimParams) -> Self {
        let mut obs = Self::zeros(params.n_grid);
        for p in &state.particles {
            let (ix, iy) = cell_of(p.position, params);
            let idx = obs.index(p.tag, ix, iy);
            obs.counts[idx] += 1;
        }
        obs
    }

    fn index(&self, tag: Tag, ix: usize, iy: usize) -> usize {
        (tag.index() * self.n_grid + ix) * self.n_grid + iy
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    pub fn get(&self, tag: Tag, ix: usize, iy: usize) -> u32 {
        self.counts[self.index(tag, ix, iy)]
    }

    pub fn plane(&self, tag: Tag) -> &[u32] {
        let n = self.n_grid * self.n_grid;
        &self.counts[tag.index() * n..(tag.index() + 1) * n]
    }

    /// Total (both tags) occupancy per cell, flat cell order.
    pub fn occupancy(&self) -> Vec<u32> {
        self.plane(Tag::Left)
            .iter()
            .zip(self.plane(Tag::Right))
            .map(|(l, r)| l + r)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn plane_total(&self, tag: Tag) -> u64 {
        self.plane(tag).iter().map(|&c| c as u64).sum()
    }

    /// Nested `[tag][ix][iy]` form for serialization.
    pub fn to_nested(&self) -> Vec<Vec<Vec<u32>>> {
        [Tag::Left, Tag::Right]
            .iter()
            .map(|&tag| self.plane(tag).chunks(self.n_grid).map(|row| row.to_vec()).collect())
            .collect()
    }

    pub fn from_nested(nested: &[Vec<Vec<u32>>]) -> Option<Self> {
        if nested.len() != 2 {
            return None;
        }
        let n_grid = nested[0].len();
        let mut counts = Vec::with_capacity(2 * n_grid * n_grid);
        for plane in nested {
            if plane.len() != n_grid || plane.iter().any(|row| row.len() != n_grid) {
                return None;
            }
            counts.extend(plane.iter().flatten().copied());
        }
        Some(Self { n_grid, counts })
    }

    /// Same counts with the two tag planes exchanged.
    pub fn swapped_tags(&self) -> Self {
        Self::from_planes(self.n_grid, self.plane(Tag::Right), self.plane(Tag::Left))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{Activation, Particle};
    use proptest::prelude::*;

    fn single(position: Vec2) -> ParticleState {
        ParticleState::new(vec![Particle {
            position,
            activation: Activation::Inactive,
            tag: Tag::Left,
        }])
    }

    #[test]
    fn corner_and_center_bins() {
        let p = SimParams::default();
        let obs = ObservationTensor::bin(&single(Vec2::new(-1.99, -1.99)), &p);
        assert_eq!(obs.get(Tag::Left, 0, 0), 1);
        let obs = ObservationTensor::bin(&single(Vec2::new(0.0, 0.0)), &p);
        assert_eq!(obs.get(Tag::Left, 2, 2), 1);
        assert_eq!(cell_of(Vec2::new(1.9999999999999998, -2.0), &p), (3, 0));
    }

    #[test]
    fn encode_examples() {
        let g = ActionGrid::encode(0, 4).unwrap();
        assert!(g.cells().iter().all(|&c| c == CellAction::None));

        let g = ActionGrid::encode(3u128.pow(16) - 1, 4).unwrap();
        assert!(g.cells().iter().all(|&c| c == CellAction::Repulsive));

        let g = ActionGrid::encode(1, 4).unwrap();
        assert_eq!(g.get(0, 0), CellAction::Attractive);
        assert_eq!(g.cells().iter().filter(|&&c| c != CellAction::None).count(), 1);

        assert!(matches!(
            ActionGrid::encode(3u128.pow(16), 4),
            Err(Error::ActionIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn validation_checks_interaction_set() {
        let p = SimParams::default().with_interaction_set(InteractionSet::AttractiveOnly);
        let mut g = ActionGrid::none(4);
        g.validate(&p).unwrap();
        g.set(1, 2, CellAction::Repulsive);
        assert!(matches!(g.validate(&p), Err(Error::InvalidAction(_))));
        assert!(ActionGrid::none(3).validate(&p).is_err());
    }

    #[test]
    fn digits_reject_out_of_range() {
        assert!(ActionGrid::from_digits(2, &[0, 1, 2, 3]).is_err());
        assert!(ActionGrid::from_digits(2, &[0, 1, 2]).is_err());
        let g = ActionGrid::from_digits(2, &[0, 1, 2, 0]).unwrap();
        assert_eq!(g.get(0, 1), CellAction::Attractive);
        assert_eq!(g.get(1, 0), CellAction::Repulsive);
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(index in 0u128..3u128.pow(16)) {
            let g = ActionGrid::encode(index, 4).unwrap();
            prop_assert_eq!(g.decode(), index);
        }

        #[test]
        fn binning_conserves_particles(
            pts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..200)
        ) {
            let p = SimParams::default();
            let positions: Vec<Vec2> = pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            let state = ParticleState::from_parts(&positions, &vec![Activation::Inactive; positions.len()]);
            let obs = ObservationTensor::bin(&state, &p);
            prop_assert_eq!(obs.total(), positions.len() as u64);
            prop_assert_eq!(ObservationTensor::from_nested(&obs.to_nested()).unwrap(), obs);
        }
    }
}
