//! Scripted controllers for the strategy classes seen in trained agents.
//!
//! Every policy is a pure function of `(spec, observation, t)`. The cell
//! patterns are reconstructions of qualitatively described behaviour, so the
//! free parameters (period, duty, thresholds, side) are exposed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ActionGrid, CellAction, ObservationTensor};
use crate::params::{InteractionSet, SimParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(Error::InvalidPolicy(format!("unknown side '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    NoOp,
    /// Whole grid attractive during the first `ceil(duty * period)` steps of
    /// each period, idle otherwise. `duty = 1` collapses continuously; lower
    /// duty gives the slower "careful" collapse.
    CollapseAll {
        period: usize,
        duty: f64,
    },
    /// Only the listed `(ix, iy)` cells attractive. Empty means the central
    /// block of the grid.
    CollapseSome {
        cells: Vec<(usize, usize)>,
    },
    /// The `cells` most populated cells attractive on every `interval`-th step.
    ActivateLittle {
        cells: usize,
        interval: usize,
    },
    /// `columns` outermost columns on one side repulsive.
    ActivateOneSide {
        side: Side,
        columns: usize,
    },
    /// Cells above the occupancy threshold repulsive. `None` uses the mean `Np / Ng^2`.
    RepulsiveSpreading {
        threshold: Option<f64>,
    },
    /// Above the threshold repulsive, below attractive, equal idle.
    AttrRepSpreading {
        threshold: Option<f64>,
    },
    /// Whole grid alternates between attractive and repulsive. With
    /// `collapse` the attractive phase lasts `ceil(duty * period)` steps;
    /// without it, `ceil(duty * period * short_factor)`.
    Oscillation {
        period: usize,
        duty: f64,
        collapse: bool,
        short_factor: f64,
    },
}

impl PolicySpec {
    pub fn collapse_all() -> Self {
        PolicySpec::CollapseAll { period: 1, duty: 1.0 }
    }

    pub fn collapse_careful(period: usize, duty: f64) -> Self {
        PolicySpec::CollapseAll { period, duty }
    }

    pub fn activate_one_side() -> Self {
        PolicySpec::ActivateOneSide {
            side: Side::Left,
            columns: 2,
        }
    }

    pub fn oscillation(period: usize, duty: f64) -> Self {
        PolicySpec::Oscillation {
            period,
            duty,
            collapse: true,
            short_factor: 0.5,
        }
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicySpec::NoOp => PolicyKind::NoOp,
            PolicySpec::CollapseAll { .. } => PolicyKind::CollapseAll,
            PolicySpec::CollapseSome { .. } => PolicyKind::CollapseSome,
            PolicySpec::ActivateLittle { .. } => PolicyKind::ActivateLittle,
            PolicySpec::ActivateOneSide { .. } => PolicyKind::ActivateOneSide,
            PolicySpec::RepulsiveSpreading { .. } => PolicyKind::RepulsiveSpreading,
            PolicySpec::AttrRepSpreading { .. } => PolicyKind::AttrRepSpreading,
            PolicySpec::Oscillation { .. } => PolicyKind::Oscillation,
        }
    }

    /// Checks parameters and that the emitted cell types are available.
    pub fn validate(&self, params: &SimParams) -> Result<()> {
        let set = params.interaction_set;
        let kind = self.kind();
        if (kind.uses_attractive() && !set.allows_attractive()) || (kind.uses_repulsive() && !set.allows_repulsive()) {
            return Err(Error::InvalidPolicy(format!(
                "{kind} is not available with interaction set {set}"
            )));
        }
        let bad = |msg: String| Err(Error::InvalidPolicy(msg));
        match self {
            PolicySpec::CollapseAll { period, duty } | PolicySpec::Oscillation { period, duty, .. } => {
                if *period == 0 {
                    return bad(format!("{kind}: period must be >= 1"));
                }
                if !(0.0..=1.0).contains(duty) {
                    return bad(format!("{kind}: duty must lie in [0, 1], got {duty}"));
                }
                if let PolicySpec::Oscillation { short_factor, .. } = self {
                    if !(0.0..=1.0).contains(short_factor) {
                        return bad(format!("{kind}: short_factor must lie in [0, 1]"));
                    }
                }
            }
            PolicySpec::CollapseSome { cells } => {
                if let Some(&(ix, iy)) = cells
                    .iter()
                    .find(|&&(ix, iy)| ix >= params.n_grid || iy >= params.n_grid)
                {
                    return bad(format!("{kind}: cell ({ix}, {iy}) outside the grid"));
                }
            }
            PolicySpec::ActivateLittle { interval, .. } => {
                if *interval == 0 {
                    return bad(format!("{kind}: interval must be >= 1"));
                }
            }
            PolicySpec::ActivateOneSide { columns, .. } => {
                if *columns > params.n_grid {
                    return bad(format!("{kind}: {columns} columns exceed grid size {}", params.n_grid));
                }
            }
            PolicySpec::RepulsiveSpreading { threshold } | PolicySpec::AttrRepSpreading { threshold } => {
                if threshold.is_some_and(|t| !t.is_finite()) {
                    return bad(format!("{kind}: threshold must be finite"));
                }
            }
            PolicySpec::NoOp => {}
        }
        Ok(())
    }

    /// The control grid for step `t` given the current observation.
    pub fn action(&self, obs: &ObservationTensor, t: usize, params: &SimParams) -> Result<ActionGrid> {
        self.validate(params)?;
        let ng = params.n_grid;
        let grid = match self {
            PolicySpec::NoOp => ActionGrid::none(ng),
            PolicySpec::CollapseAll { period, duty } => {
                if t % period < phase_steps(*duty, *period as f64) {
                    ActionGrid::filled(ng, CellAction::Attractive)
                } else {
                    ActionGrid::none(ng)
                }
            }
            PolicySpec::CollapseSome { cells } => {
                let mut g = ActionGrid::none(ng);
                let default_cells;
                let cells = if cells.is_empty() {
                    default_cells = center_cells(ng);
                    &default_cells
                } else {
                    cells
                };
                for &(ix, iy) in cells {
                    g.set(ix, iy, CellAction::Attractive);
                }
                g
            }
            PolicySpec::ActivateLittle { cells, interval } => {
                let mut g = ActionGrid::none(ng);
                if t.is_multiple_of(*interval) {
                    let occupancy = obs.occupancy();
                    let mut order: Vec<usize> = (0..occupancy.len()).collect();
                    // most populated first, ties to the lower index
                    order.sort_by(|&a, &b| occupancy[b].cmp(&occupancy[a]).then(a.cmp(&b)));
                    for &flat in order.iter().take(*cells) {
                        g.set(flat / ng, flat % ng, CellAction::Attractive);
                    }
                }
                g
            }
            PolicySpec::ActivateOneSide { side, columns } => {
                let mut g = ActionGrid::none(ng);
                let range = match side {
                    Side::Left => 0..*columns,
                    Side::Right => ng - columns..ng,
                };
                for ix in range {
                    for iy in 0..ng {
                        g.set(ix, iy, CellAction::Repulsive);
                    }
                }
                g
            }
            PolicySpec::RepulsiveSpreading { threshold } => {
                spreading(obs, ng, threshold.unwrap_or(params.mean_occupancy()), CellAction::None)
            }
            PolicySpec::AttrRepSpreading { threshold } => spreading(
                obs,
                ng,
                threshold.unwrap_or(params.mean_occupancy()),
                CellAction::Attractive,
            ),
            PolicySpec::Oscillation {
                period,
                duty,
                collapse,
                short_factor,
            } => {
                let attractive_len = *duty * *period as f64 * if *collapse { 1.0 } else { *short_factor };
                if t % period < phase_steps(1.0, attractive_len) {
                    ActionGrid::filled(ng, CellAction::Attractive)
                } else {
                    ActionGrid::filled(ng, CellAction::Repulsive)
                }
            }
        };
        Ok(grid)
    }
}

/// `ceil(fraction * length)` as a step count.
fn phase_steps(fraction: f64, length: f64) -> usize {
    // guard against 0.5 * 10 landing a hair above 5
    let x = fraction * length;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

fn center_cells(ng: usize) -> Vec<(usize, usize)> {
    let mid = if ng.is_multiple_of(2) {
        vec![ng / 2 - 1, ng / 2]
    } else {
        vec![ng / 2]
    };
    mid.iter().flat_map(|&ix| mid.iter().map(move |&iy| (ix, iy))).collect()
}

fn spreading(obs: &ObservationTensor, ng: usize, threshold: f64, below: CellAction) -> ActionGrid {
    let cells = obs
        .occupancy()
        .iter()
        .map(|&c| {
            let c = c as f64;
            if c > threshold {
                CellAction::Repulsive
            } else if c < threshold {
                below
            } else {
                CellAction::None
            }
        })
        .collect();
    ActionGrid::from_cells(ng, cells).expect("occupancy has Ng^2 cells")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    NoOp,
    CollapseAll,
    CollapseSome,
    ActivateLittle,
    ActivateOneSide,
    RepulsiveSpreading,
    AttrRepSpreading,
    Oscillation,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::NoOp,
        PolicyKind::CollapseAll,
        PolicyKind::CollapseSome,
        PolicyKind::ActivateLittle,
        PolicyKind::ActivateOneSide,
        PolicyKind::RepulsiveSpreading,
        PolicyKind::AttrRepSpreading,
        PolicyKind::Oscillation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::NoOp => "no_op",
            PolicyKind::CollapseAll => "collapse_all",
            PolicyKind::CollapseSome => "collapse_some",
            PolicyKind::ActivateLittle => "activate_little",
            PolicyKind::ActivateOneSide => "activate_one_side",
            PolicyKind::RepulsiveSpreading => "repulsive_spreading",
            PolicyKind::AttrRepSpreading => "attr_rep_spreading",
            PolicyKind::Oscillation => "oscillation",
        }
    }

    pub fn uses_attractive(self) -> bool {
        matches!(
            self,
            PolicyKind::CollapseAll
                | PolicyKind::CollapseSome
                | PolicyKind::ActivateLittle
                | PolicyKind::AttrRepSpreading
                | PolicyKind::Oscillation
        )
    }

    pub fn uses_repulsive(self) -> bool {
        matches!(
            self,
            PolicyKind::ActivateOneSide
                | PolicyKind::RepulsiveSpreading
                | PolicyKind::AttrRepSpreading
                | PolicyKind::Oscillation
        )
    }

    pub fn compatible_with(self, set: InteractionSet) -> bool {
        (!self.uses_attractive() || set.allows_attractive()) && (!self.uses_repulsive() || set.allows_repulsive())
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidPolicy(format!("unknown policy '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_bin_obs() -> ObservationTensor {
        let mut l = [0u32; 16];
        let mut r = [0u32; 16];
        l[6] = 48;
        r[6] = 48;
        ObservationTensor::from_planes(4, &l, &r)
    }

    fn params(set: InteractionSet) -> SimParams {
        SimParams::default().with_interaction_set(set)
    }

    #[test]
    fn no_op_is_all_none() {
        let p = params(InteractionSet::AttractiveOnly);
        for t in [0, 5, 99] {
            assert_eq!(
                PolicySpec::NoOp.action(&one_bin_obs(), t, &p).unwrap(),
                ActionGrid::none(4)
            );
        }
    }

    #[test]
    fn oscillation_phases() {
        let p = params(InteractionSet::Both);
        let spec = PolicySpec::oscillation(10, 0.5);
        let obs = one_bin_obs();
        for t in 0..5 {
            assert_eq!(
                spec.action(&obs, t, &p).unwrap(),
                ActionGrid::filled(4, CellAction::Attractive)
            );
        }
        for t in 5..10 {
            assert_eq!(
                spec.action(&obs, t, &p).unwrap(),
                ActionGrid::filled(4, CellAction::Repulsive)
            );
        }
        assert_eq!(
            spec.action(&obs, 13, &p).unwrap(),
            ActionGrid::filled(4, CellAction::Attractive)
        );
        assert_eq!(
            spec.action(&obs, 17, &p).unwrap(),
            ActionGrid::filled(4, CellAction::Repulsive)
        );

        let short = PolicySpec::Oscillation {
            period: 10,
            duty: 0.5,
            collapse: false,
            short_factor: 0.5,
        };
        // ceil(2.5) = 3 attractive steps
        assert_eq!(short.action(&obs, 2, &p).unwrap().get(0, 0), CellAction::Attractive);
        assert_eq!(short.action(&obs, 3, &p).unwrap().get(0, 0), CellAction::Repulsive);
    }

    #[test]
    fn attr_rep_spreading_on_single_cluster() {
        let p = params(InteractionSet::Both);
        let g = PolicySpec::AttrRepSpreading { threshold: None }
            .action(&one_bin_obs(), 0, &p)
            .unwrap();
        assert_eq!(g.get(1, 2), CellAction::Repulsive);
        let attractive = g.cells().iter().filter(|&&c| c == CellAction::Attractive).count();
        assert_eq!(attractive, 15);
    }

    #[test]
    fn spreading_ties_are_idle() {
        let p = params(InteractionSet::Both);
        let obs = ObservationTensor::from_planes(4, &[3; 16], &[3; 16]);
        let g = PolicySpec::AttrRepSpreading { threshold: None }
            .action(&obs, 0, &p)
            .unwrap();
        assert_eq!(g, ActionGrid::none(4));
        let g = PolicySpec::RepulsiveSpreading { threshold: None }
            .action(&one_bin_obs(), 0, &params(InteractionSet::RepulsiveOnly))
            .unwrap();
        assert_eq!(g.cells().iter().filter(|&&c| c == CellAction::Repulsive).count(), 1);
        assert_eq!(g.cells().iter().filter(|&&c| c == CellAction::None).count(), 15);
    }

    #[test]
    fn one_side_columns() {
        let p = params(InteractionSet::RepulsiveOnly);
        let g = PolicySpec::activate_one_side().action(&one_bin_obs(), 0, &p).unwrap();
        for ix in 0..4 {
            for iy in 0..4 {
                let expected = if ix < 2 {
                    CellAction::Repulsive
                } else {
                    CellAction::None
                };
                assert_eq!(g.get(ix, iy), expected);
            }
        }
    }

    #[test]
    fn careful_collapse_and_collapse_some() {
        let p = params(InteractionSet::AttractiveOnly);
        let spec = PolicySpec::collapse_careful(4, 0.25);
        let obs = one_bin_obs();
        assert_eq!(
            spec.action(&obs, 0, &p).unwrap(),
            ActionGrid::filled(4, CellAction::Attractive)
        );
        assert_eq!(spec.action(&obs, 1, &p).unwrap(), ActionGrid::none(4));
        assert_eq!(
            spec.action(&obs, 4, &p).unwrap(),
            ActionGrid::filled(4, CellAction::Attractive)
        );

        let g = PolicySpec::CollapseSome { cells: vec![] }.action(&obs, 0, &p).unwrap();
        let active: Vec<(usize, usize)> = (0..4)
            .flat_map(|ix| (0..4).map(move |iy| (ix, iy)))
            .filter(|&(ix, iy)| g.get(ix, iy) == CellAction::Attractive)
            .collect();
        assert_eq!(active, vec![(1, 1), (1, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn activate_little_targets_densest_cell() {
        let p = params(InteractionSet::AttractiveOnly);
        let spec = PolicySpec::ActivateLittle { cells: 1, interval: 5 };
        let g = spec.action(&one_bin_obs(), 0, &p).unwrap();
        assert_eq!(g.get(1, 2), CellAction::Attractive);
        assert_eq!(g.cells().iter().filter(|&&c| c != CellAction::None).count(), 1);
        assert_eq!(spec.action(&one_bin_obs(), 3, &p).unwrap(), ActionGrid::none(4));
    }

    #[test]
    fn incompatible_kinds_are_rejected() {
        let obs = one_bin_obs();
        let rep = params(InteractionSet::RepulsiveOnly);
        assert!(matches!(
            PolicySpec::collapse_all().action(&obs, 0, &rep),
            Err(Error::InvalidPolicy(_))
        ));
        let att = params(InteractionSet::AttractiveOnly);
        assert!(PolicySpec::activate_one_side().action(&obs, 0, &att).is_err());
        assert!(PolicySpec::oscillation(10, 0.5).action(&obs, 0, &att).is_err());
        assert!(PolicySpec::oscillation(0, 0.5)
            .validate(&params(InteractionSet::Both))
            .is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
        }
        assert!("collapse".parse::<PolicyKind>().is_err());
    }

    fn arb_spec() -> impl Strategy<Value = PolicySpec> {
        prop_oneof![
            Just(PolicySpec::NoOp),
            (1usize..20, 0.0f64..=1.0).prop_map(|(period, duty)| PolicySpec::CollapseAll { period, duty }),
            Just(PolicySpec::CollapseSome { cells: vec![] }),
            (0usize..17, 1usize..10).prop_map(|(cells, interval)| PolicySpec::ActivateLittle { cells, interval }),
            (any::<bool>(), 0usize..=4).prop_map(|(l, columns)| PolicySpec::ActivateOneSide {
                side: if l { Side::Left } else { Side::Right },
                columns
            }),
            proptest::option::of(0.0f64..20.0).prop_map(|threshold| PolicySpec::RepulsiveSpreading { threshold }),
            proptest::option::of(0.0f64..20.0).prop_map(|threshold| PolicySpec::AttrRepSpreading { threshold }),
            (1usize..30, 0.0f64..=1.0, any::<bool>(), 0.0f64..=1.0).prop_map(
                |(period, duty, collapse, short_factor)| {
                    PolicySpec::Oscillation {
                        period,
                        duty,
                        collapse,
                        short_factor,
                    }
                }
            ),
        ]
    }

    proptest! {
        #[test]
        fn emitted_grids_pass_validation(
            spec in arb_spec(),
            cells in proptest::collection::vec(0usize..16, 96),
            t in 0usize..200,
        ) {
            let mut l = [0u32; 16];
            let mut r = [0u32; 16];
            for (i, c) in cells.into_iter().enumerate() {
                if i % 2 == 0 { l[c] += 1 } else { r[c] += 1 }
            }
            let obs = ObservationTensor::from_planes(4, &l, &r);
            for set in [InteractionSet::AttractiveOnly, InteractionSet::RepulsiveOnly, InteractionSet::Both] {
                let p = params(set);
                let compatible = spec.kind().compatible_with(set);
                match spec.action(&obs, t, &p) {
                    Ok(g) => {
                        prop_assert!(compatible);
                        prop_assert!(g.validate(&p).is_ok());
                        // pure function of its inputs
                        prop_assert_eq!(spec.action(&obs, t, &p).unwrap(), g);
                    }
                    Err(_) => prop_assert!(!compatible),
                }
            }
        }
    }
}
