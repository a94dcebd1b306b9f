//! Physical and episode constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which activation types the controller may place on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionSet {
    AttractiveOnly,
    RepulsiveOnly,
    Both,
}

impl InteractionSet {
    pub fn allows_attractive(self) -> bool {
        matches!(self, InteractionSet::AttractiveOnly | InteractionSet::Both)
    }

    pub fn allows_repulsive(self) -> bool {
        matches!(self, InteractionSet::RepulsiveOnly | InteractionSet::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionSet::AttractiveOnly => "attractive-only",
            InteractionSet::RepulsiveOnly => "repulsive-only",
            InteractionSet::Both => "both",
        }
    }
}

impl fmt::Display for InteractionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InteractionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attractive-only" | "attractive" => Ok(InteractionSet::AttractiveOnly),
            "repulsive-only" | "repulsive" => Ok(InteractionSet::RepulsiveOnly),
            "both" => Ok(InteractionSet::Both),
            other => Err(Error::InvalidParams(format!(
                "unknown interaction set '{other}' (expected attractive-only, repulsive-only or both)"
            ))),
        }
    }
}

/// Simulation constants. Defaults reproduce the reference environment:
/// 96 particles in a periodic 4x4 box, 4x4 control grid, 100 steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub dt: f64,
    /// Spring constant shared by attractive and repulsive springs.
    pub k: f64,
    /// Lower truncation radius; pairs closer than this do not interact.
    pub r_c: f64,
    /// Upper truncation radius, also the rest length of the repulsive spring.
    pub big_r_c: f64,
    /// Deactivation rate outside activation areas.
    pub lambda: f64,
    pub mass: f64,
    /// Box half-width; each axis spans `[-half_width, half_width)`.
    pub half_width: f64,
    pub n_part: usize,
    pub n_grid: usize,
    pub n_steps: usize,
    pub interaction_set: InteractionSet,
    /// Extra factor on `dt^2 / m` in the position update. 1 leaves the update as written.
    pub mobility: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.05,
            k: 3.0,
            r_c: 0.015,
            big_r_c: 1.5,
            lambda: 10.0,
            mass: 1.0,
            half_width: 2.0,
            n_part: 96,
            n_grid: 4,
            n_steps: 100,
            interaction_set: InteractionSet::Both,
            mobility: 1.0,
        }
    }
}

impl SimParams {
    pub fn with_interaction_set(mut self, set: InteractionSet) -> Self {
        self.interaction_set = set;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return fail(format!("k must be >= 0, got {}", self.k));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return fail(format!("mass must be > 0, got {}", self.mass));
        }
        if !(self.r_c >= 0.0 && self.r_c < self.big_r_c && self.big_r_c.is_finite()) {
            return fail(format!(
                "cutoffs must satisfy 0 <= r_c < R_c, got r_c={} R_c={}",
                self.r_c, self.big_r_c
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return fail(format!("half_width must be > 0, got {}", self.half_width));
        }
        if self.n_part == 0 || !self.n_part.is_multiple_of(2) {
            return fail(format!("n_part must be even and positive, got {}", self.n_part));
        }
        if self.n_grid == 0 {
            return fail("n_grid must be >= 1".into());
        }
        if self.n_steps == 0 {
            return fail("n_steps must be >= 1".into());
        }
        if !(self.mobility > 0.0 && self.mobility.is_finite()) {
            return fail(format!("mobility must be > 0, got {}", self.mobility));
        }
        Ok(())
    }

    /// Position change per unit force: `mobility * dt^2 / m`.
    pub fn step_scale(&self) -> f64 {
        self.mobility * self.dt * self.dt / self.mass
    }

    pub fn box_width(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn cell_width(&self) -> f64 {
        self.box_width() / self.n_grid as f64
    }

    pub fn n_cells(&self) -> usize {
        self.n_grid * self.n_grid
    }

    /// Probability that an activated particle outside any activation area
    /// switches off during one step.
    pub fn deactivation_probability(&self) -> f64 {
        -(-self.lambda * self.dt).exp_m1()
    }

    /// Mean particle count per grid cell.
    pub fn mean_occupancy(&self) -> f64 {
        self.n_part as f64 / self.n_cells() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = SimParams::default();
        p.validate().unwrap();
        assert_eq!(p.n_part, 96);
        assert_eq!(p.n_cells(), 16);
        assert!((p.step_scale() - 0.0025).abs() < 1e-18);
    }

    #[test]
    fn deactivation_probability_matches_exponential() {
        let p = SimParams::default();
        assert!((p.deactivation_probability() - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!((p.deactivation_probability() - 0.39347).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_values() {
        let d = SimParams::default;
        assert!(SimParams { n_part: 95, ..d() }.validate().is_err());
        assert!(SimParams { r_c: 1.5, ..d() }.validate().is_err());
        assert!(SimParams { dt: 0.0, ..d() }.validate().is_err());
    }

    #[test]
    fn interaction_set_parsing() {
        assert_eq!("both".parse::<InteractionSet>().unwrap(), InteractionSet::Both);
        assert_eq!(
            "repulsive-only".parse::<InteractionSet>().unwrap(),
            InteractionSet::RepulsiveOnly
        );
        assert!("sideways".parse::<InteractionSet>().is_err());
    }
}
