//! Settings from command-line flags and an optional flat TOML file.
//!
//! Every key is optional in both sources. A value present in the file wins
//! over the same flag; anything left unset falls back to the defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use mixing_core::{
    EnvConfig, ForceMethod, Histogram, InteractionSet, Placement, PolicyKind, PolicySpec, Side, SimParams,
};
use serde::Deserialize;

pub const OUT_DIR_ENV: &str = "MIXSIM_OUT_DIR";

/// Episode seeds: a single start seed or a half-open range `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSpec {
    Start(u64),
    Range(u64, u64),
}

impl FromStr for SeedSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range '{s}'"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range '{s}'"))?;
            if b <= a {
                return Err(format!("empty seed range '{s}'"));
            }
            Ok(SeedSpec::Range(a, b))
        } else {
            s.parse().map(SeedSpec::Start).map_err(|_| format!("bad seed '{s}'"))
        }
    }
}

impl<'de> Deserialize<'de> for SeedSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(s) => Ok(SeedSpec::Start(s)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Flat TOML file whose keys mirror these flags (underscores for dashes).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Integration time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Spring constant.
    #[arg(long)]
    pub k: Option<f64>,
    /// Inner cutoff radius.
    #[arg(long)]
    pub r_c: Option<f64>,
    /// Outer cutoff radius, also the repulsive rest length.
    #[arg(long)]
    pub big_r_c: Option<f64>,
    /// Deactivation rate of particles in idle cells.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    /// Half box width; the box is [-L, L)^2.
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub n_part: Option<usize>,
    /// Control cells per axis.
    #[arg(long)]
    pub n_grid: Option<usize>,
    /// Simulation steps per episode.
    #[arg(long)]
    pub n_steps: Option<usize>,
    /// attractive-only, repulsive-only or both.
    #[arg(long)]
    pub interaction_set: Option<String>,
    /// Multiplier on the displacement per step.
    #[arg(long)]
    pub mobility: Option<f64>,

    /// Weight of the mixing reward.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Start seed, or a range `a..b` with one episode per seed.
    #[arg(long)]
    pub seed: Option<SeedSpec>,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// uniform or stratified.
    #[arg(long)]
    pub placement: Option<String>,
    /// Simulation steps per control action.
    #[arg(long)]
    pub frame_skip: Option<usize>,
    /// Use the cell-list force kernel.
    #[arg(long)]
    pub cell_list: Option<bool>,

    /// Scripted policy name.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long)]
    pub duty: Option<f64>,
    /// Oscillation: whether the attractive phase runs for the full duty.
    #[arg(long)]
    pub collapse: Option<bool>,
    #[arg(long)]
    pub short_factor: Option<f64>,
    /// left or right.
    #[arg(long)]
    pub side: Option<String>,
    #[arg(long)]
    pub columns: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Cells for collapse_some as `ix:iy,ix:iy`.
    #[arg(long)]
    pub cells: Option<String>,
    /// Number of cells for activate_little.
    #[arg(long)]
    pub little_cells: Option<usize>,
    #[arg(long)]
    pub interval: Option<usize>,

    /// Output directory for default file names.
    #[arg(long, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
    /// Trajectory file; `-` writes to stdout.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long)]
    pub spectra_out: Option<PathBuf>,
    #[arg(long)]
    pub histogram_out: Option<PathBuf>,
    /// Analyze every n-th simulation step.
    #[arg(long)]
    pub spectra_stride: Option<usize>,
    #[arg(long)]
    pub hist_bins: Option<usize>,
    #[arg(long)]
    pub hist_lo: Option<f64>,
    #[arg(long)]
    pub hist_hi: Option<f64>,
    /// Keep inactive particles (eigenvalue 1) in the update matrix.
    #[arg(long)]
    pub include_inactive: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid config file")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: Settings) -> Self {
        overlay!(self, top;
            dt, k, r_c, big_r_c, lambda, mass, half_width, n_part, n_grid, n_steps, interaction_set, mobility,
            alpha, seed, episodes, placement, frame_skip, cell_list,
            policy, period, duty, collapse, short_factor, side, columns, threshold, cells, little_cells, interval,
            out_dir, trajectory, spectra_out, histogram_out, spectra_stride, hist_bins, hist_lo, hist_hi,
            include_inactive,
        );
        self
    }

    /// Flags overlaid by the `--config` file, if any.
    pub fn merged(self) -> Result<Self> {
        match self.config.clone() {
            Some(path) => Ok(self.overlay(Settings::from_file(&path)?)),
            None => Ok(self),
        }
    }

    pub fn params(&self) -> Result<SimParams> {
        let d = SimParams::default();
        let interaction_set = match &self.interaction_set {
            Some(s) => s.parse::<InteractionSet>()?,
            None => d.interaction_set,
        };
        let p = SimParams {
            dt: self.dt.unwrap_or(d.dt),
            k: self.k.unwrap_or(d.k),
            r_c: self.r_c.unwrap_or(d.r_c),
            big_r_c: self.big_r_c.unwrap_or(d.big_r_c),
            lambda: self.lambda.unwrap_or(d.lambda),
            mass: self.mass.unwrap_or(d.mass),
            half_width: self.half_width.unwrap_or(d.half_width),
            n_part: self.n_part.unwrap_or(d.n_part),
            n_grid: self.n_grid.unwrap_or(d.n_grid),
            n_steps: self.n_steps.unwrap_or(d.n_steps),
            interaction_set,
            mobility: self.mobility.unwrap_or(d.mobility),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn env_config(&self) -> Result<EnvConfig> {
        let d = EnvConfig::default();
        let placement = match &self.placement {
            Some(s) => s.parse::<Placement>()?,
            None => d.placement,
        };
        let cfg = EnvConfig {
            params: self.params()?,
            alpha: self.alpha.unwrap_or(d.alpha),
            placement,
            frame_skip: self.frame_skip.unwrap_or(d.frame_skip),
            force_method: if self.cell_list.unwrap_or(false) {
                ForceMethod::CellList
            } else {
                ForceMethod::Pairwise
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seeds(&self) -> Result<Vec<u64>> {
        match (self.seed.unwrap_or(SeedSpec::Start(0)), self.episodes) {
            (SeedSpec::Range(a, b), Some(n)) if n as u64 != b - a => {
                bail!("seed range {a}..{b} holds {} episodes, but episodes = {n}", b - a)
            }
            (SeedSpec::Range(a, b), _) => Ok((a..b).collect()),
            (SeedSpec::Start(_), Some(0)) => bail!("episodes must be >= 1"),
            (SeedSpec::Start(s), n) => {
                let n = n.unwrap_or(1) as u64;
                let end = s.checked_add(n).ok_or_else(|| anyhow!("seed range overflows"))?;
                Ok((s..end).collect())
            }
        }
    }

    /// The scripted policy, validated against `params`.
    pub fn policy(&self, params: &SimParams) -> Result<PolicySpec> {
        let kind: PolicyKind = self.policy.as_deref().unwrap_or("no_op").parse()?;
        let spec = match kind {
            PolicyKind::NoOp => PolicySpec::NoOp,
            PolicyKind::CollapseAll => PolicySpec::CollapseAll {
                period: self.period.unwrap_or(1),
                duty: self.duty.unwrap_or(1.0),
            },
            PolicyKind::CollapseSome => PolicySpec::CollapseSome {
                cells: match &self.cells {
                    Some(s) => parse_cells(s)?,
                    None => Vec::new(),
                },
            },
            PolicyKind::ActivateLittle => PolicySpec::ActivateLittle {
                cells: self.little_cells.unwrap_or(1),
                interval: self.interval.unwrap_or(5),
            },
            PolicyKind::ActivateOneSide => PolicySpec::ActivateOneSide {
                side: match &self.side {
                    Some(s) => s.parse::<Side>()?,
                    None => Side::Left,
                },
                columns: self.columns.unwrap_or(2),
            },
            PolicyKind::RepulsiveSpreading => PolicySpec::RepulsiveSpreading {
                threshold: self.threshold,
            },
            PolicyKind::AttrRepSpreading => PolicySpec::AttrRepSpreading {
                threshold: self.threshold,
            },
            PolicyKind::Oscillation => PolicySpec::Oscillation {
                period: self.period.unwrap_or(10),
                duty: self.duty.unwrap_or(0.5),
                collapse: self.collapse.unwrap_or(true),
                short_factor: self.short_factor.unwrap_or(0.5),
            },
        };
        spec.validate(params)?;
        Ok(spec)
    }

    fn out_path(&self, explicit: &Option<PathBuf>, default_name: &str) -> PathBuf {
        match explicit {
            Some(p) => p.clone(),
            None => self
                .out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("."))
                .join(default_name),
        }
    }

    pub fn trajectory_path(&self) -> PathBuf {
        self.out_path(&self.trajectory, "trajectory.jsonl")
    }

    pub fn spectra_path(&self) -> PathBuf {
        self.out_path(&self.spectra_out, "spectra.jsonl")
    }

    pub fn histogram_path(&self) -> PathBuf {
        self.out_path(&self.histogram_out, "histogram.txt")
    }

    pub fn spectra_stride(&self) -> Result<usize> {
        match self.spectra_stride.unwrap_or(1) {
            0 => bail!("spectra_stride must be >= 1"),
            s => Ok(s),
        }
    }

    pub fn histogram(&self) -> Result<Histogram> {
        let d = (200, 0.9, 1.1);
        let (bins, lo, hi) = (
            self.hist_bins.unwrap_or(d.0),
            self.hist_lo.unwrap_or(d.1),
            self.hist_hi.unwrap_or(d.2),
        );
        Histogram::new(bins, lo, hi).ok_or_else(|| anyhow!("invalid histogram: {bins} bins on ({lo}, {hi})"))
    }
}

/// Parses `ix:iy,ix:iy`.
pub fn parse_cells(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(|c| {
            let (a, b) = c
                .split_once(':')
                .ok_or_else(|| anyhow!("bad cell '{c}', expected ix:iy"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}
