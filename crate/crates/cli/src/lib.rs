//! Command-line front end: configuration, batch rollouts, spectra and the
//! line-delimited JSON protocol.

pub mod config;
pub mod records;
pub mod runner;
pub mod serve;

pub use config::{SeedSpec, Settings};
pub use runner::{
    play_episode, run_episodes, run_spectra, verify_trajectory, EpisodeSummary, SpectraRun, VerifyReport,
};
pub use serve::{serve, Session};
