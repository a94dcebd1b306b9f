use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mixing_cli::{run_episodes, run_spectra, serve, verify_trajectory, Settings};

#[derive(Debug, Parser)]
#[command(name = "mixsim", version, about = "Grid-controlled particle mixing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Roll out a scripted policy and write the trajectory as JSON lines.
    Run(Settings),
    /// Roll out a scripted policy and record update-matrix spectra.
    Spectra(Settings),
    /// Answer reset/step/spec/close requests on stdin/stdout.
    Serve(Settings),
    /// Recompute the rewards of a trajectory file.
    Verify {
        /// Trajectory written by `run`.
        input: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
}

/// Configuration problems exit with 2, runtime failures with 1.
struct ConfigError(anyhow::Error);

fn configured<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| ConfigError(e).into())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn cmd_run(s: Settings) -> Result<()> {
    let cfg = configured(s.env_config())?;
    let policy = configured(s.policy(&cfg.params))?;
    let seeds = configured(s.seeds())?;

    let path = s.trajectory_path();
    let summaries = if path == Path::new("-") {
        let mut out = io::stdout().lock();
        run_episodes(&cfg, &policy, &seeds, Some(&mut out))?
    } else {
        let mut out = create(&path)?;
        let summaries = run_episodes(&cfg, &policy, &seeds, Some(&mut out))?;
        out.flush()?;
        summaries
    };
    let mean = summaries.iter().map(|e| e.episode_return).sum::<f64>() / summaries.len() as f64;
    eprintln!(
        "{} episode(s) of {} -> {}; mean return {mean:.6}",
        summaries.len(),
        policy.kind(),
        path.display()
    );
    Ok(())
}

fn cmd_spectra(s: Settings) -> Result<()> {
    let cfg = configured(s.env_config())?;
    let policy = configured(s.policy(&cfg.params))?;
    let seeds = configured(s.seeds())?;
    let stride = configured(s.spectra_stride())?;
    let hist = configured(s.histogram())?;

    let spectra_path = s.spectra_path();
    let mut out = create(&spectra_path)?;
    let run = run_spectra(
        &cfg,
        &policy,
        &seeds,
        stride,
        s.include_inactive.unwrap_or(false),
        hist,
        Some(&mut out),
    )?;
    out.flush()?;
    let hist_path = s.histogram_path();
    let mut h = create(&hist_path)?;
    h.write_all(run.histogram.to_table().as_bytes())?;
    h.flush()?;

    let eig = run.records.iter().flat_map(|(_, _, r)| r.eigenvalues.iter().copied());
    let (below, above, total) = eig.fold((0u64, 0u64, 0u64), |(b, a, n), l| {
        (b + (l < 1.0 - 1e-6) as u64, a + (l > 1.0 + 1e-6) as u64, n + 1)
    });
    eprintln!(
        "{} matrices, {total} eigenvalues ({below} below 1, {above} above 1) -> {}, {}",
        run.records.len(),
        spectra_path.display(),
        hist_path.display()
    );
    Ok(())
}

fn cmd_serve(s: Settings) -> Result<()> {
    let cfg = configured(s.env_config())?;
    let seeds = configured(s.seeds())?;
    serve(cfg, seeds[0], io::stdin().lock(), io::stdout().lock())
}

fn cmd_verify(input: &Path, s: Settings) -> Result<()> {
    let cfg = configured(s.env_config())?;
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let report = verify_trajectory(BufReader::new(file), &cfg)?;
    eprintln!("ok: {} steps in {} episode(s)", report.steps, report.episodes);
    Ok(())
}

impl std::fmt::Debug for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(&self.0, f)
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {:#}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(s) => configured(s.merged()).and_then(cmd_run),
        Command::Spectra(s) => configured(s.merged()).and_then(cmd_spectra),
        Command::Serve(s) => configured(s.merged()).and_then(cmd_serve),
        Command::Verify { input, settings } => configured(settings.merged()).and_then(|s| cmd_verify(&input, s)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<ConfigError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
