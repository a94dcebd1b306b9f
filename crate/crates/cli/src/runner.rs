//! Batch rollouts of scripted policies.

use std::io::{BufRead, Write};

use anyhow::{bail, Context, Result};
use mixing_core::{
    analyze_state, combined_reward, homogeneity_reward, mixing_reward, EnvConfig, Environment, Histogram,
    ObservationTensor, PolicySpec, SpectrumRecord, StepResult,
};

use crate::records::{format_f17, write_line, SpectrumLine, StepRecord, SummaryRecord, F17};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub seed: u64,
    pub steps: Vec<StepResult>,
    pub episode_return: f64,
    pub r_m_sum: f64,
    pub r_h_sum: f64,
}

impl EpisodeSummary {
    pub fn first(&self) -> &StepResult {
        &self.steps[0]
    }

    pub fn last(&self) -> &StepResult {
        self.steps.last().expect("episodes have at least one step")
    }
}

/// Plays one episode. `probe` sees every simulation step just before
/// integration; `on_step` sees each control step with the action digits.
pub fn play_episode<P, S>(
    env: &mut Environment,
    policy: &PolicySpec,
    seed: u64,
    mut probe: P,
    mut on_step: S,
) -> Result<Vec<StepResult>>
where
    P: FnMut(usize, &mixing_core::ParticleState),
    S: FnMut(&[u8], &StepResult) -> Result<()>,
{
    let params = env.params().clone();
    let mut obs = env.reset(seed);
    let mut steps = Vec::with_capacity(params.n_steps);
    loop {
        let action = policy.action(&obs, env.t(), &params)?;
        let result = env.step_with_probe(&action, &mut probe)?;
        on_step(&action.digits(), &result)?;
        obs = result.observation.clone();
        let done = result.done;
        steps.push(result);
        if done {
            return Ok(steps);
        }
    }
}

/// Runs one episode per seed, writing step and summary records to `out`.
pub fn run_episodes<W: Write>(
    config: &EnvConfig,
    policy: &PolicySpec,
    seeds: &[u64],
    mut out: Option<&mut W>,
) -> Result<Vec<EpisodeSummary>> {
    policy.validate(&config.params)?;
    let mut env = Environment::new(config.clone())?;
    let mut summaries = Vec::with_capacity(seeds.len());
    for (episode, &seed) in seeds.iter().enumerate() {
        let steps = play_episode(
            &mut env,
            policy,
            seed,
            |_, _| {},
            |action, r| {
                if let Some(w) = out.as_deref_mut() {
                    write_line(w, &StepRecord::new(episode, seed, action.to_vec(), r))?;
                }
                Ok(())
            },
        )?;
        let summary = EpisodeSummary {
            episode,
            seed,
            episode_return: steps.iter().map(|s| s.reward).sum(),
            r_m_sum: steps.iter().map(|s| s.r_m).sum(),
            r_h_sum: steps.iter().map(|s| s.r_h).sum(),
            steps,
        };
        if let Some(w) = out.as_deref_mut() {
            write_line(
                w,
                &SummaryRecord {
                    kind: "summary",
                    episode,
                    seed,
                    steps: summary.steps.len(),
                    episode_return: F17(summary.episode_return),
                    r_m_sum: F17(summary.r_m_sum),
                    r_h_sum: F17(summary.r_h_sum),
                },
            )?;
        }
        summaries.push(summary);
    }
    if let Some(w) = out {
        w.flush()?;
    }
    Ok(summaries)
}

#[derive(Debug, Clone)]
pub struct SpectraRun {
    /// `(episode, seed, record)` in the order they were taken.
    pub records: Vec<(usize, u64, SpectrumRecord)>,
    pub histogram: Histogram,
}

/// Runs one episode per seed and analyzes the update matrix every `stride`
/// simulation steps, writing one JSON line per record to `out`.
#[allow(clippy::too_many_arguments)]
pub fn run_spectra<W: Write>(
    config: &EnvConfig,
    policy: &PolicySpec,
    seeds: &[u64],
    stride: usize,
    include_inactive: bool,
    histogram: Histogram,
    mut out: Option<&mut W>,
) -> Result<SpectraRun> {
    if stride == 0 {
        bail!("spectra stride must be >= 1");
    }
    policy.validate(&config.params)?;
    let params = config.params.clone();
    let mut env = Environment::new(config.clone())?;
    let mut run = SpectraRun {
        records: Vec::new(),
        histogram,
    };
    for (episode, &seed) in seeds.iter().enumerate() {
        let mut failure = None;
        let mut taken = Vec::new();
        play_episode(
            &mut env,
            policy,
            seed,
            |t, state| {
                if t % stride != 0 || failure.is_some() {
                    return;
                }
                match analyze_state(t, state, &params, include_inactive) {
                    Ok(rec) => taken.push(rec),
                    Err(e) => failure = Some(e),
                }
            },
            |_, _| Ok(()),
        )?;
        if let Some(e) = failure {
            return Err(e).with_context(|| format!("episode {episode} (seed {seed})"));
        }
        for rec in taken {
            if let Some(w) = out.as_deref_mut() {
                write_line(w, &SpectrumLine::new(episode, seed, &rec))?;
            }
            run.histogram.add_record(&rec);
            run.records.push((episode, seed, rec));
        }
    }
    if let Some(w) = out {
        w.flush()?;
    }
    Ok(run)
}

/// Outcome of [`verify_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerifyReport {
    pub steps: usize,
    pub episodes: usize,
}

fn field_f64(v: &serde_json::Value, key: &str, line: usize) -> Result<f64> {
    v.get(key)
        .and_then(serde_json::Value::as_f64)
        .with_context(|| format!("line {line}: missing number '{key}'"))
}

fn same(a: f64, b: f64) -> bool {
    format_f17(a) == format_f17(b)
}

/// Replays the reward arithmetic of a trajectory file. With `frame_skip = 1`
/// every step's rewards are recomputed from its counts and must match to the
/// printed digit; summaries must equal the sums of their steps.
pub fn verify_trajectory<R: BufRead>(input: R, config: &EnvConfig) -> Result<VerifyReport> {
    let params = &config.params;
    let mut report = VerifyReport::default();
    let (mut ret, mut sum_m, mut sum_h) = (0.0, 0.0, 0.0);
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(&line).with_context(|| format!("line {line_no}"))?;
        match v.get("type").and_then(|t| t.as_str()) {
            Some("step") => {
                let r_m = field_f64(&v, "r_m", line_no)?;
                let r_h = field_f64(&v, "r_h", line_no)?;
                let reward = field_f64(&v, "reward", line_no)?;
                if config.frame_skip == 1 {
                    let counts: Vec<Vec<Vec<u32>>> = serde_json::from_value(v["counts"].clone())
                        .with_context(|| format!("line {line_no}: bad counts"))?;
                    let obs = ObservationTensor::from_nested(&counts)
                        .with_context(|| format!("line {line_no}: counts do not match the grid"))?;
                    if obs.n_grid() != params.n_grid || obs.total() != params.n_part as u64 {
                        bail!("line {line_no}: counts do not match the configured grid and particle number");
                    }
                    if !same(mixing_reward(&obs, params), r_m) {
                        bail!("line {line_no}: r_m does not match the counts");
                    }
                    if !same(homogeneity_reward(&obs, params), r_h) {
                        bail!("line {line_no}: r_h does not match the counts");
                    }
                }
                if !same(combined_reward(r_m, r_h, config.alpha)?, reward) {
                    bail!("line {line_no}: reward is not the alpha blend of r_m and r_h");
                }
                ret += reward;
                sum_m += r_m;
                sum_h += r_h;
                report.steps += 1;
            }
            Some("summary") => {
                let ok = same(field_f64(&v, "return", line_no)?, ret)
                    && same(field_f64(&v, "r_m_sum", line_no)?, sum_m)
                    && same(field_f64(&v, "r_h_sum", line_no)?, sum_h);
                if !ok {
                    bail!("line {line_no}: summary does not match its steps");
                }
                (ret, sum_m, sum_h) = (0.0, 0.0, 0.0);
                report.episodes += 1;
            }
            _ => bail!("line {line_no}: unknown record type"),
        }
    }
    Ok(report)
}
