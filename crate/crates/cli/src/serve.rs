//! Line-oriented JSON protocol for driving one environment from another process.
//!
//! Requests, one per line:
//!
//! ```text
//! {"cmd": "reset", "seed": 3}
//! {"cmd": "step", "action": [0, 1, 2, ...]}
//! {"cmd": "spec"}
//! {"cmd": "close"}
//! ```
//!
//! Every request gets exactly one response line. Failures answer
//! `{"error": code, "message": ...}` and leave the session usable.

use std::io::{BufRead, Write};

use anyhow::Result;
use mixing_core::{ActionGrid, EnvConfig, Environment, Error as CoreError};
use serde::Serialize;
use serde_json::{json, Value};

use crate::records::{ObsPayload, F17};

#[derive(Debug, Serialize)]
struct StepResponse {
    obs: Vec<Vec<Vec<u32>>>,
    reward: F17,
    reward_parts: [F17; 2],
    done: bool,
    t: usize,
}

#[derive(Debug, Serialize)]
struct SpecResponse {
    n_part: usize,
    n_grid: usize,
    n_steps: usize,
    frame_skip: usize,
    obs_shape: [usize; 3],
    action_shape: [usize; 1],
    action_values: [u8; 3],
    interaction_set: &'static str,
    alpha: F17,
    default_seed: u64,
}

struct Failure {
    code: &'static str,
    message: String,
}

impl Failure {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::NotReset => "not_reset",
            CoreError::EpisodeFinished(_) => "episode_finished",
            _ => "invalid_action",
        };
        Failure::new(code, e.to_string())
    }
}

pub struct Session {
    env: Environment,
    default_seed: u64,
}

/// One rendered response line, and whether the session ends after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub line: String,
    pub close: bool,
}

impl Session {
    pub fn new(config: EnvConfig, default_seed: u64) -> Result<Self> {
        Ok(Self {
            env: Environment::new(config)?,
            default_seed,
        })
    }

    /// Handles one request line.
    pub fn handle(&mut self, line: &str) -> Reply {
        let (outcome, close) = self.dispatch(line);
        Reply {
            line: outcome.unwrap_or_else(|f| render(&json!({"error": f.code, "message": f.message}))),
            close,
        }
    }

    fn dispatch(&mut self, line: &str) -> (std::result::Result<String, Failure>, bool) {
        let request: Value = match serde_json::from_str(line) {
            Ok(v @ Value::Object(_)) => v,
            Ok(_) => return (Err(Failure::new("malformed", "request must be a JSON object")), false),
            Err(e) => return (Err(Failure::new("malformed", e.to_string())), false),
        };
        let outcome = match request.get("cmd") {
            Some(Value::String(c)) => match c.as_str() {
                "reset" => self.reset(&request),
                "step" => self.step(&request),
                "spec" => Ok(self.spec()),
                "close" => return (Ok(render(&json!({"closed": true}))), true),
                other => Err(Failure::new("unknown_cmd", format!("unknown command '{other}'"))),
            },
            _ => Err(Failure::new("malformed", "missing string field 'cmd'")),
        };
        (outcome, false)
    }

    fn reset(&mut self, request: &Value) -> std::result::Result<String, Failure> {
        let seed = match request.get("seed") {
            None | Some(Value::Null) => self.default_seed,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| Failure::new("malformed", "'seed' must be a non-negative integer"))?,
        };
        let obs = self.env.reset(seed);
        Ok(render(&ObsPayload::new(&obs, 0)))
    }

    fn step(&mut self, request: &Value) -> std::result::Result<String, Failure> {
        let digits: Vec<u8> = match request.get("action") {
            Some(Value::Array(items)) => items
                .iter()
                .map(|d| {
                    d.as_u64()
                        .filter(|&d| d <= u8::MAX as u64)
                        .map(|d| d as u8)
                        .ok_or_else(|| Failure::new("invalid_action", format!("bad action digit {d}")))
                })
                .collect::<std::result::Result<_, _>>()?,
            _ => return Err(Failure::new("malformed", "missing array field 'action'")),
        };
        if !self.env.is_reset() {
            return Err(CoreError::NotReset.into());
        }
        let action = ActionGrid::from_digits(self.env.params().n_grid, &digits)
            .map_err(|e| Failure::new("invalid_action", e.to_string()))?;
        let r = self.env.step(&action)?;
        Ok(render(&StepResponse {
            obs: r.observation.to_nested(),
            reward: F17(r.reward),
            reward_parts: [F17(r.r_m), F17(r.r_h)],
            done: r.done,
            t: r.t,
        }))
    }

    fn spec(&self) -> String {
        let cfg = self.env.config();
        let p = &cfg.params;
        render(&SpecResponse {
            n_part: p.n_part,
            n_grid: p.n_grid,
            n_steps: p.n_steps,
            frame_skip: cfg.frame_skip,
            obs_shape: [2, p.n_grid, p.n_grid],
            action_shape: [p.n_cells()],
            action_values: [0, 1, 2],
            interaction_set: p.interaction_set.as_str(),
            alpha: F17(cfg.alpha),
            default_seed: self.default_seed,
        })
    }
}

fn render<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("responses serialize")
}

/// Serves requests from `input` until `close` or end of input.
pub fn serve<R: BufRead, W: Write>(config: EnvConfig, default_seed: u64, input: R, mut out: W) -> Result<()> {
    let mut session = Session::new(config, default_seed)?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = session.handle(&line);
        writeln!(out, "{}", reply.line)?;
        out.flush()?;
        if reply.close {
            break;
        }
    }
    Ok(())
}
