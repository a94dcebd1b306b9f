//! Line-delimited JSON records. Floats are written with 17 significant
//! digits so transcripts round-trip bit for bit; non-finite values become `null`.

use std::io::{self, Write};

use mixing_core::{ObservationTensor, SpectrumRecord, StepResult};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Float serialized as `{:.16e}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F17(pub f64);

pub fn format_f17(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format_f17(self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(serializer)
        } else {
            serializer.serialize_none()
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StepRecord {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub episode: usize,
    pub seed: u64,
    pub t: usize,
    pub action: Vec<u8>,
    pub counts: Vec<Vec<Vec<u32>>>,
    pub r_m: F17,
    pub r_h: F17,
    pub reward: F17,
}

impl StepRecord {
    pub fn new(episode: usize, seed: u64, action: Vec<u8>, step: &StepResult) -> Self {
        Self {
            kind: "step",
            episode,
            seed,
            t: step.t,
            action,
            counts: step.observation.to_nested(),
            r_m: F17(step.r_m),
            r_h: F17(step.r_h),
            reward: F17(step.reward),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SummaryRecord {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub episode: usize,
    pub seed: u64,
    pub steps: usize,
    #[serde(rename = "return")]
    pub episode_return: F17,
    pub r_m_sum: F17,
    pub r_h_sum: F17,
}

#[derive(Debug, Serialize)]
pub struct SpectrumLine {
    pub episode: usize,
    pub seed: u64,
    pub t: usize,
    #[serde(rename = "Na")]
    pub na: usize,
    pub n_attractive: usize,
    pub n_repulsive: usize,
    pub eigenvalues: Vec<F17>,
    pub gershgorin_lo: Option<F17>,
    pub gershgorin_hi: Option<F17>,
    pub log_det: Option<F17>,
}

impl SpectrumLine {
    pub fn new(episode: usize, seed: u64, rec: &SpectrumRecord) -> Self {
        Self {
            episode,
            seed,
            t: rec.t,
            na: rec.size(),
            n_attractive: rec.n_attractive,
            n_repulsive: rec.n_repulsive,
            eigenvalues: rec.eigenvalues.iter().map(|&v| F17(v)).collect(),
            gershgorin_lo: rec.gershgorin.map(|(lo, _)| F17(lo)),
            gershgorin_hi: rec.gershgorin.map(|(_, hi)| F17(hi)),
            log_det: rec.log_det.map(F17),
        }
    }
}

/// Observation payload used by the protocol responses.
#[derive(Debug, Serialize)]
pub struct ObsPayload {
    pub obs: Vec<Vec<Vec<u32>>>,
    pub t: usize,
}

impl ObsPayload {
    pub fn new(obs: &ObservationTensor, t: usize) -> Self {
        Self {
            obs: obs.to_nested(),
            t,
        }
    }
}

pub fn write_line<W: Write, T: Serialize>(out: &mut W, record: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [-0.011458333333333333, 0.1 + 0.2, 1e-300, -0.0, 12345.678] {
            let s = format_f17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let v: serde_json::Value = serde_json::from_str(&s).unwrap();
            assert_eq!(v.as_f64().unwrap(), x);
        }
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(serde_json::to_string(&F17(f64::NAN)).unwrap(), "null");
        assert_eq!(serde_json::to_string(&F17(-0.01)).unwrap(), "-1.0000000000000000e-2");
    }
}
