//! Heart-sound state segmentation, heart-peak detectors and breath-peak
//! detection.

pub mod emission;
pub mod hsmm;
pub mod peaks;
pub mod schmidt;
pub mod springer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::autocorr::autocorr_centered;
use crate::dsp::DspError;

pub use emission::EmissionArtifact;
pub use peaks::{breath_peaks, gieraltowski_peaks, gieraltowski_trace, liang_peaks, PeakKind, PeakList};
pub use schmidt::schmidt_segment;
pub use springer::{springer_segment, springer_segment_envelopes};

#[derive(Debug, Error)]
pub enum SegError {
    #[error("signal too short: need {needed:.2} s, got {got:.2} s")]
    TooShort { needed: f64, got: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("emission model artifact missing: {0}")]
    MissingArtifact(String),
    #[error("emission model artifact invalid: {0}")]
    InvalidArtifact(String),
    #[error("decoding failed: {0}")]
    DecodeFailed(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum State {
    S1,
    Systole,
    S2,
    Diastole,
}

impl State {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> State {
        match i % 4 {
            0 => State::S1,
            1 => State::Systole,
            2 => State::S2,
            _ => State::Diastole,
        }
    }

    pub fn next(self) -> State {
        State::from_index(self.index() + 1)
    }
}

/// A maximal run of one state, frames `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub state: State,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    pub labels: Vec<State>,
    pub rate: f64,
    /// Per-frame state posteriors, when the decoder computed them.
    pub posterior: Option<Vec<[f64; 4]>>,
}

impl StateSequence {
    pub fn segments(&self) -> Vec<Segment> {
        let mut out: Vec<Segment> = Vec::new();
        for (i, &s) in self.labels.iter().enumerate() {
            match out.last_mut() {
                Some(seg) if seg.state == s => seg.end = i + 1,
                _ => out.push(Segment { state: s, start: i, end: i + 1 }),
            }
        }
        out
    }

    /// Segments not cut by the recording edges.
    pub fn complete_segments(&self) -> Vec<Segment> {
        let n = self.labels.len();
        self.segments().into_iter().filter(|s| s.start > 0 && s.end < n).collect()
    }

    /// Frame indices where a complete S1 begins.
    pub fn s1_onsets(&self) -> Vec<usize> {
        self.segments().iter().filter(|s| s.state == State::S1 && s.start > 0).map(|s| s.start).collect()
    }

    /// Successive S1-onset intervals in seconds.
    pub fn s1_intervals(&self) -> Vec<f64> {
        self.s1_onsets().windows(2).map(|w| (w[1] - w[0]) as f64 / self.rate).collect()
    }

    /// Centers of all S1 and S2 segments, in frames.
    pub fn sound_centers(&self) -> Vec<f64> {
        self.segments()
            .iter()
            .filter(|s| matches!(s.state, State::S1 | State::S2))
            .map(|s| (s.start + s.end - 1) as f64 / 2.0)
            .collect()
    }

    /// Mean over frames of the largest state posterior.
    pub fn mean_max_posterior(&self) -> Option<f64> {
        let p = self.posterior.as_ref()?;
        if p.is_empty() {
            return None;
        }
        Some(p.iter().map(|r| r.iter().cloned().fold(0.0, f64::max)).sum::<f64>() / p.len() as f64)
    }

    pub fn is_legal(&self) -> bool {
        self.labels.windows(2).all(|w| w[1] == w[0] || w[1] == w[0].next())
    }
}

pub const HR_BAND_BPM: (f64, f64) = (70.0, 220.0);

/// Heart rate and systolic interval from an envelope's autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeartRateEstimate {
    pub hr_bpm: f64,
    /// S1 onset to S2 onset, seconds.
    pub systolic_s: f64,
    /// Autocorrelation at the cycle lag, floored at 0.
    pub periodicity: f64,
}

/// Heart rate from the in-band autocorrelation peak of a frame-rate envelope,
/// and systolic interval from the largest peak between 0.1 s and half a cycle.
pub fn estimate_heart_rate(env: &[f64], rate: f64) -> Result<HeartRateEstimate, SegError> {
    let needed = 60.0 / HR_BAND_BPM.0;
    let got = env.len() as f64 / rate;
    if got < needed * 1.5 {
        return Err(SegError::TooShort { needed: needed * 1.5, got });
    }
    let ac = autocorr_centered(env, rate, None);
    let (lag, val) = ac
        .local_peak_in(60.0 / HR_BAND_BPM.1, 60.0 / HR_BAND_BPM.0)
        .or_else(|| ac.peak_in(60.0 / HR_BAND_BPM.1, 60.0 / HR_BAND_BPM.0))
        .ok_or_else(|| SegError::DecodeFailed("no autocorrelation peak in band".into()))?;
    let hr = (60.0 / lag).clamp(HR_BAND_BPM.0, HR_BAND_BPM.1);
    let cycle = 60.0 / hr;
    let systolic = ac
        .local_peak_in(0.1, cycle / 2.0)
        .map(|(l, _)| l)
        .unwrap_or(0.4 * cycle)
        .min(cycle / 2.0);
    Ok(HeartRateEstimate { hr_bpm: hr, systolic_s: systolic, periodicity: val.max(0.0) })
}

/// Duration constants (seconds) for the heart-state model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationParams {
    pub s1_mean: f64,
    pub s1_sd: f64,
    pub s2_mean: f64,
    pub s2_sd: f64,
    pub systole_sd: f64,
    /// Diastole sd = frac * mean + offset.
    pub diastole_sd_frac: f64,
    pub diastole_sd_offset: f64,
}

impl Default for DurationParams {
    fn default() -> Self {
        DurationParams {
            s1_mean: 0.122,
            s1_sd: 0.022,
            s2_mean: 0.092,
            s2_sd: 0.022,
            systole_sd: 0.025,
            diastole_sd_frac: 0.07,
            diastole_sd_offset: 0.006,
        }
    }
}

impl DurationParams {
    /// Duration model for a heart rate and systolic interval at `rate` frames/s.
    pub fn model(&self, hr_bpm: f64, systolic_s: f64, rate: f64) -> hsmm::DurationModel {
        let cycle = 60.0 / hr_bpm;
        let sys = (systolic_s - self.s1_mean).max(1.0 / rate);
        let dia = (cycle - systolic_s - self.s2_mean).max(1.0 / rate);
        let dia_sd = self.diastole_sd_frac * dia + self.diastole_sd_offset;
        hsmm::DurationModel::gaussian(
            [self.s1_mean * rate, sys * rate, self.s2_mean * rate, dia * rate],
            [self.s1_sd * rate, self.systole_sd * rate, self.s2_sd * rate, dia_sd * rate],
        )
    }
}

/// Zero-mean unit-variance copy; constant input maps to zeros.
pub fn zscore(x: &[f64]) -> Vec<f64> {
    let m = crate::dsp::stats::mean(x);
    let sd = crate::dsp::stats::std_dev(x);
    if sd > 0.0 {
        x.iter().map(|v| (v - m) / sd).collect()
    } else {
        vec![0.0; x.len()]
    }
}
