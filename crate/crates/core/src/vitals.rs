//! Per-second heart and breathing rate from chest sounds, and error analysis
//! against a reference stratified by recording quality.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::fft::hilbert_envelope;
use crate::dsp::stats::block_mean;
use crate::heart_seg::emission::EmissionArtifact;
use crate::heart_seg::springer::{decode, frame_features, SPRINGER_ENVELOPES};
use crate::heart_seg::{breath_peaks, estimate_heart_rate, HeartRateEstimate, SegError, StateSequence, HR_BAND_BPM};
use crate::synth::BR_RANGE;

pub const HR_WINDOW_S: f64 = 3.0;
pub const BR_WINDOW_S: f64 = 6.0;
/// Rate of the Hilbert envelope used for the autocorrelation.
pub const HR_ENV_RATE: f64 = 200.0;
pub const LOW_PERIODICITY: f64 = 0.3;
/// Errors below this many per minute count as acceptable.
pub const ACCEPTABLE_ERROR: f64 = 5.0;

#[derive(Debug, Error)]
pub enum VitalError {
    #[error("{got:.2} s of signal, need {needed:.2} s")]
    TooShort { needed: f64, got: f64 },
    #[error("no overlapping estimates and reference points")]
    EmptyOverlap,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VitalKind {
    Hr,
    Br,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VitalFlag {
    /// In-band autocorrelation peak below 0.3.
    LowPeriodicity,
    /// Segmentation failed; the autocorrelation estimate is reported.
    Fallback,
    /// Fewer than two breaths in the window; the value is a sentinel.
    TooFewPeaks,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalPoint {
    /// End of the analysis window, seconds from the start.
    pub t: f64,
    pub value: f64,
    pub flag: Option<VitalFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalSeries {
    pub kind: VitalKind,
    pub method: String,
    pub window_s: f64,
    pub points: Vec<VitalPoint>,
}

impl VitalSeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn flagged_fraction(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.points.iter().filter(|p| p.flag.is_some()).count() as f64 / self.points.len() as f64
    }

    /// A constant reference sampled once per second over `duration_s`.
    pub fn constant(kind: VitalKind, value: f64, duration_s: f64) -> Self {
        VitalSeries {
            kind,
            method: "reference".into(),
            window_s: 0.0,
            points: (0..=duration_s.floor() as usize).map(|t| VitalPoint { t: t as f64, value, flag: None }).collect(),
        }
    }
}

/// Window ends (whole seconds) for windows of `win_s` inside `n` samples.
fn window_ends(n: usize, fs: f64, win_s: f64) -> Result<Vec<usize>, VitalError> {
    let got = n as f64 / fs;
    if got + 1e-9 < win_s {
        return Err(VitalError::TooShort { needed: win_s, got });
    }
    Ok((win_s.ceil() as usize..=(got + 1e-9).floor() as usize).collect())
}

fn window(x: &[f64], fs: f64, end_s: usize, win_s: f64) -> &[f64] {
    let end = ((end_s as f64 * fs).round() as usize).min(x.len());
    let start = end.saturating_sub((win_s * fs).round() as usize);
    &x[start..end]
}

/// Autocorrelation heart rate of one window from its Hilbert envelope.
pub fn hr_autocorr_window(x: &[f64], fs: f64) -> Result<HeartRateEstimate, SegError> {
    let block = (fs / HR_ENV_RATE).round().max(1.0) as usize;
    let env = block_mean(&hilbert_envelope(x), block);
    estimate_heart_rate(&env, fs / block as f64)
}

/// Segmentation of one window with the rate prior taken from the
/// higher-rate autocorrelation.
fn springer_window(x: &[f64], fs: f64, artifact: &EmissionArtifact) -> Result<StateSequence, SegError> {
    let prior = hr_autocorr_window(x, fs)?;
    let feats = frame_features(x, fs, &SPRINGER_ENVELOPES)?;
    decode(&feats, &artifact.springer, &prior, artifact)
}

/// Autocorrelation heart rate of one heart-band window ending at `t`.
pub fn hr_schmidt_point(w: &[f64], fs: f64, t: f64) -> VitalPoint {
    let (value, flag) = match hr_autocorr_window(w, fs) {
        Ok(e) => (e.hr_bpm, (e.periodicity < LOW_PERIODICITY).then_some(VitalFlag::LowPeriodicity)),
        Err(_) => (HR_BAND_BPM.0, Some(VitalFlag::LowPeriodicity)),
    };
    VitalPoint { t, value, flag }
}

/// Heart rate of one window from the mean S1-to-S1 interval of its
/// segmentation; the autocorrelation estimate, flagged, when fewer than two
/// S1 onsets are decoded.
pub fn hr_springer_point(w: &[f64], fs: f64, t: f64, artifact: &EmissionArtifact) -> VitalPoint {
    let seg = springer_window(w, fs, artifact).ok().and_then(|seq| {
        let onsets = seq.s1_onsets();
        (onsets.len() >= 2).then(|| {
            let span = (onsets[onsets.len() - 1] - onsets[0]) as f64 / seq.rate;
            60.0 * (onsets.len() - 1) as f64 / span
        })
    });
    match seg {
        Some(hr) => VitalPoint { t, value: hr.clamp(HR_BAND_BPM.0, HR_BAND_BPM.1), flag: None },
        None => {
            let value = hr_autocorr_window(w, fs).map(|e| e.hr_bpm).unwrap_or(HR_BAND_BPM.0);
            VitalPoint { t, value, flag: Some(VitalFlag::Fallback) }
        }
    }
}

/// Breathing rate of one lung-band window: `60 (k - 1) / span` over the k
/// breath peaks found.
pub fn br_point(w: &[f64], fs: f64, t: f64) -> VitalPoint {
    let times = breath_peaks(w, fs).map(|p| p.times()).unwrap_or_default();
    if times.len() >= 2 {
        let span = times[times.len() - 1] - times[0];
        let br = 60.0 * (times.len() - 1) as f64 / span;
        VitalPoint { t, value: br.clamp(BR_RANGE.0, BR_RANGE.1), flag: None }
    } else {
        VitalPoint { t, value: BR_RANGE.0, flag: Some(VitalFlag::TooFewPeaks) }
    }
}

fn series(
    x: &[f64],
    fs: f64,
    kind: VitalKind,
    method: &str,
    win_s: f64,
    point: impl Fn(&[f64], f64) -> VitalPoint,
) -> Result<VitalSeries, VitalError> {
    let points = window_ends(x.len(), fs, win_s)?
        .into_iter()
        .map(|end| point(window(x, fs, end, win_s), end as f64))
        .collect();
    Ok(VitalSeries { kind, method: method.into(), window_s: win_s, points })
}

/// Heart rate every second over the trailing 3 s of a heart-band signal.
pub fn hr_schmidt(x: &[f64], fs: f64) -> Result<VitalSeries, VitalError> {
    series(x, fs, VitalKind::Hr, "schmidt", HR_WINDOW_S, |w, t| hr_schmidt_point(w, fs, t))
}

pub fn hr_springer(x: &[f64], fs: f64, artifact: &EmissionArtifact) -> Result<VitalSeries, VitalError> {
    series(x, fs, VitalKind::Hr, "springer", HR_WINDOW_S, |w, t| hr_springer_point(w, fs, t, artifact))
}

/// Breathing rate every second over the trailing 6 s of a lung-band signal.
pub fn br_estimate(x: &[f64], fs: f64) -> Result<VitalSeries, VitalError> {
    series(x, fs, VitalKind::Br, "breath_peaks", BR_WINDOW_S, |w, t| br_point(w, fs, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub n: usize,
    pub mae: Option<f64>,
    pub pct_acceptable: Option<f64>,
}

impl Stratum {
    fn from_errors(e: &[f64]) -> Self {
        if e.is_empty() {
            return Stratum { n: 0, mae: None, pct_acceptable: None };
        }
        let n = e.len() as f64;
        Stratum {
            n: e.len(),
            mae: Some(e.iter().sum::<f64>() / n),
            pct_acceptable: Some(e.iter().filter(|v| **v < ACCEPTABLE_ERROR).count() as f64 / n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalErrorReport {
    pub overall: Stratum,
    /// Quality levels 1..5.
    pub by_quality: [Stratum; 5],
}

impl VitalErrorReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("quality,n,mae,pct_acceptable\n");
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        for (i, st) in self.by_quality.iter().enumerate() {
            s.push_str(&format!("{},{},{},{}\n", i + 1, st.n, fmt(st.mae), fmt(st.pct_acceptable)));
        }
        s.push_str(&format!("all,{},{},{}\n", self.overall.n, fmt(self.overall.mae), fmt(self.overall.pct_acceptable)));
        s
    }
}

/// Absolute errors of `est` against the reference point nearest the centre
/// of each estimate's window (earlier point on ties).
pub fn aligned_errors(est: &VitalSeries, reference: &VitalSeries) -> Vec<f64> {
    if reference.points.is_empty() {
        return Vec::new();
    }
    est.points
        .iter()
        .filter_map(|p| {
            let centre = p.t - est.window_s / 2.0;
            let r = reference.points.iter().min_by(|a, b| (a.t - centre).abs().total_cmp(&(b.t - centre).abs()))?;
            ((r.t - centre).abs() <= 1.0).then(|| (p.value - r.value).abs())
        })
        .collect()
}

/// MAE and share of errors under 5 per minute, overall and per quality
/// level, over `(estimate, reference, quality)` triples.
pub fn vital_error(items: &[(VitalSeries, VitalSeries, u8)]) -> Result<VitalErrorReport, VitalError> {
    let mut per: [Vec<f64>; 5] = Default::default();
    let mut all = Vec::new();
    for (est, reference, q) in items {
        if !(1..=5).contains(q) {
            return Err(VitalError::InvalidInput(format!("quality {q} outside 1..5")));
        }
        let e = aligned_errors(est, reference);
        per[*q as usize - 1].extend_from_slice(&e);
        all.extend(e);
    }
    if all.is_empty() {
        return Err(VitalError::EmptyOverlap);
    }
    Ok(VitalErrorReport {
        overall: Stratum::from_errors(&all),
        by_quality: std::array::from_fn(|i| Stratum::from_errors(&per[i])),
    })
}

/// Reads `t_seconds,hr_bpm,br_bpm`; empty cells are skipped.
pub fn read_reference(path: &Path) -> Result<(VitalSeries, VitalSeries), VitalError> {
    #[derive(Deserialize)]
    struct Row {
        t_seconds: f64,
        hr_bpm: Option<f64>,
        br_bpm: Option<f64>,
    }
    let mut hr = VitalSeries { kind: VitalKind::Hr, method: "reference".into(), window_s: 0.0, points: Vec::new() };
    let mut br = VitalSeries { kind: VitalKind::Br, method: "reference".into(), window_s: 0.0, points: Vec::new() };
    for row in csv::Reader::from_path(path)?.deserialize() {
        let r: Row = row?;
        if let Some(v) = r.hr_bpm {
            hr.points.push(VitalPoint { t: r.t_seconds, value: v, flag: None });
        }
        if let Some(v) = r.br_bpm {
            br.points.push(VitalPoint { t: r.t_seconds, value: v, flag: None });
        }
    }
    Ok((hr, br))
}
