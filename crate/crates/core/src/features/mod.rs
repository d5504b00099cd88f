//! The feature bank: a fixed catalog of named, costed features and their
//! extraction from 10 s recordings.

pub mod catalog;
mod context;
pub mod io;
pub mod ops;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{catalog, id_of, spec, Detector, Segmenter, CATALOG_SIZE};
use context::Context;

use crate::heart_seg::EmissionArtifact;
use crate::signal_io::{AudioRecording, FilterPhase, TARGET_FS};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("feature file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    AudioSampleEntropy,
    Clipping,
    MeanRateEnergy,
    HeartContamination,
    HighFrequencyVariance,
    Lpc,
    Entropy,
    Periodicity,
    AutocorrKurtosis,
    AutocorrSampleEntropy,
    AutocorrCycleDuration,
    CryPower,
    Power,
    PowerCentroid,
    SvdDependency,
    WaveletEntropy,
    WaveletRmssdZcr,
    WaveletPeakZcr,
    Mfcc,
    FundamentalFrequency,
    EnvelopeSampleEntropy,
    EnvelopeVariance,
    EnvelopeCycleCorrelation,
    EnvelopeRateVariability,
    BadSegmentation,
    SegmentationQuality,
    AbnormalSegmentation,
    AcceptableWindows,
    HsmmQuality,
    EnvelopeStats,
    EnvelopeAutocorr,
    EnvelopeAutocorrSampleEntropy,
    SegmentationVitals,
    PeakRate,
}

impl Family {
    /// Families removed from the real-time set as a whole. Schmidt- and
    /// STFT-envelope-derived features are slow individually.
    pub fn is_slow(self) -> bool {
        matches!(
            self,
            Family::MeanRateEnergy
                | Family::AutocorrSampleEntropy
                | Family::EnvelopeAutocorrSampleEntropy
                | Family::SvdDependency
        )
    }

    /// Value reported when a feature of this family cannot be computed.
    pub fn sentinel(self) -> f64 {
        match self {
            Family::AudioSampleEntropy
            | Family::AutocorrSampleEntropy
            | Family::EnvelopeSampleEntropy
            | Family::EnvelopeAutocorrSampleEntropy => 10.0,
            Family::SegmentationQuality => 100.0,
            Family::BadSegmentation | Family::AbnormalSegmentation => 1.0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Heart,
    Lung,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostClass {
    Fast,
    Slow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub id: u16,
    pub name: String,
    pub family: Family,
    pub target: Target,
    pub cost: CostClass,
    pub params: BTreeMap<String, String>,
    pub sentinel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    Fast,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Mode::Full),
            "fast" => Ok(Mode::Fast),
            other => Err(format!("unknown mode '{other}' (expected full or fast)")),
        }
    }
}

impl Mode {
    pub fn includes(self, spec: &FeatureSpec) -> bool {
        self == Mode::Full || spec.cost == CostClass::Fast
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Computation failed or was non-finite; the family sentinel is stored.
    Sentinel,
    /// Not part of the extraction mode; the family sentinel is stored.
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub recording_id: String,
    pub mode: Mode,
    pub values: Vec<f64>,
    pub status: Vec<Status>,
    /// Wall-clock milliseconds per family.
    pub timings_ms: BTreeMap<Family, f64>,
}

impl FeatureVector {
    pub fn flagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.status.iter().enumerate().filter(|(_, s)| **s == Status::Sentinel).map(|(i, _)| i)
    }

    pub fn total_ms(&self) -> f64 {
        self.timings_ms.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    pub mode: Mode,
    /// Phase of the band filters applied inside extraction.
    pub phase: FilterPhase,
}

impl ExtractConfig {
    pub fn new(mode: Mode) -> Self {
        ExtractConfig { mode, phase: FilterPhase::ZeroPhase }
    }

    /// Fast features with causal filters, as computed by the stream engine.
    pub fn streaming() -> Self {
        ExtractConfig { mode: Mode::Fast, phase: FilterPhase::Causal }
    }
}

/// Bumped whenever a feature definition or id changes.
pub const CATALOG_VERSION: u32 = 1;

/// Shortest accepted input; the breath detector needs 6 s.
pub const MIN_DURATION_S: f64 = 6.0;

pub fn extract(rec: &AudioRecording, mode: Mode) -> Result<FeatureVector, FeatureError> {
    extract_with(rec, &ExtractConfig::new(mode), EmissionArtifact::bundled())
}

/// Computes every feature of `cfg.mode`. Individual failures become flagged
/// sentinels; only invalid input aborts.
pub fn extract_with(
    rec: &AudioRecording,
    cfg: &ExtractConfig,
    artifact: &EmissionArtifact,
) -> Result<FeatureVector, FeatureError> {
    if rec.fs != TARGET_FS {
        return Err(FeatureError::InvalidInput(format!("sample rate {} Hz (expected {TARGET_FS})", rec.fs)));
    }
    if rec.duration() + 1e-9 < MIN_DURATION_S {
        return Err(FeatureError::InvalidInput(format!("{:.2} s recording (need {MIN_DURATION_S} s)", rec.duration())));
    }
    if rec.samples.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::InvalidInput("non-finite samples".into()));
    }
    let ctx = Context::new(&rec.samples, rec.fs as f64, cfg.phase, artifact);
    let entries = catalog::entries();
    let mut values = vec![0.0; entries.len()];
    let mut status = vec![Status::Skipped; entries.len()];
    let mut timings_ms: BTreeMap<Family, f64> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        if !cfg.mode.includes(&e.spec) {
            values[i] = e.spec.sentinel;
            continue;
        }
        let t0 = Instant::now();
        let v = ctx.eval(&e.op);
        *timings_ms.entry(e.spec.family).or_default() += t0.elapsed().as_secs_f64() * 1e3;
        match v {
            Ok(v) if v.is_finite() => {
                values[i] = v;
                status[i] = Status::Ok;
            }
            _ => {
                values[i] = e.spec.sentinel;
                status[i] = Status::Sentinel;
            }
        }
    }
    Ok(FeatureVector { recording_id: rec.recording_id.clone(), mode: cfg.mode, values, status, timings_ms })
}

/// Standalone wall-clock milliseconds of each family: every family is
/// computed on a fresh context so shared intermediates count towards each
/// family that needs them.
pub fn time_families(
    rec: &AudioRecording,
    phase: FilterPhase,
    artifact: &EmissionArtifact,
) -> Result<BTreeMap<Family, f64>, FeatureError> {
    if rec.fs != TARGET_FS {
        return Err(FeatureError::InvalidInput(format!("sample rate {} Hz (expected {TARGET_FS})", rec.fs)));
    }
    let mut by: BTreeMap<Family, Vec<&catalog::Entry>> = BTreeMap::new();
    for e in catalog::entries() {
        by.entry(e.spec.family).or_default().push(e);
    }
    let mut out = BTreeMap::new();
    for (family, entries) in by {
        let t0 = Instant::now();
        let ctx = Context::new(&rec.samples, rec.fs as f64, phase, artifact);
        for e in entries {
            let _ = ctx.eval(&e.op);
        }
        out.insert(family, t0.elapsed().as_secs_f64() * 1e3);
    }
    Ok(out)
}

/// Ids of the fast features, ascending.
pub fn fast_ids() -> Vec<usize> {
    catalog::entries().iter().filter(|e| e.spec.cost == CostClass::Fast).map(|e| e.spec.id as usize).collect()
}
