//! Duration-dependent HMM segmentation with discriminative emissions over
//! several heart envelopes.

use super::emission::{EmissionArtifact, SoftmaxEmission};
use super::hsmm::{posteriors, viterbi};
use super::{estimate_heart_rate, zscore, HeartRateEstimate, SegError, StateSequence};
use crate::dsp::envelope::{compute_envelope, EnvelopeKind, FRAME_RATE};

pub const SPRINGER_ENVELOPES: [EnvelopeKind; 4] = [
    EnvelopeKind::Homomorphic,
    EnvelopeKind::Hilbert,
    EnvelopeKind::WaveletDetailRbio39L3,
    EnvelopeKind::BandPower40To60,
];

/// Z-scored frame-rate tracks of `kinds`, trimmed to a common length.
pub fn frame_features(x: &[f64], fs: f64, kinds: &[EnvelopeKind]) -> Result<Vec<Vec<f64>>, SegError> {
    let mut out = Vec::with_capacity(kinds.len());
    for &k in kinds {
        out.push(compute_envelope(x, fs, k)?.at_frame_rate().values);
    }
    let n = out.iter().map(Vec::len).min().unwrap_or(0);
    Ok(out.into_iter().map(|mut v| {
        v.truncate(n);
        zscore(&v)
    }).collect())
}

/// Decodes precomputed feature tracks with `model` and a heart-rate estimate.
pub fn decode(
    features: &[Vec<f64>],
    model: &SoftmaxEmission,
    hr: &HeartRateEstimate,
    artifact: &EmissionArtifact,
) -> Result<StateSequence, SegError> {
    if features.len() != model.envelopes.len() {
        return Err(SegError::InvalidParameter(format!(
            "{} feature tracks for a {}-envelope model",
            features.len(),
            model.envelopes.len()
        )));
    }
    let rate = artifact.frame_rate;
    let log_b = model.log_emissions(features);
    let dur = artifact.durations.model(hr.hr_bpm, hr.systolic_s, rate);
    let (labels, _) = viterbi(&log_b, &dur).ok_or_else(|| SegError::DecodeFailed("no admissible path".into()))?;
    let post = posteriors(&log_b, &dur).ok_or_else(|| SegError::DecodeFailed("zero likelihood".into()))?;
    Ok(StateSequence { labels, rate, posterior: Some(post) })
}

fn check(x: &[f64], fs: f64) -> Result<(), SegError> {
    // at least three cycles at the slowest admissible rate
    let needed = 3.0 * 60.0 / super::HR_BAND_BPM.0;
    let got = x.len() as f64 / fs;
    if got < needed {
        return Err(SegError::TooShort { needed, got });
    }
    Ok(())
}

/// Segments a heart-band signal with the joint four-envelope model. The heart
/// rate comes from the homomorphic envelope autocorrelation.
pub fn springer_segment(x: &[f64], fs: f64, artifact: &EmissionArtifact) -> Result<StateSequence, SegError> {
    check(x, fs)?;
    let feats = frame_features(x, fs, &SPRINGER_ENVELOPES)?;
    let hr = estimate_heart_rate(&feats[0], FRAME_RATE)?;
    decode(&feats, &artifact.springer, &hr, artifact)
}

/// Segments with the single-envelope model of `kind`.
pub fn springer_segment_envelopes(
    x: &[f64],
    fs: f64,
    kind: EnvelopeKind,
    artifact: &EmissionArtifact,
) -> Result<StateSequence, SegError> {
    check(x, fs)?;
    let model = artifact
        .per_envelope(kind)
        .ok_or_else(|| SegError::InvalidArtifact(format!("no model for envelope {}", kind.name())))?;
    let feats = frame_features(x, fs, &[EnvelopeKind::Homomorphic, kind])?;
    let hr = estimate_heart_rate(&feats[0], FRAME_RATE)?;
    decode(&feats[1..], model, &hr, artifact)
}
