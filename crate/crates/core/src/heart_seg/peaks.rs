//! Heart-peak and breath-peak detectors. Every detector returns sample
//! indices of the input signal.

use serde::{Deserialize, Serialize};

use super::{zscore, SegError};
use crate::dsp::envelope::{compute_envelope, moving_average, EnvelopeKind, FRAME_RATE};
use crate::dsp::filter::{butterworth, BandSpec};
use crate::dsp::resample::resample;
use crate::dsp::wavelet::{wavelet_decompose, Wavelet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakKind {
    Heart,
    S1,
    S2,
    Inspiration,
    Expiration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakList {
    /// Strictly increasing sample indices.
    pub indices: Vec<usize>,
    pub fs: f64,
    pub kind: PeakKind,
}

impl PeakList {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.indices.iter().map(|&i| i as f64 / self.fs).collect()
    }

    /// Number of peaks with time in `[t0, t1)`.
    pub fn count_in(&self, t0: f64, t1: f64) -> usize {
        let lo = (t0 * self.fs).ceil().max(0.0) as usize;
        let hi = (t1 * self.fs).ceil().max(0.0) as usize;
        self.indices.iter().filter(|&&i| i >= lo && i < hi).count()
    }
}

pub const GIERALTOWSKI_MIN_S: f64 = 2.2;
const GIERALTOWSKI_FS: u32 = 1000;
const GIERALTOWSKI_HP_HZ: f64 = 20.0;
const GIERALTOWSKI_THRESHOLD: f64 = 0.3;
const HEART_MIN_GAP_S: f64 = 0.25;
const LIANG_MIN_GAP_S: f64 = 0.1;
const LIANG_Z_THRESHOLD: f64 = 0.5;
pub const BREATH_MIN_S: f64 = 6.0;
pub const BREATH_MIN_GAP_S: f64 = 60.0 / 80.0;
const BREATH_SMOOTH_S: f64 = 0.4;
const BREATH_REL_HEIGHT: f64 = 0.2;
const BREATH_REL_PROMINENCE: f64 = 0.5;

/// Interior local maxima of `v` above `threshold`, thinned greedily by value
/// so that kept maxima are at least `gap` indices apart. Ascending order.
pub(crate) fn pick_peaks(v: &[f64], threshold: f64, gap: usize) -> Vec<usize> {
    let mut cand: Vec<usize> = (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > threshold && v[i] >= v[i - 1] && v[i] > v[i + 1])
        .collect();
    cand.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in cand {
        if kept.iter().all(|&k| k.abs_diff(c) >= gap) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// Climbs from `center` to an index that holds the largest `score` within
/// `± half` of itself, so nearby starting points settle on the same sample.
fn refine(score: &[f64], center: f64, half: usize) -> usize {
    let mut c = (center.round().max(0.0) as usize).min(score.len() - 1);
    for _ in 0..16 {
        let lo = c.saturating_sub(half);
        let hi = (c + half + 1).min(score.len());
        let mut best = c;
        for i in lo..hi {
            if score[i] > score[best] {
                best = i;
            }
        }
        if best == c {
            break;
        }
        c = best;
    }
    c
}

fn dedup_sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

fn check_len(x: &[f64], fs: f64, min_s: f64) -> Result<(), SegError> {
    let got = x.len() as f64 / fs;
    if got + 1e-9 < min_s {
        return Err(SegError::TooShort { needed: min_s, got });
    }
    Ok(())
}

/// Normalized detection envelope of the Gieraltowski detector (500 Hz, max 1)
/// and the envelope indices of its peaks.
#[derive(Debug, Clone, PartialEq)]
pub struct GieraltowskiTrace {
    pub envelope: Vec<f64>,
    pub rate: f64,
    pub peaks: Vec<usize>,
}

/// Detection stage of [`gieraltowski_peaks`]: the level-1 db2 approximation
/// of the signal resampled to 1 kHz and highpassed at 20 Hz, rectified,
/// smoothed over 20 ms and scaled to unit maximum. `None` for silent input.
pub fn gieraltowski_trace(x: &[f64], fs: f64) -> Result<Option<GieraltowskiTrace>, SegError> {
    check_len(x, fs, GIERALTOWSKI_MIN_S)?;
    if x.iter().all(|v| *v == 0.0) {
        return Ok(None);
    }
    let y = resample(x, fs.round() as u32, GIERALTOWSKI_FS)?;
    let hp = butterworth(2, BandSpec::Highpass(GIERALTOWSKI_HP_HZ), GIERALTOWSKI_FS as f64)?;
    let y = hp.filtfilt(&y);
    let approx = wavelet_decompose(&y, Wavelet::Db2, 1)?.approx;
    let rate = GIERALTOWSKI_FS as f64 / 2.0;
    let mag: Vec<f64> = approx.iter().map(|v| v.abs()).collect();
    let mut env = moving_average(&mag, (0.02 * rate).round() as usize);
    let peak = env.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok(None);
    }
    env.iter_mut().for_each(|v| *v /= peak);
    let gap = (HEART_MIN_GAP_S * rate).round() as usize;
    let peaks = pick_peaks(&env, GIERALTOWSKI_THRESHOLD, gap);
    Ok(Some(GieraltowskiTrace { envelope: env, rate, peaks }))
}

/// Heart peaks from [`gieraltowski_trace`], moved onto the largest input
/// magnitude nearby.
pub fn gieraltowski_peaks(x: &[f64], fs: f64) -> Result<PeakList, SegError> {
    let Some(trace) = gieraltowski_trace(x, fs)? else {
        return Ok(PeakList { indices: Vec::new(), fs, kind: PeakKind::Heart });
    };
    let score: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let scale = fs / trace.rate;
    let half = (0.05 * fs).round() as usize;
    let indices = dedup_sorted(trace.peaks.iter().map(|&k| refine(&score, k as f64 * scale, half)).collect());
    Ok(PeakList { indices, fs, kind: PeakKind::Heart })
}

/// S1 and S2 peaks by thresholding the standardized Shannon-energy envelope.
pub fn liang_peaks(x: &[f64], fs: f64) -> Result<PeakList, SegError> {
    check_len(x, fs, 2.0 / FRAME_RATE)?;
    let fine = compute_envelope(x, fs, EnvelopeKind::ShannonEnergy)?;
    let frames = fine.at_frame_rate();
    let z = zscore(&frames.values);
    let gap = (LIANG_MIN_GAP_S * FRAME_RATE).round() as usize;
    let coarse = pick_peaks(&z, LIANG_Z_THRESHOLD, gap);
    let block = fs / FRAME_RATE;
    let half = (0.025 * fs).round() as usize;
    let indices = dedup_sorted(
        coarse
            .iter()
            .map(|&t| refine(&fine.values, (t as f64 + 0.5) * block, half))
            .collect(),
    );
    Ok(PeakList { indices, fs, kind: PeakKind::Heart })
}

/// Inspiration peaks of the smoothed 300-450 Hz power envelope. Maxima must
/// reach a fifth of the largest and stand out from their surroundings by at
/// least half their own height.
pub fn breath_peaks(x: &[f64], fs: f64) -> Result<PeakList, SegError> {
    check_len(x, fs, BREATH_MIN_S)?;
    let env = compute_envelope(x, fs, EnvelopeKind::Psd300To450)?;
    let smooth = moving_average(&env.values, (BREATH_SMOOTH_S * env.rate).round() as usize);
    let top = smooth.iter().cloned().fold(0.0, f64::max);
    let empty = PeakList { indices: Vec::new(), fs, kind: PeakKind::Inspiration };
    if top <= 0.0 {
        return Ok(empty);
    }
    let gap = (BREATH_MIN_GAP_S * env.rate).ceil() as usize;
    let kept: Vec<usize> = pick_peaks(&smooth, BREATH_REL_HEIGHT * top, gap)
        .into_iter()
        .filter(|&i| prominence(&smooth, i) >= BREATH_REL_PROMINENCE * smooth[i])
        .collect();
    let indices = dedup_sorted(
        kept.iter()
            .map(|&i| {
                let (a, b, c) = (smooth[i - 1], smooth[i], smooth[i + 1]);
                let denom = a - 2.0 * b + c;
                let shift = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
                // frame t is centred on sample t * fs / rate
                (((i as f64 + shift) * fs / env.rate).round().max(0.0) as usize).min(x.len() - 1)
            })
            .collect(),
    );
    Ok(PeakList { indices, fs, kind: PeakKind::Inspiration })
}

/// Height of `v[i]` above the higher of the two minima reached before the
/// signal climbs above `v[i]` again (or the sequence ends).
pub(crate) fn prominence(v: &[f64], i: usize) -> f64 {
    let mut left = v[i];
    for j in (0..i).rev() {
        if v[j] > v[i] {
            break;
        }
        left = left.min(v[j]);
    }
    let mut right = v[i];
    for &u in &v[i + 1..] {
        if u > v[i] {
            break;
        }
        right = right.min(u);
    }
    v[i] - left.max(right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_io::{filter_samples, FilterPhase, SoundTarget};
    use crate::synth::{mix, synth_heart_clean, synth_noise, NoiseKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FS: f64 = 4000.0;

    fn impulse_train(rate_hz: f64, secs: f64, offset_s: f64) -> Vec<f64> {
        let n = (secs * FS) as usize;
        let mut x = vec![0.0; n];
        let mut t = offset_s;
        while t < secs {
            x[(t * FS) as usize] = 1.0;
            t += 1.0 / rate_hz;
        }
        x
    }

    #[test]
    fn pick_peaks_respects_gap() {
        let v = [0.0, 1.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.8, 0.0];
        assert_eq!(pick_peaks(&v, 0.1, 3), vec![1, 7]);
        assert_eq!(pick_peaks(&v, 0.1, 1), vec![1, 3, 7]);
    }

    #[test]
    fn prominence_of_isolated_and_shoulder() {
        let v = [0.0, 2.0, 1.5, 1.8, 0.0];
        assert_eq!(prominence(&v, 1), 2.0);
        assert!((prominence(&v, 3) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn gieraltowski_counts_impulses() {
        let x = impulse_train(2.0, 10.0, 0.13);
        let p = gieraltowski_peaks(&x, FS).unwrap();
        assert!((p.len() as i64 - 20).abs() <= 1, "{}", p.len());
        assert!(p.indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn gieraltowski_silence_and_short() {
        assert!(gieraltowski_peaks(&vec![0.0; 40000], FS).unwrap().is_empty());
        assert!(matches!(gieraltowski_peaks(&vec![0.0; 8000], FS), Err(SegError::TooShort { .. })));
    }

    #[test]
    fn gieraltowski_tolerates_low_noise() {
        let clean = impulse_train(2.0, 10.0, 0.13);
        let noise = synth_noise(NoiseKind::White, clean.len(), 5);
        let noisy = mix(&clean, &noise, 20.0).unwrap();
        let a = gieraltowski_peaks(&clean, FS).unwrap().len() as i64;
        let b = gieraltowski_peaks(&noisy, FS).unwrap().len() as i64;
        assert!((a - b).abs() <= 1, "{a} vs {b}");
    }

    #[test]
    fn liang_finds_both_sounds() {
        let (x, _) = synth_heart_clean(120.0, 10.0, 3);
        let band = filter_samples(&x, SoundTarget::Heart, FilterPhase::ZeroPhase).unwrap();
        let p = liang_peaks(&band, FS).unwrap();
        assert!((p.len() as i64 - 40).abs() <= 2, "{}", p.len());
    }

    #[test]
    fn liang_single_burst_and_silence() {
        let mut x = vec![0.0; 40000];
        for (i, v) in x[20000..20400].iter_mut().enumerate() {
            let t = i as f64 / FS;
            *v = (2.0 * std::f64::consts::PI * 80.0 * t).sin() * (std::f64::consts::PI * i as f64 / 400.0).sin();
        }
        assert_eq!(liang_peaks(&x, FS).unwrap().len(), 1);
        assert!(liang_peaks(&vec![0.0; 40000], FS).unwrap().is_empty());
    }

    fn breath_bursts(per_min: f64, secs: f64, seed: u64) -> Vec<f64> {
        let noise = synth_noise(NoiseKind::White, (secs * FS) as usize, seed);
        let sos = butterworth(4, BandSpec::Bandpass(300.0, 450.0), FS).unwrap();
        let band = sos.filtfilt(&noise);
        let period = 60.0 / per_min;
        band.iter()
            .enumerate()
            .map(|(i, v)| {
                let ph = (i as f64 / FS / period).fract();
                v * (std::f64::consts::PI * ph).sin().powi(2)
            })
            .collect()
    }

    #[test]
    fn breath_counts_bursts() {
        let x = breath_bursts(40.0, 12.0, 9);
        let p = breath_peaks(&x, FS).unwrap();
        assert!((p.len() as i64 - 8).abs() <= 1, "{}", p.len());
    }

    #[test]
    fn breath_silence_and_short() {
        assert!(breath_peaks(&vec![0.0; 48000], FS).unwrap().is_empty());
        assert!(breath_peaks(&vec![0.0; 20000], FS).is_err());
    }

    #[test]
    fn breath_unmodulated_noise_is_sparse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..48000).map(|_| rng.gen::<f64>() - 0.5).collect();
        let p = breath_peaks(&x, FS).unwrap();
        // far fewer than a 40/min modulated input would give
        assert!(p.len() <= 4, "{}", p.len());
    }

    fn delayed(x: &[f64], d: usize) -> Vec<f64> {
        let mut y = vec![0.0; d];
        y.extend_from_slice(x);
        y
    }

    /// Peaks of `b` equal peaks of `a` moved by `d`, away from both edges.
    fn assert_shifted(a: &[usize], b: &[usize], d: usize, n: usize) {
        let margin = (0.25 * FS) as usize;
        let inner = |i: &usize| *i >= d + margin && *i + margin < n + d;
        let moved: Vec<usize> = a.iter().map(|i| i + d).filter(inner).collect();
        let got: Vec<usize> = b.iter().cloned().filter(inner).collect();
        assert_eq!(moved.len(), got.len(), "{moved:?} vs {got:?}");
        for (u, v) in moved.iter().zip(&got) {
            assert!(u.abs_diff(*v) <= 2, "{u} vs {v}");
        }
    }

    #[test]
    fn heart_detectors_are_shift_equivariant() {
        let (x, _) = synth_heart_clean(110.0, 10.0, 8);
        let band = filter_samples(&x, SoundTarget::Heart, FilterPhase::ZeroPhase).unwrap();
        for d in [1usize, 37, 1234, 3999] {
            let y = delayed(&band, d);
            let (a, b) = (gieraltowski_peaks(&band, FS).unwrap(), gieraltowski_peaks(&y, FS).unwrap());
            assert_shifted(&a.indices, &b.indices, d, band.len());
            let (a, b) = (liang_peaks(&band, FS).unwrap(), liang_peaks(&y, FS).unwrap());
            assert_shifted(&a.indices, &b.indices, d, band.len());
        }
    }
}
