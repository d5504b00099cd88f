//! Mel-frequency cepstral coefficients and cepstral fundamental-frequency
//! tracking on short frames.

use rustfft::num_complex::Complex64;

use super::fft::{frame_count, hamming, inverse_plan, power_spectrogram, real_fft};
use super::DspError;

pub const WINDOW_S: f64 = 0.025;
pub const OVERLAP_S: f64 = 0.015;
pub const N_COEFFS: usize = 13;
const N_MEL: usize = 20;
const NFFT: usize = 256;
/// Floor applied before every logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

fn mel_filterbank(fs: f64, nfft: usize, n_mel: usize) -> Vec<Vec<f64>> {
    let bins = nfft / 2 + 1;
    let top = hz_to_mel(fs / 2.0);
    let edges: Vec<f64> = (0..n_mel + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mel + 1) as f64))
        .collect();
    (0..n_mel)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * fs / nfft as f64;
                    if f > lo && f <= mid {
                        (f - lo) / (mid - lo)
                    } else if f > mid && f < hi {
                        (hi - f) / (hi - mid)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

fn frame_geometry(fs: f64, win_s: f64, overlap_s: f64) -> (usize, usize) {
    let win = (win_s * fs).round() as usize;
    let hop = win - (overlap_s * fs).round() as usize;
    (win, hop.max(1))
}

/// MFCC matrix, one row per frame: `[log_energy, c0, c1, ..., c(n_coeffs-1)]`.
pub fn mfcc_with(
    x: &[f64],
    fs: f64,
    win_s: f64,
    overlap_s: f64,
    n_coeffs: usize,
) -> Result<Vec<Vec<f64>>, DspError> {
    let (win, hop) = frame_geometry(fs, win_s, overlap_s);
    if x.len() < win {
        return Err(DspError::TooShort { needed: win, got: x.len() });
    }
    let nfft = NFFT.max(win.next_power_of_two());
    let window = hamming(win);
    let spec = power_spectrogram(x, &window, hop, nfft);
    let bank = mel_filterbank(fs, nfft, N_MEL);
    let m = N_MEL as f64;
    let dct: Vec<Vec<f64>> = (0..n_coeffs)
        .map(|k| {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            (0..N_MEL)
                .map(|j| scale * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / m).cos())
                .collect()
        })
        .collect();
    Ok(spec
        .iter()
        .enumerate()
        .map(|(f, p)| {
            let start = f * hop;
            let energy: f64 = x[start..start + win].iter().map(|v| v * v).sum();
            let logmel: Vec<f64> = bank
                .iter()
                .map(|filt| filt.iter().zip(p).map(|(w, v)| w * v).sum::<f64>().max(LOG_FLOOR).ln())
                .collect();
            let mut row = Vec::with_capacity(n_coeffs + 1);
            row.push(energy.max(LOG_FLOOR).ln());
            row.extend(dct.iter().map(|basis| basis.iter().zip(&logmel).map(|(b, l)| b * l).sum::<f64>()));
            row
        })
        .collect())
}

/// 25 ms / 15 ms-overlap MFCC with 13 coefficients plus log energy.
pub fn mfcc(x: &[f64], fs: f64) -> Result<Vec<Vec<f64>>, DspError> {
    mfcc_with(x, fs, WINDOW_S, OVERLAP_S, N_COEFFS)
}

/// Per-frame cepstral pitch track.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    pub fs: f64,
    /// Peak quefrency per frame, in samples.
    pub quefrency: Vec<usize>,
}

impl F0Track {
    pub fn f0(&self) -> Vec<f64> {
        self.quefrency.iter().map(|&q| self.fs / q as f64).collect()
    }

    /// Fraction of frames with f0 below `hz`.
    pub fn fraction_below(&self, hz: f64) -> f64 {
        if self.quefrency.is_empty() {
            return 0.0;
        }
        self.f0().iter().filter(|&&f| f < hz).count() as f64 / self.quefrency.len() as f64
    }

    /// f0 of the most populated quefrency bin (ties to the lower quefrency).
    pub fn dominant(&self) -> f64 {
        let max_q = self.quefrency.iter().copied().max().unwrap_or(0);
        if max_q == 0 {
            return 0.0;
        }
        let mut counts = vec![0usize; max_q + 1];
        for &q in &self.quefrency {
            counts[q] += 1;
        }
        let best = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(q, _)| q)
            .unwrap_or(1);
        self.fs / best as f64
    }
}

/// Cepstral f0 per 25 ms frame (15 ms overlap), restricted to
/// `[f_lo, f_hi]` Hz by quefrency gating.
pub fn cepstral_f0(x: &[f64], fs: f64, f_lo: f64, f_hi: f64) -> Result<F0Track, DspError> {
    let (win, hop) = frame_geometry(fs, WINDOW_S, OVERLAP_S);
    let frames = frame_count(x.len(), win, hop);
    if frames == 0 {
        return Err(DspError::TooShort { needed: win, got: x.len() });
    }
    let q_lo = (fs / f_hi).ceil().max(1.0) as usize;
    let q_hi = (fs / f_lo).floor() as usize;
    let nfft = (2 * win.max(q_hi + 1)).next_power_of_two();
    let window = hamming(win);
    let ifft = inverse_plan(nfft);
    let mut quefrency = Vec::with_capacity(frames);
    let mut frame = vec![0.0; win];
    for f in 0..frames {
        let start = f * hop;
        for i in 0..win {
            frame[i] = x[start + i] * window[i];
        }
        let mut spec = real_fft(&frame, nfft);
        for v in spec.iter_mut() {
            *v = Complex64::new((v.norm() + LOG_FLOOR).ln(), 0.0);
        }
        ifft.process(&mut spec);
        let mut best = q_lo;
        for q in q_lo..=q_hi.min(nfft / 2) {
            if spec[q].re > spec[best].re {
                best = q;
            }
        }
        quefrency.push(best);
    }
    Ok(F0Track { fs, quefrency })
}
