//! Averaged-periodogram spectra and spectrogram-derived statistics.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use super::fft::{forward_plan, hann, next_pow2, power_spectrogram};
use super::DspError;

/// Welch segment length in seconds.
pub const WELCH_WINDOW_S: f64 = 0.128;

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub fs: f64,
    pub bin_hz: f64,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn nyquist(&self) -> f64 {
        self.fs / 2.0
    }

    pub fn freq(&self, k: usize) -> f64 {
        k as f64 * self.bin_hz
    }

    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Short-time power spectrogram with its time and frequency resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frame_rate: f64,
    pub bin_hz: f64,
    /// `frames × bins`
    pub power: Vec<Vec<f64>>,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.power.len()
    }

    pub fn bins(&self) -> usize {
        self.power.first().map_or(0, Vec::len)
    }

    /// Per-frame power summed over `[lo, hi)` Hz.
    pub fn band_track(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (k0, k1) = bin_range(self.bin_hz, self.bins(), lo, hi);
        self.power.iter().map(|row| row[k0..k1].iter().sum()).collect()
    }
}

fn bin_range(bin_hz: f64, bins: usize, lo: f64, hi: f64) -> (usize, usize) {
    let k0 = ((lo / bin_hz).ceil().max(0.0) as usize).min(bins);
    let top = (bins - 1) as f64 * bin_hz;
    let k1 = if hi >= top - 1e-9 {
        bins
    } else {
        ((hi / bin_hz).ceil() as usize).min(bins)
    };
    (k0, k1.max(k0))
}

/// Hann-windowed spectrogram with window and hop given in seconds.
pub fn stft(x: &[f64], fs: f64, win_s: f64, hop_s: f64) -> Result<Spectrogram, DspError> {
    let win = (win_s * fs).round() as usize;
    let hop = ((hop_s * fs).round() as usize).max(1);
    if win < 2 {
        return Err(DspError::InvalidParameter(format!("window of {win} samples")));
    }
    if x.len() < win {
        return Err(DspError::TooShort { needed: win, got: x.len() });
    }
    let nfft = next_pow2(win);
    let power = power_spectrogram(x, &hann(win), hop, nfft);
    Ok(Spectrogram { frame_rate: fs / hop as f64, bin_hz: fs / nfft as f64, power })
}

/// Welch PSD: Hann segments of [`WELCH_WINDOW_S`], 50% overlap. Inputs shorter
/// than one segment use a single segment covering the whole input.
pub fn psd(x: &[f64], fs: f64) -> Result<Spectrum, DspError> {
    if x.is_empty() {
        return Err(DspError::Empty);
    }
    let win = ((WELCH_WINDOW_S * fs).round() as usize).clamp(2, x.len().max(2));
    if x.len() < win {
        return Err(DspError::TooShort { needed: 2, got: x.len() });
    }
    let hop = (win / 2).max(1);
    let nfft = next_pow2(win);
    let w = hann(win);
    let frames = power_spectrogram(x, &w, hop, nfft);
    let count = frames.len() as f64;
    let wss: f64 = w.iter().map(|v| v * v).sum();
    let bins = nfft / 2 + 1;
    let mut power = vec![0.0; bins];
    for f in &frames {
        for (p, v) in power.iter_mut().zip(f) {
            *p += v;
        }
    }
    for (k, p) in power.iter_mut().enumerate() {
        let one_sided = if k == 0 || k == bins - 1 { 1.0 } else { 2.0 };
        *p *= one_sided / (count * fs * wss);
    }
    Ok(Spectrum { fs, bin_hz: fs / nfft as f64, power })
}

/// Fraction of total power inside `[lo, hi)` Hz (the Nyquist bin is included
/// when `hi` reaches Nyquist). Silent spectra give 0.
pub fn band_power_ratio(s: &Spectrum, lo: f64, hi: f64) -> Result<f64, DspError> {
    if !(lo >= 0.0 && lo < hi && hi <= s.nyquist() + 1e-9) {
        return Err(DspError::InvalidParameter(format!(
            "band {lo}-{hi} Hz outside 0-{} Hz",
            s.nyquist()
        )));
    }
    let total = s.total();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let (k0, k1) = bin_range(s.bin_hz, s.power.len(), lo, hi);
    Ok((s.power[k0..k1].iter().sum::<f64>() / total).clamp(0.0, 1.0))
}

/// Power-weighted mean frequency. Silent spectra give 0.
pub fn spectral_centroid(s: &Spectrum) -> f64 {
    let total = s.total();
    if total <= 0.0 {
        return 0.0;
    }
    s.power.iter().enumerate().map(|(k, p)| s.freq(k) * p).sum::<f64>() / total
}

/// σ2/σ1 of a `rows × cols` block given as row vectors. Zero blocks give 0.
pub fn svd_ratio(rows: &[Vec<f64>]) -> f64 {
    let r = rows.len();
    if r < 2 {
        return 0.0;
    }
    let mut gram = DMatrix::<f64>::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            let v: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let mut ev: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if ev[0] <= 0.0 {
        return 0.0;
    }
    (ev[1] / ev[0]).sqrt().clamp(0.0, 1.0)
}

/// Number of pooled frequency bins for the dependency measure.
pub const SVD_POOLED_BINS: usize = 15;

/// Linear dependency of the time-frequency PSD: the spectrogram frequency axis
/// is pooled into 15 equal-width bins and σ2/σ1 is computed on pooled bins
/// 1-5, 6-10, 11-15 and on all 15 together.
pub fn psd_svd_dependency(x: &[f64], fs: f64) -> Result<[f64; 4], DspError> {
    let sg = stft(x, fs, WELCH_WINDOW_S, WELCH_WINDOW_S / 2.0)?;
    if sg.frames() < 5 {
        return Err(DspError::TooShort { needed: 5, got: sg.frames() });
    }
    let bins = sg.bins();
    let mut pooled = vec![vec![0.0; sg.frames()]; SVD_POOLED_BINS];
    for (t, row) in sg.power.iter().enumerate() {
        for (k, p) in row.iter().enumerate() {
            let g = (k * SVD_POOLED_BINS / bins).min(SVD_POOLED_BINS - 1);
            pooled[g][t] += p;
        }
    }
    Ok([
        svd_ratio(&pooled[0..5]),
        svd_ratio(&pooled[5..10]),
        svd_ratio(&pooled[10..15]),
        svd_ratio(&pooled),
    ])
}

/// Modulation band used by [`mean_rate_avg_energy`].
pub const MODULATION_BAND: (f64, f64) = (2.0, 32.0);
const MODULATION_WINDOW_S: f64 = 0.032;
const MODULATION_HOP_S: f64 = 0.008;

/// Mean over spectrogram channels of the fraction of each channel's temporal
/// trajectory energy (mean removed) that lies in the 2-32 Hz modulation band.
/// Channels with a constant trajectory are skipped; if all are, returns 0.
pub fn mean_rate_avg_energy(x: &[f64], fs: f64) -> Result<f64, DspError> {
    let sg = stft(x, fs, MODULATION_WINDOW_S, MODULATION_HOP_S)?;
    let frames = sg.frames();
    if frames < 8 {
        return Err(DspError::TooShort { needed: 8, got: frames });
    }
    let n = next_pow2(frames);
    let plan = forward_plan(n);
    let df = sg.frame_rate / n as f64;
    let (lo, hi) = MODULATION_BAND;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let (mut acc, mut used) = (0.0, 0usize);
    for ch in 0..sg.bins() {
        let m = sg.power.iter().map(|r| r[ch]).sum::<f64>() / frames as f64;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(if i < frames { sg.power[i][ch] - m } else { 0.0 }, 0.0);
        }
        plan.process(&mut buf);
        let (mut band, mut total) = (0.0, 0.0);
        for (k, c) in buf[1..=n / 2].iter().enumerate() {
            let e = c.norm_sqr();
            let f = (k + 1) as f64 * df;
            total += e;
            if f >= lo && f <= hi {
                band += e;
            }
        }
        if total > 0.0 && total.is_finite() {
            acc += band / total;
            used += 1;
        }
    }
    Ok(if used == 0 { 0.0 } else { acc / used as f64 })
}
