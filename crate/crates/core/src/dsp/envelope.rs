//! Heart- and lung-oriented signal envelopes.

use super::fft::hilbert_envelope;
use super::filter::{butterworth, BandSpec};
use super::resample::resample;
use super::spectral::{stft, Spectrogram};
use super::stats::{block_mean, variance, variance_fractal_dimension};
use super::wavelet::{wavelet_decompose, Wavelet};
use super::DspError;

/// Common frame rate of all envelopes after [`Envelope::at_frame_rate`].
pub const FRAME_RATE: f64 = 50.0;
const FRAME_WIN_S: f64 = 0.1;
const PSD_WIN_S: f64 = 0.256;
const HOMOMORPHIC_CUTOFF_HZ: f64 = 8.0;
const SHANNON_SMOOTH_S: f64 = 0.02;
const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    Hilbert,
    Homomorphic,
    ShannonEnergy,
    Stft,
    BandPower40To60,
    WaveletDetailRbio39L3,
    Psd300To450,
    LogVariance,
    VarianceFractal,
    SpectralEnergy,
    Band150To300,
    Band300To450,
    Band150To450,
    Band0To500,
}

impl EnvelopeKind {
    pub const ALL: [EnvelopeKind; 14] = [
        EnvelopeKind::Hilbert,
        EnvelopeKind::Homomorphic,
        EnvelopeKind::ShannonEnergy,
        EnvelopeKind::Stft,
        EnvelopeKind::BandPower40To60,
        EnvelopeKind::WaveletDetailRbio39L3,
        EnvelopeKind::Psd300To450,
        EnvelopeKind::LogVariance,
        EnvelopeKind::VarianceFractal,
        EnvelopeKind::SpectralEnergy,
        EnvelopeKind::Band150To300,
        EnvelopeKind::Band300To450,
        EnvelopeKind::Band150To450,
        EnvelopeKind::Band0To500,
    ];

    pub fn is_heart(self) -> bool {
        (self as usize) < 6
    }

    pub fn heart() -> &'static [EnvelopeKind] {
        &Self::ALL[..6]
    }

    pub fn lung() -> &'static [EnvelopeKind] {
        &Self::ALL[6..]
    }

    pub fn is_sample_based(self) -> bool {
        matches!(
            self,
            EnvelopeKind::Hilbert
                | EnvelopeKind::Homomorphic
                | EnvelopeKind::ShannonEnergy
                | EnvelopeKind::WaveletDetailRbio39L3
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvelopeKind::Hilbert => "hilbert",
            EnvelopeKind::Homomorphic => "homomorphic",
            EnvelopeKind::ShannonEnergy => "shannon_energy",
            EnvelopeKind::Stft => "stft",
            EnvelopeKind::BandPower40To60 => "band_power_40_60",
            EnvelopeKind::WaveletDetailRbio39L3 => "wavelet_detail_rbio39_l3",
            EnvelopeKind::Psd300To450 => "psd_300_450",
            EnvelopeKind::LogVariance => "log_variance",
            EnvelopeKind::VarianceFractal => "variance_fractal",
            EnvelopeKind::SpectralEnergy => "spectral_energy",
            EnvelopeKind::Band150To300 => "band_150_300",
            EnvelopeKind::Band300To450 => "band_300_450",
            EnvelopeKind::Band150To450 => "band_150_450",
            EnvelopeKind::Band0To500 => "band_0_500",
        }
    }

    /// Frequency band summed by the spectrogram-band kinds.
    fn band(self) -> Option<(f64, f64)> {
        match self {
            EnvelopeKind::Stft => Some((25.0, 400.0)),
            EnvelopeKind::BandPower40To60 => Some((40.0, 60.0)),
            EnvelopeKind::Psd300To450 => Some((300.0, 450.0)),
            EnvelopeKind::SpectralEnergy => Some((200.0, 1000.0)),
            EnvelopeKind::Band150To300 => Some((150.0, 300.0)),
            EnvelopeKind::Band300To450 => Some((300.0, 450.0)),
            EnvelopeKind::Band150To450 => Some((150.0, 450.0)),
            EnvelopeKind::Band0To500 => Some((0.0, 500.0)),
            _ => None,
        }
    }
}

/// A non-negative envelope sampled at `rate` Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub rate: f64,
    pub values: Vec<f64>,
}

impl Envelope {
    /// Brings the envelope to [`FRAME_RATE`] (block means for sample-rate envelopes).
    pub fn at_frame_rate(&self) -> Envelope {
        if (self.rate - FRAME_RATE).abs() < 1e-9 {
            return self.clone();
        }
        let block = (self.rate / FRAME_RATE).round().max(1.0) as usize;
        Envelope { kind: self.kind, rate: self.rate / block as f64, values: block_mean(&self.values, block) }
    }

    /// Resamples a frame-rate envelope to `rate` Hz, clamping at zero.
    pub fn at_rate(&self, rate: u32) -> Result<Envelope, DspError> {
        let base = self.at_frame_rate();
        let values = resample(&base.values, base.rate.round() as u32, rate)?
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();
        Ok(Envelope { kind: self.kind, rate: rate as f64, values })
    }
}

/// Spectrogram backing the frame-based kinds: 100 ms Hann frames centered on
/// a 20 ms grid, with reflected padding at the edges.
pub fn frame_spectrogram(x: &[f64], fs: f64) -> Result<Spectrogram, DspError> {
    centered_stft(x, fs, FRAME_WIN_S)
}

/// Longer-window spectrogram for the 300-450 Hz breath envelope.
pub fn breath_spectrogram(x: &[f64], fs: f64) -> Result<Spectrogram, DspError> {
    centered_stft(x, fs, PSD_WIN_S)
}

fn centered_stft(x: &[f64], fs: f64, win_s: f64) -> Result<Spectrogram, DspError> {
    let win = (win_s * fs).round() as usize;
    if x.len() < win {
        return Err(DspError::TooShort { needed: win, got: x.len() });
    }
    let padded = reflect_pad(x, win / 2);
    stft(&padded, fs, win_s, 1.0 / FRAME_RATE)
}

fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let pad = pad.min(n.saturating_sub(1));
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((0..pad).map(|i| x[n - 2 - i]));
    out
}

/// Envelope of a band-kind from a precomputed spectrogram, trimmed to
/// `n_frames` when given.
pub fn band_envelope(sg: &Spectrogram, kind: EnvelopeKind, n_frames: Option<usize>) -> Option<Envelope> {
    let (lo, hi) = kind.band()?;
    let mut values = sg.band_track(lo, hi);
    if let Some(n) = n_frames {
        values.truncate(n);
    }
    Some(Envelope { kind, rate: sg.frame_rate, values })
}

/// Number of 50 Hz frames for `n` input samples at `fs`.
pub fn frames_for(n: usize, fs: f64) -> usize {
    (n as f64 * FRAME_RATE / fs).floor() as usize
}

pub fn compute_envelope(x: &[f64], fs: f64, kind: EnvelopeKind) -> Result<Envelope, DspError> {
    if x.is_empty() {
        return Err(DspError::Empty);
    }
    let n_frames = frames_for(x.len(), fs);
    let values = match kind {
        EnvelopeKind::Hilbert => hilbert_envelope(x),
        EnvelopeKind::Homomorphic => homomorphic(x, fs)?,
        EnvelopeKind::ShannonEnergy => shannon_energy(x, fs),
        EnvelopeKind::WaveletDetailRbio39L3 => wavelet_detail(x)?,
        EnvelopeKind::Psd300To450 => {
            let sg = breath_spectrogram(x, fs)?;
            return Ok(band_envelope(&sg, kind, Some(n_frames)).expect("band kind"));
        }
        EnvelopeKind::LogVariance | EnvelopeKind::VarianceFractal => {
            return framewise(x, fs, kind, n_frames);
        }
        _ => {
            let sg = frame_spectrogram(x, fs)?;
            return Ok(band_envelope(&sg, kind, Some(n_frames)).expect("band kind"));
        }
    };
    Ok(Envelope { kind, rate: fs, values })
}

fn homomorphic(x: &[f64], fs: f64) -> Result<Vec<f64>, DspError> {
    let lp = butterworth(1, BandSpec::Lowpass(HOMOMORPHIC_CUTOFF_HZ), fs)?;
    let logs: Vec<f64> = hilbert_envelope(x).iter().map(|v| v.max(LOG_FLOOR).ln()).collect();
    Ok(lp.filtfilt(&logs).into_iter().map(f64::exp).collect())
}

fn shannon_energy(x: &[f64], fs: f64) -> Vec<f64> {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak <= 0.0 {
        return vec![0.0; x.len()];
    }
    let se: Vec<f64> = x
        .iter()
        .map(|v| {
            let p = (v / peak).powi(2);
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        })
        .collect();
    let w = ((SHANNON_SMOOTH_S * fs).round() as usize).max(1);
    moving_average(&se, w)
}

/// Centered moving average with shrinking windows at the edges.
pub fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    let half = w / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + w - half).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn wavelet_detail(x: &[f64]) -> Result<Vec<f64>, DspError> {
    let p = wavelet_decompose(x, Wavelet::Rbio39, 3)?;
    let d = p.detail(3);
    // each level-3 coefficient spans 8 input samples; the symmetric extension
    // shifts the first one by about half the filter length
    let shift = (Wavelet::Rbio39.filter_len() - 2) / 2;
    Ok((0..x.len())
        .map(|i| {
            let k = ((i + shift * 7) / 8).min(d.len() - 1);
            d[k].abs()
        })
        .collect())
}

fn framewise(x: &[f64], fs: f64, kind: EnvelopeKind, n_frames: usize) -> Result<Envelope, DspError> {
    let win = (FRAME_WIN_S * fs).round() as usize;
    if x.len() < win {
        return Err(DspError::TooShort { needed: win, got: x.len() });
    }
    let hop = fs / FRAME_RATE;
    let padded = reflect_pad(x, win / 2);
    let mut values = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let start = (i as f64 * hop).round() as usize;
        let frame = &padded[start..(start + win).min(padded.len())];
        values.push(match kind {
            EnvelopeKind::LogVariance => variance(frame).max(LOG_FLOOR).ln() - LOG_FLOOR.ln(),
            _ => variance_fractal_dimension(frame)?,
        });
    }
    Ok(Envelope { kind, rate: FRAME_RATE, values })
}
