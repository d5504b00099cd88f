//! Per-recording cache of intermediate signals shared between features.

use std::cell::OnceCell;

use super::catalog::{Detector, EnvStat, MfccStat, Op, Segmenter};
use super::ops::{self, OpResult, Rhythm};
use crate::dsp::autocorr::autocorr_centered;
use crate::dsp::entropy::{entropy, sample_entropy, DEFAULT_ORDER};
use crate::dsp::envelope::{
    band_envelope, breath_spectrogram, compute_envelope, frame_spectrogram, frames_for, EnvelopeKind, FRAME_RATE,
};
use crate::dsp::fft::hilbert_envelope;
use crate::dsp::filter::{butterworth, BandSpec};
use crate::dsp::lpc::lpc;
use crate::dsp::mfcc::{cepstral_f0, mfcc, F0Track};
use crate::dsp::resample::resample;
use crate::dsp::spectral::{band_power_ratio, psd, psd_svd_dependency, spectral_centroid, Spectrogram, Spectrum};
use crate::dsp::stats::{block_mean, kurtosis, mean, percentile, rmssd, skewness, variance, zcr};
use crate::dsp::wavelet::{wavelet_decompose, Wavelet, WaveletPyramid};
use crate::heart_seg::emission::EmissionArtifact;
use crate::heart_seg::peaks::GieraltowskiTrace;
use crate::heart_seg::springer::{decode, SPRINGER_ENVELOPES};
use crate::heart_seg::{
    breath_peaks, estimate_heart_rate, gieraltowski_peaks, gieraltowski_trace, liang_peaks, schmidt_segment, zscore,
    HeartRateEstimate, State, StateSequence,
};
use crate::signal_io::{filter_samples, peak_normalize, FilterPhase, SoundTarget};

type Cell<T> = OnceCell<OpResult<T>>;

fn get<T>(cell: &Cell<T>, f: impl FnOnce() -> OpResult<T>) -> OpResult<&T> {
    cell.get_or_init(f).as_ref().map_err(Clone::clone)
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const SAMPEN_M: usize = 2;
const ENTROPY_RATE: u32 = 30;

pub(crate) struct Context<'a> {
    raw: &'a [f64],
    x: Vec<f64>,
    fs: f64,
    phase: FilterPhase,
    artifact: &'a EmissionArtifact,
    heart: Cell<Vec<f64>>,
    lung: Cell<Vec<f64>>,
    resampled: [Cell<Vec<f64>>; 2],
    psd_native: Cell<Spectrum>,
    psd_2k: Cell<Spectrum>,
    heart_sg: Cell<Spectrogram>,
    lung_sg: Cell<Spectrogram>,
    breath_sg: Cell<Spectrogram>,
    envs: [Cell<Vec<f64>>; 14],
    envs30: [Cell<Vec<f64>>; 14],
    audio_env: Cell<Vec<f64>>,
    audio_env30: Cell<Vec<f64>>,
    lung_hilbert: Cell<Vec<f64>>,
    lpc: Cell<Vec<f64>>,
    mfcc: Cell<Vec<Vec<f64>>>,
    f0: Cell<F0Track>,
    db4: Cell<WaveletPyramid>,
    db8_a2: Cell<Vec<f64>>,
    gier: Cell<Option<GieraltowskiTrace>>,
    svd: [Cell<[f64; 4]>; 2],
    contamination: Cell<Vec<f64>>,
    hr: Cell<HeartRateEstimate>,
    springer: Cell<StateSequence>,
    schmidt: Cell<StateSequence>,
    hsmm: [Cell<StateSequence>; 6],
    peaks: [Cell<Vec<f64>>; 5],
}

fn kind_index(k: EnvelopeKind) -> usize {
    k as usize
}

fn detector_index(d: Detector) -> usize {
    match d {
        Detector::Gieraltowski => 0,
        Detector::Springer => 1,
        Detector::Schmidt => 2,
        Detector::Liang => 3,
        Detector::Breath => 4,
    }
}

impl<'a> Context<'a> {
    pub fn new(raw: &'a [f64], fs: f64, phase: FilterPhase, artifact: &'a EmissionArtifact) -> Self {
        Context {
            raw,
            x: peak_normalize(raw),
            fs,
            phase,
            artifact,
            heart: OnceCell::new(),
            lung: OnceCell::new(),
            resampled: Default::default(),
            psd_native: OnceCell::new(),
            psd_2k: OnceCell::new(),
            heart_sg: OnceCell::new(),
            lung_sg: OnceCell::new(),
            breath_sg: OnceCell::new(),
            envs: Default::default(),
            envs30: Default::default(),
            audio_env: OnceCell::new(),
            audio_env30: OnceCell::new(),
            lung_hilbert: OnceCell::new(),
            lpc: OnceCell::new(),
            mfcc: OnceCell::new(),
            f0: OnceCell::new(),
            db4: OnceCell::new(),
            db8_a2: OnceCell::new(),
            gier: OnceCell::new(),
            svd: Default::default(),
            contamination: OnceCell::new(),
            hr: OnceCell::new(),
            springer: OnceCell::new(),
            schmidt: OnceCell::new(),
            hsmm: Default::default(),
            peaks: Default::default(),
        }
    }

    fn duration(&self) -> f64 {
        self.x.len() as f64 / self.fs
    }

    fn heart(&self) -> OpResult<&Vec<f64>> {
        get(&self.heart, || filter_samples(&self.x, SoundTarget::Heart, self.phase).map_err(s))
    }

    fn lung(&self) -> OpResult<&Vec<f64>> {
        get(&self.lung, || filter_samples(&self.x, SoundTarget::Lung, self.phase).map_err(s))
    }

    fn at_rate(&self, fs: u32) -> OpResult<&Vec<f64>> {
        let (cell, rate) = match fs {
            1000 => (&self.resampled[0], 1000),
            2000 => (&self.resampled[1], 2000),
            0 => return Ok(&self.x),
            other => return Err(format!("no cached rate {other}")),
        };
        get(cell, || resample(&self.x, self.fs.round() as u32, rate).map_err(s))
    }

    fn spectrum(&self, fs: u32) -> OpResult<(&Spectrum, f64)> {
        if fs == 0 {
            Ok((get(&self.psd_native, || psd(&self.x, self.fs).map_err(s))?, self.fs))
        } else {
            let y = self.at_rate(fs)?;
            Ok((get(&self.psd_2k, || psd(y, fs as f64).map_err(s))?, fs as f64))
        }
    }

    /// Frame-rate (50 Hz) envelope; heart kinds from the heart band, lung
    /// kinds from the lung band.
    fn env(&self, kind: EnvelopeKind) -> OpResult<&Vec<f64>> {
        get(&self.envs[kind_index(kind)], || {
            let src = if kind.is_heart() { self.heart()? } else { self.lung()? };
            let n_frames = Some(frames_for(src.len(), self.fs));
            let sg = match kind {
                EnvelopeKind::Stft | EnvelopeKind::BandPower40To60 => {
                    Some(get(&self.heart_sg, || frame_spectrogram(src, self.fs).map_err(s))?)
                }
                EnvelopeKind::Psd300To450 => Some(get(&self.breath_sg, || breath_spectrogram(src, self.fs).map_err(s))?),
                EnvelopeKind::SpectralEnergy
                | EnvelopeKind::Band150To300
                | EnvelopeKind::Band300To450
                | EnvelopeKind::Band150To450
                | EnvelopeKind::Band0To500 => Some(get(&self.lung_sg, || frame_spectrogram(src, self.fs).map_err(s))?),
                _ => None,
            };
            match sg {
                Some(sg) => Ok(band_envelope(sg, kind, n_frames).ok_or("not a band envelope")?.values),
                None => Ok(compute_envelope(src, self.fs, kind).map_err(s)?.at_frame_rate().values),
            }
        })
    }

    fn env30(&self, kind: EnvelopeKind) -> OpResult<&Vec<f64>> {
        get(&self.envs30[kind_index(kind)], || to_30(self.env(kind)?))
    }

    fn audio_env(&self) -> OpResult<&Vec<f64>> {
        get(&self.audio_env, || {
            let block = (self.fs / FRAME_RATE).round() as usize;
            Ok(block_mean(&hilbert_envelope(&self.x), block))
        })
    }

    fn audio_env30(&self) -> OpResult<&Vec<f64>> {
        get(&self.audio_env30, || to_30(self.audio_env()?))
    }

    fn lung_hilbert(&self) -> OpResult<&Vec<f64>> {
        get(&self.lung_hilbert, || {
            let block = (self.fs / FRAME_RATE).round() as usize;
            Ok(block_mean(&hilbert_envelope(self.lung()?), block))
        })
    }

    fn rhythm_env(&self, r: Rhythm) -> OpResult<&Vec<f64>> {
        match r {
            Rhythm::Heart => self.env(EnvelopeKind::Hilbert),
            Rhythm::Lung => self.lung_hilbert(),
        }
    }

    fn mfcc(&self) -> OpResult<&Vec<Vec<f64>>> {
        get(&self.mfcc, || mfcc(&self.x, self.fs).map_err(s))
    }

    fn f0(&self) -> OpResult<&F0Track> {
        get(&self.f0, || cepstral_f0(&self.x, self.fs, 50.0, 1000.0).map_err(s))
    }

    fn db4(&self) -> OpResult<&WaveletPyramid> {
        get(&self.db4, || wavelet_decompose(&self.x, Wavelet::Db4, 5).map_err(s))
    }

    fn db8_a2(&self) -> OpResult<&Vec<f64>> {
        get(&self.db8_a2, || Ok(wavelet_decompose(&self.x, Wavelet::Db8, 2).map_err(s)?.approx))
    }

    fn gier(&self) -> OpResult<&Option<GieraltowskiTrace>> {
        get(&self.gier, || gieraltowski_trace(&self.x, self.fs).map_err(s))
    }

    fn hr(&self) -> OpResult<&HeartRateEstimate> {
        get(&self.hr, || estimate_heart_rate(self.env(EnvelopeKind::Homomorphic)?, FRAME_RATE).map_err(s))
    }

    fn segmentation(&self, seg: Segmenter) -> OpResult<&StateSequence> {
        match seg {
            Segmenter::Springer => get(&self.springer, || {
                let feats = SPRINGER_ENVELOPES.iter().map(|&k| Ok(zscore(self.env(k)?))).collect::<OpResult<Vec<_>>>()?;
                decode(&feats, &self.artifact.springer, self.hr()?, self.artifact).map_err(s)
            }),
            Segmenter::Schmidt => get(&self.schmidt, || {
                schmidt_segment(self.env(EnvelopeKind::Homomorphic)?, FRAME_RATE, self.hr()?.hr_bpm).map_err(s)
            }),
        }
    }

    fn hsmm(&self, kind: EnvelopeKind) -> OpResult<&StateSequence> {
        get(&self.hsmm[kind_index(kind)], || {
            let model = self.artifact.per_envelope(kind).ok_or_else(|| format!("no emission model for {}", kind.name()))?;
            decode(&[zscore(self.env(kind)?)], model, self.hr()?, self.artifact).map_err(s)
        })
    }

    /// Event times in seconds.
    fn peak_times(&self, det: Detector) -> OpResult<&Vec<f64>> {
        get(&self.peaks[detector_index(det)], || {
            let sound_times = |seq: &StateSequence| seq.sound_centers().iter().map(|c| (c + 0.5) / seq.rate).collect();
            Ok(match det {
                Detector::Gieraltowski => gieraltowski_peaks(&self.x, self.fs).map_err(s)?.times(),
                Detector::Liang => liang_peaks(self.heart()?, self.fs).map_err(s)?.times(),
                Detector::Breath => breath_peaks(self.lung()?, self.fs).map_err(s)?.times(),
                Detector::Springer => sound_times(self.segmentation(Segmenter::Springer)?),
                Detector::Schmidt => sound_times(self.segmentation(Segmenter::Schmidt)?),
            })
        })
    }

    pub fn eval(&self, op: &Op) -> OpResult<f64> {
        match *op {
            Op::AudioSampleEntropy => sample_entropy(self.audio_env30()?, SAMPEN_M, 0.1).map_err(s),
            Op::Clipping => Ok(ops::clipping_pct(self.raw)),
            Op::MeanRateEnergy(fs) => crate::dsp::spectral::mean_rate_avg_energy(self.at_rate(fs)?, fs as f64).map_err(s),
            Op::HeartContamination(thr) => {
                let t = get(&self.contamination, || ops::heart_contamination_trace(&self.x, self.fs, self.phase))?;
                Ok(ops::exceed_fraction(t, thr))
            }
            Op::HighFrequencyVariance => {
                let sos = butterworth(2, BandSpec::Highpass(700.0), self.fs).map_err(s)?;
                let y = match self.phase {
                    FilterPhase::ZeroPhase => sos.filtfilt(&self.x),
                    FilterPhase::Causal => sos.filter(&self.x),
                };
                Ok(variance(&y))
            }
            Op::Lpc(k) => Ok(get(&self.lpc, || lpc(&self.x, 10).map_err(s))?[k]),
            Op::Entropy(kind) => entropy(&self.x, kind, DEFAULT_ORDER).map_err(s),
            Op::Periodicity(r) => Ok(ops::periodicity_degree(self.rhythm_env(r)?, FRAME_RATE, r)),
            Op::AutocorrKurtosis { truncated } => {
                let ac = autocorr_centered(self.audio_env()?, FRAME_RATE, truncated.then_some(5.0));
                Ok(kurtosis(&ac.values))
            }
            Op::AutocorrSampleEntropy { truncated } => {
                let ac = autocorr_centered(self.audio_env30()?, ENTROPY_RATE as f64, truncated.then_some(5.0));
                sample_entropy(&ac.values, SAMPEN_M, 0.2).map_err(s)
            }
            Op::CycleDuration(r) => ops::cycle_duration(self.rhythm_env(r)?, FRAME_RATE, r),
            Op::CryPower => band_power_ratio(self.spectrum(0)?.0, 295.0, 406.0).map_err(s),
            Op::BandPower { fs, lo, hi } => band_power_ratio(self.spectrum(fs)?.0, lo, hi).map_err(s),
            Op::Centroid { fs } => Ok(spectral_centroid(self.spectrum(fs)?.0)),
            Op::Svd { fs, group } => {
                let cell = if fs == 0 { &self.svd[0] } else { &self.svd[1] };
                let y = self.at_rate(fs)?;
                let rate = if fs == 0 { self.fs } else { fs as f64 };
                Ok(get(cell, || psd_svd_dependency(y, rate).map_err(s))?[group])
            }
            Op::WaveletEntropy { set, kind } => {
                let p = self.db4()?;
                let c = if set == 0 { &p.approx[..] } else { p.detail(set + 2) };
                entropy(c, kind, DEFAULT_ORDER).map_err(s)
            }
            Op::WaveletLogVariance => Ok(variance(self.db4()?.detail(3)).max(1e-12).ln()),
            Op::WaveletRmssd => rmssd(self.db8_a2()?).map_err(s),
            Op::WaveletZcr => Ok(zcr(self.db8_a2()?, 0.0)),
            Op::PeakZcr { peak_threshold } => {
                let Some(t) = self.gier()? else { return Ok(0.0) };
                let thr = if peak_threshold {
                    let vals: Vec<f64> = t.peaks.iter().map(|&i| t.envelope[i]).collect();
                    if vals.is_empty() {
                        return Ok(0.0);
                    }
                    percentile(&vals, 58.0)
                } else {
                    percentile(&t.envelope, 85.0)
                };
                Ok(zcr(&t.envelope, thr))
            }
            Op::Mfcc(stat) => {
                let m = self.mfcc()?;
                let col = |c: usize| -> Vec<f64> { m.iter().map(|r| r[c]).collect() };
                let width = m.first().map_or(0, Vec::len);
                let avg = |f: &dyn Fn(&[f64]) -> f64| (0..width).map(|c| f(&col(c))).sum::<f64>() / width as f64;
                Ok(match stat {
                    MfccStat::Mean(c) => mean(&col(c)),
                    MfccStat::Std(c) => variance(&col(c)).sqrt(),
                    MfccStat::AvgMin => avg(&|v| v.iter().cloned().fold(f64::INFINITY, f64::min)),
                    MfccStat::AvgMax => avg(&|v| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
                    MfccStat::AvgSkew => avg(&skewness),
                })
            }
            Op::F0Below250 => Ok(self.f0()?.fraction_below(250.0)),
            Op::F0Dominant => Ok(self.f0()?.dominant()),
            Op::F0Mean => Ok(mean(&self.f0()?.f0())),
            Op::Envelope(kind, stat) => self.env_stat(kind, stat),
            Op::BadSegmentation(seg, state) => {
                let v = ops::pct_bad_segmentation(self.segmentation(seg)?)?;
                Ok(v[state.map_or(4, State::index)])
            }
            Op::SegmentationQuality(seg) => ops::segmentation_quality_cepstral(self.heart()?, self.fs, self.segmentation(seg)?),
            Op::AbnormalSegmentation(seg, i) => Ok(ops::pct_abnormal_segmentation(self.heart()?, self.fs, self.segmentation(seg)?)?[i]),
            Op::AcceptableWindows(det, lo, hi) => {
                let win = if det == Detector::Breath { 4.0 } else { 2.2 };
                ops::acceptable_windows_pct(self.peak_times(det)?, self.duration(), win, 0.25, lo, hi)
            }
            Op::HsmmQuality(kind) => self.hsmm(kind)?.mean_max_posterior().ok_or_else(|| "no posteriors".into()),
            Op::HeartRate(seg) => {
                let iv = self.segmentation(seg)?.s1_intervals();
                if iv.is_empty() {
                    return Err("fewer than two S1 onsets".into());
                }
                Ok(60.0 / mean(&iv))
            }
            Op::SpringerConfidence => {
                self.segmentation(Segmenter::Springer)?.mean_max_posterior().ok_or_else(|| "no posteriors".into())
            }
            Op::PeakRate(det) => Ok(self.peak_times(det)?.len() as f64 * 60.0 / self.duration()),
        }
    }

    fn env_stat(&self, kind: EnvelopeKind, stat: EnvStat) -> OpResult<f64> {
        let env = self.env(kind)?;
        let rhythm = if kind.is_heart() { Rhythm::Heart } else { Rhythm::Lung };
        Ok(match stat {
            EnvStat::SampleEntropy(r) => sample_entropy(self.env30(kind)?, SAMPEN_M, r).map_err(s)?,
            EnvStat::Variance => variance(env),
            EnvStat::Kurtosis => kurtosis(env),
            EnvStat::Skewness => skewness(env),
            EnvStat::Zcr => zcr(env, mean(env)),
            EnvStat::Rmssd => rmssd(&zscore(env)).map_err(s)?,
            EnvStat::CycleCorrMean | EnvStat::CycleCorrStd => {
                let cycle = ops::cycle_duration(env, FRAME_RATE, rhythm)?;
                let (m, sd) = ops::envelope_cycle_correlation(env, FRAME_RATE, cycle)?;
                if stat == EnvStat::CycleCorrMean {
                    m
                } else {
                    sd
                }
            }
            EnvStat::RateMean | EnvStat::RateStd => {
                let win = if kind.is_heart() { 3.0 } else { 6.0 };
                let (m, sd) = ops::envelope_rate_variability(env, FRAME_RATE, win, rhythm)?;
                if stat == EnvStat::RateMean {
                    m
                } else {
                    sd
                }
            }
            EnvStat::Periodicity(r) => ops::periodicity_degree(env, FRAME_RATE, r),
            EnvStat::CycleDuration(r) => ops::cycle_duration(env, FRAME_RATE, r)?,
            EnvStat::AutocorrKurtosis => kurtosis(&autocorr_centered(env, FRAME_RATE, None).values),
            EnvStat::AutocorrSampleEntropy => {
                let ac = autocorr_centered(self.env30(kind)?, ENTROPY_RATE as f64, None);
                sample_entropy(&ac.values, SAMPEN_M, 0.2).map_err(s)?
            }
        })
    }
}

fn to_30(env: &[f64]) -> OpResult<Vec<f64>> {
    Ok(resample(env, FRAME_RATE as u32, ENTROPY_RATE).map_err(s)?.into_iter().map(|v| v.max(0.0)).collect())
}
