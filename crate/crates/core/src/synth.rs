//! Synthetic heart and lung recordings mixed with noise at a controlled SNR,
//! plus corpus generation with SNR-derived quality labels.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::filter::{butterworth, BandSpec};
use crate::signal_io::{
    write_wav, AudioRecording, DatasetManifest, ManifestEntry, SignalError, SoundTarget, WavFormat, LUNG_BAND,
    TARGET_FS,
};

pub const DEFAULT_DURATION_S: f64 = 10.0;
pub const HR_RANGE: (f64, f64) = (70.0, 220.0);
pub const BR_RANGE: (f64, f64) = (15.0, 80.0);
/// S2 onset as a fraction of the cardiac cycle.
pub const S2_PHASE: f64 = 0.4;
const S1_MAX_S: f64 = 0.122;
const S2_MAX_S: f64 = 0.092;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("zero-power input to mix")]
    ZeroPower,
    #[error("length mismatch: clean {0}, noise {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    Babble,
    Bumps,
    Cry,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [NoiseKind::White, NoiseKind::Babble, NoiseKind::Bumps, NoiseKind::Cry];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub target: SoundTarget,
    /// Heart rate (beats/min) or breathing rate (breaths/min).
    pub rate: f64,
    /// `f64::INFINITY` produces the clean signal.
    pub snr_db: f64,
    pub noise: NoiseKind,
    pub seed: u64,
    pub duration_s: f64,
}

impl SynthSpec {
    pub fn heart(hr: f64, snr_db: f64, seed: u64) -> Self {
        SynthSpec { target: SoundTarget::Heart, rate: hr, snr_db, noise: NoiseKind::White, seed, duration_s: DEFAULT_DURATION_S }
    }

    pub fn lung(br: f64, snr_db: f64, seed: u64) -> Self {
        SynthSpec { target: SoundTarget::Lung, rate: br, snr_db, noise: NoiseKind::White, seed, duration_s: DEFAULT_DURATION_S }
    }

    pub fn with_noise(mut self, noise: NoiseKind) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let (lo, hi) = match self.target {
            SoundTarget::Heart => HR_RANGE,
            SoundTarget::Lung => BR_RANGE,
        };
        if !(lo..=hi).contains(&self.rate) {
            return Err(SynthError::InvalidSpec(format!("rate {} outside {lo}-{hi}", self.rate)));
        }
        if !(self.duration_s > 0.0) {
            return Err(SynthError::InvalidSpec("duration must be positive".into()));
        }
        if self.snr_db.is_nan() {
            return Err(SynthError::InvalidSpec("snr is NaN".into()));
        }
        Ok(())
    }

    fn n_samples(&self) -> usize {
        (self.duration_s * TARGET_FS as f64).round() as usize
    }
}

/// Ground-truth sound timing of a synthetic heart recording, in seconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeartTruth {
    pub s1: Vec<(f64, f64)>,
    pub s2: Vec<(f64, f64)>,
}

impl HeartTruth {
    /// Per-frame state index (0 S1, 1 systole, 2 S2, 3 diastole) at `rate` Hz.
    pub fn frame_states(&self, n_frames: usize, rate: f64) -> Vec<usize> {
        (0..n_frames)
            .map(|i| {
                let t = (i as f64 + 0.5) / rate;
                if self.s1.iter().any(|&(a, d)| t >= a && t < a + d) {
                    return 0;
                }
                if self.s2.iter().any(|&(a, d)| t >= a && t < a + d) {
                    return 2;
                }
                // previous sound decides systole vs diastole
                let last_s1 = self.s1.iter().filter(|s| s.0 <= t).map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
                let last_s2 = self.s2.iter().filter(|s| s.0 <= t).map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
                if last_s1 > last_s2 {
                    1
                } else {
                    3
                }
            })
            .collect()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_burst(out: &mut [f64], fs: f64, onset: f64, dur: f64, freqs: &[(f64, f64)], amp: f64, rng: &mut ChaCha8Rng) {
    let center = onset + dur / 2.0;
    let sigma = dur / 5.0;
    let i0 = ((onset * fs).floor().max(0.0)) as usize;
    let i1 = (((onset + dur) * fs).ceil() as usize).min(out.len());
    let phases: Vec<f64> = freqs.iter().map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    for (i, o) in out.iter_mut().enumerate().take(i1).skip(i0) {
        let t = i as f64 / fs;
        let w = (-0.5 * ((t - center) / sigma).powi(2)).exp();
        let s: f64 = freqs.iter().zip(&phases).map(|(&(f, a), p)| a * (2.0 * PI * f * (t - onset) + p).sin()).sum();
        *o += amp * w * s;
    }
}

/// Clean S1/S2 dyads at `hr` beats/min with small beat-to-beat jitter.
pub fn synth_heart_clean(hr: f64, duration_s: f64, seed: u64) -> (Vec<f64>, HeartTruth) {
    let fs = TARGET_FS as f64;
    let n = (duration_s * fs).round() as usize;
    let mut rng = rng_for(seed, 1);
    let jitter = Normal::new(0.0, 0.01).unwrap();
    let cycle = 60.0 / hr;
    let s1_base = rng.gen_range(55.0..70.0);
    let s2_base = rng.gen_range(90.0..110.0);
    let s1_tones = [(s1_base, 1.0), (s1_base * 1.6, 0.6), (s1_base * 2.3, 0.3)];
    let s2_tones = [(s2_base, 1.0), (s2_base * 1.5, 0.5), (s2_base * 2.1, 0.25)];
    let s2_amp = rng.gen_range(0.55..0.8);
    let mut out = vec![0.0; n];
    let mut truth = HeartTruth::default();
    let mut t = -rng.gen_range(0.0..cycle);
    while t < duration_s {
        let c = cycle * (1.0 + jitter.sample(&mut rng));
        let d1 = S1_MAX_S.min(0.25 * c) * (1.0 + 0.5 * jitter.sample(&mut rng));
        let d2 = S2_MAX_S.min(0.2 * c) * (1.0 + 0.5 * jitter.sample(&mut rng));
        let s2_on = t + S2_PHASE * c;
        let beat_amp = 1.0 + 10.0 * jitter.sample(&mut rng);
        gaussian_burst(&mut out, fs, t, d1, &s1_tones, beat_amp, &mut rng);
        gaussian_burst(&mut out, fs, s2_on, d2, &s2_tones, beat_amp * s2_amp, &mut rng);
        truth.s1.push((t, d1));
        truth.s2.push((s2_on, d2));
        t += c;
    }
    (out, truth)
}

/// Clean breathing: band-limited noise with a raised-cosine inspiration burst
/// per breath and a weak expiration phase. Returns the signal and the
/// inspiration-peak times.
pub fn synth_lung_clean(br: f64, duration_s: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let fs = TARGET_FS as f64;
    let n = (duration_s * fs).round() as usize;
    let mut rng = rng_for(seed, 2);
    let carrier = band_noise(n, LUNG_BAND.0, LUNG_BAND.1, &mut rng);
    let jitter = Normal::new(0.0, 0.02).unwrap();
    let cycle = 60.0 / br;
    let mut env = vec![0.0; n];
    let mut peaks = Vec::new();
    let mut t = -rng.gen_range(0.0..cycle);
    while t < duration_s {
        let c = cycle * (1.0 + jitter.sample(&mut rng));
        let amp = 1.0 + 2.0 * jitter.sample(&mut rng);
        let insp = 0.45 * c;
        let exp_d = 0.35 * c;
        raised_cosine(&mut env, fs, t, insp, amp);
        raised_cosine(&mut env, fs, t + insp, exp_d, 0.25 * amp);
        let peak = t + insp / 2.0;
        if (0.0..duration_s).contains(&peak) {
            peaks.push(peak);
        }
        t += c;
    }
    let out = carrier.iter().zip(&env).map(|(c, e)| c * e).collect();
    (out, peaks)
}

fn raised_cosine(env: &mut [f64], fs: f64, onset: f64, dur: f64, amp: f64) {
    let i0 = (onset * fs).ceil().max(0.0) as usize;
    let i1 = (((onset + dur) * fs).floor().max(0.0) as usize).min(env.len());
    for (i, e) in env.iter_mut().enumerate().take(i1).skip(i0) {
        let u = (i as f64 / fs - onset) / dur;
        *e += amp * 0.5 * (1.0 - (2.0 * PI * u).cos());
    }
}

fn band_noise(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let white: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    butterworth(4, BandSpec::Bandpass(lo, hi), TARGET_FS as f64).expect("valid band").filtfilt(&white)
}

/// Noise of the given kind, unit-less (scaled later by [`mix`]).
pub fn synth_noise(kind: NoiseKind, n: usize, seed: u64) -> Vec<f64> {
    let fs = TARGET_FS as f64;
    let mut rng = rng_for(seed, 3);
    match kind {
        NoiseKind::White => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        NoiseKind::Babble => {
            let mut out = vec![0.0; n];
            for _ in 0..6 {
                let f0 = rng.gen_range(100.0..250.0);
                let syll = rng.gen_range(3.0..6.0);
                let ph = rng.gen_range(0.0..2.0 * PI);
                let vib = rng.gen_range(0.02..0.06);
                let mut phase = 0.0;
                for (i, o) in out.iter_mut().enumerate() {
                    let t = i as f64 / fs;
                    let f = f0 * (1.0 + vib * (2.0 * PI * 0.7 * t + ph).sin());
                    phase += 2.0 * PI * f / fs;
                    let am = (0.5 * (1.0 + (2.0 * PI * syll * t + ph).sin())).powi(2);
                    let mut s = 0.0;
                    for h in 1..=8 {
                        if f * h as f64 >= fs / 2.0 {
                            break;
                        }
                        s += (h as f64 * phase).sin() / h as f64;
                    }
                    *o += am * s;
                }
            }
            out
        }
        NoiseKind::Bumps => {
            let mut out: Vec<f64> = (0..n).map(|_| 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
            let gaps = Exp::new(1.5).unwrap();
            let mut t = gaps.sample(&mut rng);
            let dur_s = n as f64 / fs;
            while t < dur_s {
                let f = rng.gen_range(15.0..90.0);
                let tau = rng.gen_range(0.02..0.12);
                let amp = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let i0 = (t * fs) as usize;
                let len = ((5.0 * tau * fs) as usize).min(n - i0);
                for k in 0..len {
                    let u = k as f64 / fs;
                    out[i0 + k] += amp * (-u / tau).exp() * (2.0 * PI * f * u).sin();
                }
                // friction rub
                if rng.gen_bool(0.4) {
                    let len = ((rng.gen_range(0.05..0.3) * fs) as usize).min(n - i0);
                    for k in 0..len {
                        let w = (PI * k as f64 / len as f64).sin();
                        out[i0 + k] += 0.4 * amp.abs() * w * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                t += gaps.sample(&mut rng);
            }
            out
        }
        NoiseKind::Cry => {
            let f0 = rng.gen_range(350.0..550.0);
            let bout = rng.gen_range(0.8..1.4);
            let pause = rng.gen_range(0.3..0.7);
            let mut phase = 0.0;
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    let f = f0 * (1.0 + 0.05 * (2.0 * PI * 0.9 * t).sin());
                    phase += 2.0 * PI * f / fs;
                    let pos = t % (bout + pause);
                    let on = if pos < bout { (PI * pos / bout).sin() } else { 0.0 };
                    let mut s = 0.0;
                    for h in 1..=4 {
                        if f * h as f64 >= fs / 2.0 {
                            break;
                        }
                        s += (h as f64 * phase).sin() / h as f64;
                    }
                    on * s + 0.02 * rng.sample::<f64, _>(StandardNormal)
                })
                .collect()
        }
    }
}

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64
}

/// Gain applied to `noise` so that `10 log10(P_clean / P_noise) = snr_db`.
pub fn noise_gain(clean: &[f64], noise: &[f64], snr_db: f64) -> Result<f64, SynthError> {
    let (pc, pn) = (power(clean), power(noise));
    if pc <= 0.0 || pn <= 0.0 {
        return Err(SynthError::ZeroPower);
    }
    Ok((pc / (pn * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// `clean + g * noise`, peak-normalized. An infinite SNR returns `clean` unchanged.
pub fn mix(clean: &[f64], noise: &[f64], snr_db: f64) -> Result<Vec<f64>, SynthError> {
    if clean.len() != noise.len() {
        return Err(SynthError::LengthMismatch(clean.len(), noise.len()));
    }
    if snr_db == f64::INFINITY {
        return Ok(clean.to_vec());
    }
    let g = noise_gain(clean, noise, snr_db)?;
    let out: Vec<f64> = clean.iter().zip(noise).map(|(c, v)| c + g * v).collect();
    Ok(crate::signal_io::peak_normalize(&out))
}

/// Quality label for an SNR in dB.
pub fn label_map(snr_db: f64) -> u8 {
    if snr_db < -10.0 {
        1
    } else if snr_db < -3.0 {
        2
    } else if snr_db < 3.0 {
        3
    } else if snr_db < 10.0 {
        4
    } else {
        5
    }
}

fn synth_samples(spec: &SynthSpec) -> Result<Vec<f64>, SynthError> {
    spec.validate()?;
    let clean = match spec.target {
        SoundTarget::Heart => synth_heart_clean(spec.rate, spec.duration_s, spec.seed).0,
        SoundTarget::Lung => synth_lung_clean(spec.rate, spec.duration_s, spec.seed).0,
    };
    if spec.snr_db == f64::INFINITY {
        return Ok(crate::signal_io::peak_normalize(&clean));
    }
    let noise = synth_noise(spec.noise, spec.n_samples(), spec.seed);
    mix(&clean, &noise, spec.snr_db)
}

pub fn synth_heart(spec: &SynthSpec) -> Result<AudioRecording, SynthError> {
    if spec.target != SoundTarget::Heart {
        return Err(SynthError::InvalidSpec("synth_heart needs a heart spec".into()));
    }
    Ok(AudioRecording::new(synth_samples(spec)?, TARGET_FS)?)
}

pub fn synth_lung(spec: &SynthSpec) -> Result<AudioRecording, SynthError> {
    if spec.target != SoundTarget::Lung {
        return Err(SynthError::InvalidSpec("synth_lung needs a lung spec".into()));
    }
    Ok(AudioRecording::new(synth_samples(spec)?, TARGET_FS)?)
}

pub fn synth(spec: &SynthSpec) -> Result<AudioRecording, SynthError> {
    Ok(AudioRecording::new(synth_samples(spec)?, TARGET_FS)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    /// Items per target.
    pub n: usize,
    pub seed: u64,
    pub recordings_per_patient: usize,
    pub snr_range: (f64, f64),
    pub hr_range: (f64, f64),
    pub br_range: (f64, f64),
    pub targets: Vec<SoundTarget>,
}

impl CorpusConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        CorpusConfig {
            n,
            seed,
            recordings_per_patient: 3,
            snr_range: (-20.0, 20.0),
            hr_range: (90.0, 180.0),
            br_range: (20.0, 60.0),
            targets: vec![SoundTarget::Heart, SoundTarget::Lung],
        }
    }
}

/// One generated corpus item with its generating parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub recording_id: String,
    pub patient_id: String,
    pub target: SoundTarget,
    pub spec: SynthSpec,
    pub label: u8,
}

/// Deterministic item list for a corpus (no audio rendered).
pub fn plan_corpus(cfg: &CorpusConfig) -> Vec<CorpusItem> {
    let mut items = Vec::new();
    for (ti, &target) in cfg.targets.iter().enumerate() {
        let mut rng = rng_for(cfg.seed, 100 + ti as u64);
        let per = cfg.recordings_per_patient.max(1);
        let mut rate = 0.0;
        for i in 0..cfg.n {
            let patient = i / per;
            if i % per == 0 {
                let (lo, hi) = match target {
                    SoundTarget::Heart => cfg.hr_range,
                    SoundTarget::Lung => cfg.br_range,
                };
                rate = rng.gen_range(lo..=hi);
            }
            let snr = rng.gen_range(cfg.snr_range.0..=cfg.snr_range.1);
            let noise = NoiseKind::ALL[rng.gen_range(0..NoiseKind::ALL.len())];
            let seed = rng.gen::<u64>();
            let spec = SynthSpec { target, rate, snr_db: snr, noise, seed, duration_s: DEFAULT_DURATION_S };
            items.push(CorpusItem {
                recording_id: format!("{}_{:04}", target.as_str(), i),
                patient_id: format!("{}_p{:03}", target.as_str(), patient),
                target,
                spec,
                label: label_map(snr),
            });
        }
    }
    items
}

#[derive(Debug, Serialize)]
struct TruthRow<'a> {
    recording_id: &'a str,
    patient_id: &'a str,
    target: SoundTarget,
    snr_db: f64,
    rate: f64,
    noise: NoiseKind,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct AnnotationRow<'a> {
    recording_id: &'a str,
    rater_id: &'a str,
    score: u8,
}

/// Renders a corpus into `dir`: one float WAV per item plus `manifest.csv`,
/// `annotations.csv` (a single synthetic rater) and `truth.csv`.
pub fn write_corpus(cfg: &CorpusConfig, dir: &Path) -> Result<Vec<CorpusItem>, SynthError> {
    use rayon::prelude::*;
    std::fs::create_dir_all(dir)?;
    let items = plan_corpus(cfg);
    items.par_iter().try_for_each(|it| -> Result<(), SynthError> {
        let rec = synth(&it.spec)?;
        write_wav(&dir.join(format!("{}.wav", it.recording_id)), &rec, WavFormat::Float32)?;
        Ok(())
    })?;
    let entries = items
        .iter()
        .map(|it| ManifestEntry {
            recording_id: it.recording_id.clone(),
            patient_id: it.patient_id.clone(),
            file_path: format!("{}.wav", it.recording_id),
            sound_target: it.target,
            label: Some(it.label),
        })
        .collect();
    let manifest = DatasetManifest::new(entries, dir)?;
    std::fs::write(dir.join("manifest.csv"), manifest.to_csv()?)?;

    let mut w = csv::Writer::from_path(dir.join("annotations.csv"))?;
    for it in &items {
        w.serialize(AnnotationRow { recording_id: &it.recording_id, rater_id: "synth", score: it.label })?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("truth.csv"))?;
    for it in &items {
        w.serialize(TruthRow {
            recording_id: &it.recording_id,
            patient_id: &it.patient_id,
            target: it.target,
            snr_db: it.spec.snr_db,
            rate: it.spec.rate,
            noise: it.spec.noise,
            seed: it.spec.seed,
        })?;
    }
    w.flush()?;
    Ok(items)
}

/// Reads `truth.csv` written by [`write_corpus`]: recording id to (snr, rate).
pub fn read_truth(path: &Path) -> Result<Vec<(String, f64, f64)>, SynthError> {
    #[derive(Deserialize)]
    struct Row {
        recording_id: String,
        snr_db: f64,
        rate: f64,
    }
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: Row = row?;
        out.push((row.recording_id, row.snr_db, row.rate));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::autocorr::autocorr_centered;
    use crate::dsp::envelope::{compute_envelope, EnvelopeKind};
    use crate::dsp::spectral::{band_power_ratio, psd};

    #[test]
    fn heart_cycle_duration_from_autocorrelation() {
        let (x, _) = synth_heart_clean(120.0, 10.0, 4);
        let env = compute_envelope(&x, 4000.0, EnvelopeKind::Homomorphic).unwrap().at_frame_rate();
        let ac = autocorr_centered(&env.values, env.rate, None);
        let (lag, _) = ac.peak_in(60.0 / 220.0, 60.0 / 70.0).unwrap();
        assert!((lag - 0.5).abs() <= 0.02, "{lag}");
    }

    #[test]
    fn seeds_are_deterministic() {
        let a = synth(&SynthSpec::heart(120.0, 5.0, 9).with_noise(NoiseKind::Babble)).unwrap();
        let b = synth(&SynthSpec::heart(120.0, 5.0, 9).with_noise(NoiseKind::Babble)).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = synth(&SynthSpec::heart(120.0, 5.0, 10).with_noise(NoiseKind::Babble)).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn heart_energy_in_heart_band() {
        let (x, _) = synth_heart_clean(140.0, 10.0, 1);
        let s = psd(&x, 4000.0).unwrap();
        assert!(band_power_ratio(&s, 50.0, 250.0).unwrap() >= 0.8);
    }

    #[test]
    fn lung_energy_in_lung_band() {
        let (x, peaks) = synth_lung_clean(40.0, 10.0, 1);
        let s = psd(&x, 4000.0).unwrap();
        assert!(band_power_ratio(&s, 200.0, 1000.0).unwrap() >= 0.8);
        assert!((6..=7).contains(&peaks.len()));
    }

    #[test]
    fn mix_hits_requested_snr() {
        let clean = synth_heart_clean(120.0, 10.0, 2).0;
        for kind in NoiseKind::ALL {
            let noise = synth_noise(kind, clean.len(), 5);
            for snr in [0.0, -10.0, 7.5] {
                let g = noise_gain(&clean, &noise, snr).unwrap();
                let scaled: Vec<f64> = noise.iter().map(|v| v * g).collect();
                let ratio = power(&clean) / power(&scaled);
                assert!((ratio - 10f64.powf(snr / 10.0)).abs() < 1e-6 * ratio.max(1.0), "{kind:?} {snr}");
            }
        }
        let out = mix(&clean, &synth_noise(NoiseKind::White, clean.len(), 1), 0.0).unwrap();
        let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infinite_snr_is_identity_and_zero_power_errors() {
        let clean = vec![0.1, -0.2, 0.3];
        assert_eq!(mix(&clean, &[0.0; 3], f64::INFINITY).unwrap(), clean);
        assert!(matches!(mix(&clean, &[0.0; 3], 0.0), Err(SynthError::ZeroPower)));
        assert!(matches!(mix(&[0.0; 3], &clean, 0.0), Err(SynthError::ZeroPower)));
    }

    #[test]
    fn label_staircase() {
        assert_eq!(label_map(-20.0), 1);
        assert_eq!(label_map(0.0), 3);
        assert_eq!(label_map(15.0), 5);
        assert_eq!(label_map(-10.0), 2);
        assert_eq!(label_map(10.0), 5);
        let mut prev = 0;
        for i in -300..300 {
            let l = label_map(i as f64 / 10.0);
            assert!(l >= prev);
            prev = l;
        }
    }

    #[test]
    fn invalid_rates_rejected() {
        assert!(synth(&SynthSpec::heart(60.0, 0.0, 1)).is_err());
        assert!(synth(&SynthSpec::lung(90.0, 0.0, 1)).is_err());
    }

    #[test]
    fn corpus_plan_groups_patients() {
        let items = plan_corpus(&CorpusConfig::new(9, 3));
        assert_eq!(items.len(), 18);
        let heart: Vec<_> = items.iter().filter(|i| i.target == SoundTarget::Heart).collect();
        assert_eq!(heart[0].patient_id, heart[2].patient_id);
        assert_ne!(heart[2].patient_id, heart[3].patient_id);
        assert_eq!(heart[0].spec.rate, heart[1].spec.rate);
        assert_eq!(plan_corpus(&CorpusConfig::new(9, 3)), items);
    }

    #[test]
    fn truth_states_cycle() {
        let (_, truth) = synth_heart_clean(120.0, 10.0, 3);
        let st = truth.frame_states(500, 50.0);
        for w in st.windows(2) {
            assert!(w[1] == w[0] || w[1] == (w[0] + 1) % 4, "{w:?}");
        }
    }
}
