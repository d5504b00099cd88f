//! Recording ingest: WAV decoding, resampling to 4 kHz, band splitting,
//! 10 s segmentation and dataset manifests.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::filter::{butterworth, BandSpec, Sos};
use crate::dsp::resample::resample;
use crate::dsp::DspError;

/// Working sample rate of every analysis stage.
pub const TARGET_FS: u32 = 4000;
/// Analysis window length.
pub const SEGMENT_S: f64 = 10.0;
pub const SEGMENT_LEN: usize = 40_000;
pub const BAND_ORDER: usize = 4;
pub const HEART_BAND: (f64, f64) = (50.0, 250.0);
pub const LUNG_BAND: (f64, f64) = (200.0, 1000.0);

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed container: {0}")]
    MalformedContainer(String),
    #[error("unsupported encoding: {0}")]
    Unsupported(String),
    #[error("upsampling unsupported: input rate {0} Hz is below {TARGET_FS} Hz")]
    UpsamplingUnsupported(u32),
    #[error("segment out of bounds: start {start} s + {SEGMENT_S} s exceeds duration {duration} s")]
    OutOfBounds { start: f64, duration: f64 },
    #[error("invalid recording: {0}")]
    Invalid(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Raw,
    HeartBand,
    LungBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoundTarget {
    Heart,
    Lung,
}

impl SoundTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            SoundTarget::Heart => "heart",
            SoundTarget::Lung => "lung",
        }
    }

    pub fn band(self) -> (f64, f64) {
        match self {
            SoundTarget::Heart => HEART_BAND,
            SoundTarget::Lung => LUNG_BAND,
        }
    }
}

impl std::str::FromStr for SoundTarget {
    type Err = SignalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heart" => Ok(SoundTarget::Heart),
            "lung" => Ok(SoundTarget::Lung),
            other => Err(SignalError::Manifest(format!("unknown target {other:?}"))),
        }
    }
}

/// How band filters are applied: forward-backward offline, single causal pass
/// when streaming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterPhase {
    ZeroPhase,
    Causal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioRecording {
    pub samples: Vec<f64>,
    pub fs: u32,
    pub patient_id: String,
    pub recording_id: String,
    pub band: Band,
    pub start_offset: f64,
}

impl AudioRecording {
    pub fn new(samples: Vec<f64>, fs: u32) -> Result<Self, SignalError> {
        let rec = AudioRecording {
            samples,
            fs,
            patient_id: String::new(),
            recording_id: String::new(),
            band: Band::Raw,
            start_offset: 0.0,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn with_ids(mut self, patient_id: impl Into<String>, recording_id: impl Into<String>) -> Self {
        self.patient_id = patient_id.into();
        self.recording_id = recording_id.into();
        self
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs as f64
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if self.fs == 0 {
            return Err(SignalError::Invalid("sample rate must be positive".into()));
        }
        if self.samples.is_empty() {
            return Err(SignalError::Invalid("no samples".into()));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::Invalid(format!("non-finite sample at index {i}")));
        }
        Ok(())
    }
}

/// Reads a PCM16 or 32-bit float WAV. Multichannel files contribute their
/// first channel.
pub fn load_wav(path: &Path) -> Result<AudioRecording, SignalError> {
    let file = File::open(path)?;
    let reader = hound::WavReader::new(BufReader::new(file)).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => {
            return Err(SignalError::Unsupported(format!("{bits}-bit {fmt:?}")));
        }
    };
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut rec = AudioRecording::new(samples, spec.sample_rate)?;
    rec.recording_id = id;
    Ok(rec)
}

// The file is already open, so read failures mean a short or corrupt container.
fn map_hound(e: hound::Error) -> SignalError {
    match e {
        hound::Error::IoError(io) => SignalError::MalformedContainer(io.to_string()),
        hound::Error::FormatError(m) => SignalError::MalformedContainer(m.to_string()),
        hound::Error::Unsupported => SignalError::Unsupported("wav feature not supported".into()),
        other => SignalError::MalformedContainer(other.to_string()),
    }
}

fn write_err(e: hound::Error) -> SignalError {
    match e {
        hound::Error::IoError(io) => SignalError::Io(io),
        other => SignalError::Unsupported(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavFormat {
    Pcm16,
    Float32,
}

pub fn write_wav(path: &Path, rec: &AudioRecording, format: WavFormat) -> Result<(), SignalError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rec.fs,
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => hound::SampleFormat::Int,
            WavFormat::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut w = hound::WavWriter::new(BufWriter::new(File::create(path)?), spec).map_err(write_err)?;
    for &v in &rec.samples {
        match format {
            WavFormat::Pcm16 => {
                let q = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                w.write_sample(q).map_err(write_err)?;
            }
            WavFormat::Float32 => w.write_sample(v as f32).map_err(write_err)?,
        }
    }
    w.finalize().map_err(write_err)?;
    Ok(())
}

/// Anti-aliased rational resampling to 4 kHz.
pub fn resample_to_4k(rec: &AudioRecording) -> Result<AudioRecording, SignalError> {
    if rec.fs < TARGET_FS {
        return Err(SignalError::UpsamplingUnsupported(rec.fs));
    }
    let samples = resample(&rec.samples, rec.fs, TARGET_FS)?;
    Ok(AudioRecording { samples, fs: TARGET_FS, ..rec.clone() })
}

/// The 4th-order (8-pole) Butterworth bandpass for a target at `fs`.
pub fn band_sos(target: SoundTarget, fs: f64) -> Result<Sos, SignalError> {
    let (lo, hi) = target.band();
    Ok(butterworth(BAND_ORDER, BandSpec::Bandpass(lo, hi), fs)?)
}

pub fn band_filter(rec: &AudioRecording, target: SoundTarget) -> Result<AudioRecording, SignalError> {
    band_filter_with(rec, target, FilterPhase::ZeroPhase)
}

pub fn band_filter_with(
    rec: &AudioRecording,
    target: SoundTarget,
    phase: FilterPhase,
) -> Result<AudioRecording, SignalError> {
    if rec.fs != TARGET_FS {
        return Err(SignalError::Invalid(format!("band filtering expects {TARGET_FS} Hz, got {}", rec.fs)));
    }
    let samples = filter_samples(&rec.samples, target, phase)?;
    let band = match target {
        SoundTarget::Heart => Band::HeartBand,
        SoundTarget::Lung => Band::LungBand,
    };
    Ok(AudioRecording { samples, band, ..rec.clone() })
}

pub fn filter_samples(x: &[f64], target: SoundTarget, phase: FilterPhase) -> Result<Vec<f64>, SignalError> {
    let sos = band_sos(target, TARGET_FS as f64)?;
    Ok(match phase {
        FilterPhase::ZeroPhase => sos.filtfilt(x),
        FilterPhase::Causal => sos.filter(x),
    })
}

/// Exactly 10 s starting at `start` seconds.
pub fn segment_10s(rec: &AudioRecording, start: f64) -> Result<AudioRecording, SignalError> {
    if rec.fs != TARGET_FS {
        return Err(SignalError::Invalid(format!("segmentation expects {TARGET_FS} Hz, got {}", rec.fs)));
    }
    let first = (start * rec.fs as f64).round();
    if !(first >= 0.0) || first as usize + SEGMENT_LEN > rec.samples.len() {
        return Err(SignalError::OutOfBounds { start, duration: rec.duration() });
    }
    let first = first as usize;
    Ok(AudioRecording {
        samples: rec.samples[first..first + SEGMENT_LEN].to_vec(),
        start_offset: rec.start_offset + start,
        ..rec.clone()
    })
}

/// Scales so that max |x| = 1; silent input is returned unchanged.
pub fn peak_normalize(x: &[f64]) -> Vec<f64> {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter().map(|v| v / peak).collect()
    } else {
        x.to_vec()
    }
}

/// Resample to 4 kHz, then cut the 10 s window starting at `start` seconds.
pub fn ingest(rec: &AudioRecording, start: f64) -> Result<AudioRecording, SignalError> {
    let r = resample_to_4k(rec)?;
    segment_10s(&r, start)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub recording_id: String,
    pub patient_id: String,
    #[serde(rename = "path")]
    pub file_path: String,
    #[serde(rename = "target")]
    pub sound_target: SoundTarget,
    pub label: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, root: impl Into<PathBuf>) -> Result<Self, SignalError> {
        let m = DatasetManifest { entries, root: root.into() };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.recording_id.as_str()) {
                return Err(SignalError::Manifest(format!("duplicate recording_id {:?}", e.recording_id)));
            }
            if let Some(l) = e.label {
                if !(1..=5).contains(&l) {
                    return Err(SignalError::Manifest(format!(
                        "label {l} for {:?} outside 1-5",
                        e.recording_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, SignalError> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| SignalError::Manifest(e.to_string()))?;
        let entries = rdr
            .deserialize()
            .collect::<Result<Vec<ManifestEntry>, _>>()
            .map_err(|e| SignalError::Manifest(e.to_string()))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(entries, root)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, SignalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            w.serialize(e).map_err(|e| SignalError::Manifest(e.to_string()))?;
        }
        if self.entries.is_empty() {
            w.write_record(["recording_id", "patient_id", "path", "target", "label"])
                .map_err(|e| SignalError::Manifest(e.to_string()))?;
        }
        w.into_inner().map_err(|e| SignalError::Manifest(e.to_string()))
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.file_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn for_target(&self, target: SoundTarget) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.sound_target == target)
    }

    /// Loads an entry's audio, tagged with the manifest identities.
    pub fn load(&self, entry: &ManifestEntry) -> Result<AudioRecording, SignalError> {
        let rec = load_wav(&self.resolve(entry))?;
        Ok(rec.with_ids(entry.patient_id.clone(), entry.recording_id.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::fft::real_fft;
    use std::f64::consts::PI;

    fn tone(f: f64, fs: u32, secs: f64) -> Vec<f64> {
        let n = (fs as f64 * secs) as usize;
        (0..n).map(|i| (2.0 * PI * f * i as f64 / fs as f64).sin()).collect()
    }

    fn rec(x: Vec<f64>, fs: u32) -> AudioRecording {
        AudioRecording::new(x, fs).unwrap()
    }

    fn power_in(x: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
        let n = x.len();
        let spec = real_fft(x, n);
        (0..=n / 2)
            .filter(|&k| {
                let f = k as f64 * fs / n as f64;
                f >= lo && f <= hi
            })
            .map(|k| spec[k].norm_sqr())
            .sum()
    }

    #[test]
    fn pcm16_full_scale_reads_as_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 44100,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for i in 0..441000 {
            w.write_sample(if i == 5 { 32767i16 } else { 0 }).unwrap();
        }
        w.finalize().unwrap();
        let r = load_wav(&p).unwrap();
        assert_eq!(r.samples.len(), 441000);
        assert_eq!(r.fs, 44100);
        assert!((r.samples[5] - 1.0).abs() <= 1.0 / 32768.0);
    }

    #[test]
    fn first_channel_of_stereo() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for i in 0..100 {
            w.write_sample(i as f32 / 100.0).unwrap();
            w.write_sample(-1.0f32).unwrap();
        }
        w.finalize().unwrap();
        let r = load_wav(&p).unwrap();
        assert_eq!(r.samples.len(), 100);
        assert!((r.samples[50] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn truncated_header_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.wav");
        std::fs::write(&p, b"RIFF\x24\x00\x00\x00WAVEfmt ").unwrap();
        let err = load_wav(&p).unwrap_err();
        assert!(err.to_string().starts_with("malformed container"), "{err}");
    }

    #[test]
    fn wav_round_trip_float() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.wav");
        let r = rec(tone(100.0, 4000, 0.5), 4000);
        write_wav(&p, &r, WavFormat::Float32).unwrap();
        let back = load_wav(&p).unwrap();
        for (a, b) in r.samples.iter().zip(&back.samples) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn resample_keeps_tone_frequency() {
        let out = resample_to_4k(&rec(tone(100.0, 8000, 2.0), 8000)).unwrap();
        assert_eq!(out.fs, 4000);
        assert_eq!(out.samples.len(), 8000);
        let n = out.samples.len();
        let spec = real_fft(&out.samples, n);
        let peak = (0..=n / 2).max_by(|&a, &b| spec[a].norm().total_cmp(&spec[b].norm())).unwrap();
        let f = peak as f64 * 4000.0 / n as f64;
        assert!((f - 100.0).abs() <= 4000.0 / n as f64);
    }

    #[test]
    fn resample_passband_and_alias_rejection() {
        let x = tone(1900.0, 8000, 2.0);
        let out = resample_to_4k(&rec(x.clone(), 8000)).unwrap();
        let body = &out.samples[400..7600];
        let rms_out = (body.iter().map(|v| v * v).sum::<f64>() / body.len() as f64).sqrt();
        let loss_db = 20.0 * (rms_out / (0.5f64).sqrt()).log10();
        assert!(loss_db.abs() < 1.0, "{loss_db} dB");

        let x = tone(2100.0, 8000, 2.0);
        let p_in = power_in(&x, 8000.0, 0.0, 4000.0) / x.len() as f64;
        let out = resample_to_4k(&rec(x, 8000)).unwrap();
        let p_alias = power_in(&out.samples, 4000.0, 1850.0, 1950.0) / out.samples.len() as f64;
        assert!(10.0 * (p_alias / p_in).log10() < -30.0);
    }

    #[test]
    fn upsampling_is_rejected() {
        assert!(matches!(
            resample_to_4k(&rec(vec![0.0; 100], 2000)),
            Err(SignalError::UpsamplingUnsupported(2000))
        ));
    }

    #[test]
    fn band_filter_tone_gains() {
        let x = rec(tone(150.0, 4000, 4.0), 4000);
        let h = band_filter(&x, SoundTarget::Heart).unwrap();
        let l = band_filter(&x, SoundTarget::Lung).unwrap();
        let rms = |v: &[f64]| (v[2000..14000].iter().map(|a| a * a).sum::<f64>() / 12000.0).sqrt();
        let ref_rms = rms(&x.samples);
        // zero-phase filtering squares the magnitude response
        assert!((20.0 * (rms(&h.samples) / ref_rms).log10()).abs() < 1.0);
        assert!(20.0 * (rms(&l.samples) / ref_rms).log10() <= -20.0);
        assert_eq!(h.band, Band::HeartBand);
    }

    #[test]
    fn segmentation_bounds() {
        let r = rec(vec![0.1; 60 * 4000], 4000);
        assert_eq!(segment_10s(&r, 0.0).unwrap().samples.len(), SEGMENT_LEN);
        assert_eq!(segment_10s(&r, 50.0).unwrap().samples.len(), SEGMENT_LEN);
        assert!(matches!(segment_10s(&r, 51.0), Err(SignalError::OutOfBounds { .. })));
    }

    #[test]
    fn contiguous_segments_reconstruct_source() {
        let x: Vec<f64> = (0..120_000).map(|i| (i as f64 * 0.001).sin()).collect();
        let r = rec(x.clone(), 4000);
        let mut joined = Vec::new();
        for k in 0..3 {
            joined.extend(segment_10s(&r, 10.0 * k as f64).unwrap().samples);
        }
        assert_eq!(joined, x);
    }

    #[test]
    fn manifest_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![
            ManifestEntry {
                recording_id: "r1".into(),
                patient_id: "p1".into(),
                file_path: "r1.wav".into(),
                sound_target: SoundTarget::Heart,
                label: Some(4),
            },
            ManifestEntry {
                recording_id: "r2".into(),
                patient_id: "p1".into(),
                file_path: "r2.wav".into(),
                sound_target: SoundTarget::Lung,
                label: None,
            },
        ];
        let m = DatasetManifest::new(entries.clone(), dir.path()).unwrap();
        let p = dir.path().join("manifest.csv");
        std::fs::write(&p, m.to_csv().unwrap()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("recording_id,patient_id,path,target,label\n"));
        let back = DatasetManifest::read(&p).unwrap();
        assert_eq!(back.entries, entries);
        assert_eq!(back.resolve(&back.entries[0]), dir.path().join("r1.wav"));

        let mut dup = entries.clone();
        dup[1].recording_id = "r1".into();
        assert!(DatasetManifest::new(dup, "").is_err());
        let mut bad = entries;
        bad[0].label = Some(6);
        assert!(DatasetManifest::new(bad, "").is_err());
    }

    #[test]
    fn non_finite_samples_rejected() {
        assert!(AudioRecording::new(vec![0.0, f64::NAN], 4000).is_err());
        assert!(AudioRecording::new(vec![], 4000).is_err());
    }
}
