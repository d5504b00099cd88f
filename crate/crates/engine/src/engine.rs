use std::sync::Arc;
use std::time::Instant;

use neoscope_core::dsp::resample::StreamResampler;
use neoscope_core::features::{extract_with, ExtractConfig, Mode};
use neoscope_core::heart_seg::EmissionArtifact;
use neoscope_core::signal_io::{filter_samples, AudioRecording, FilterPhase, SoundTarget, SEGMENT_LEN, SEGMENT_S, TARGET_FS};
use neoscope_core::train::{predict_quality, QualityModel};
use neoscope_core::vitals::{br_point, hr_schmidt_point, BR_WINDOW_S, HR_WINDOW_S};

use crate::ring::RingBuffer;
use crate::schema::{MarkerMessage, ScoreMessage, SCHEMA_VERSION};
use crate::EngineError;

pub const BUFFER_CAPACITY: usize = SEGMENT_LEN;

/// Heart and lung fast-mode models, checked for the streaming feature set.
#[derive(Debug, Clone)]
pub struct Models {
    pub heart: QualityModel,
    pub lung: QualityModel,
}

impl Models {
    pub fn new(heart: QualityModel, lung: QualityModel) -> Result<Self, EngineError> {
        for (m, want) in [(&heart, SoundTarget::Heart), (&lung, SoundTarget::Lung)] {
            if m.target != want {
                return Err(EngineError::Model(format!("expected a {} model, got {}", want.as_str(), m.target.as_str())));
            }
            if m.mode != Mode::Fast {
                return Err(EngineError::Model(format!("{} model is not a fast-mode model", want.as_str())));
            }
            if m.phase != FilterPhase::Causal {
                return Err(EngineError::Model(format!(
                    "{} model was trained on zero-phase features; streaming needs causal ones",
                    want.as_str()
                )));
            }
        }
        Ok(Models { heart, lung })
    }

    /// Assigns each model to its slot by target.
    pub fn from_pair(a: QualityModel, b: QualityModel) -> Result<Self, EngineError> {
        if a.target == SoundTarget::Lung {
            Self::new(b, a)
        } else {
            Self::new(a, b)
        }
    }
}

/// A coherent copy of the buffer taken at stream time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// `None` until the buffer first fills.
    pub samples: Option<Vec<f64>>,
    pub overruns: u64,
}

/// Ingest side: resampling, the ring buffer and overrun accounting.
#[derive(Debug)]
pub struct Ingest {
    ring: RingBuffer,
    resampler: Option<(u32, StreamResampler)>,
    total: u64,
    unseen: usize,
    overruns: u64,
}

impl Default for Ingest {
    fn default() -> Self {
        Self::new()
    }
}

impl Ingest {
    pub fn new() -> Self {
        Ingest { ring: RingBuffer::new(BUFFER_CAPACITY), resampler: None, total: 0, unseen: 0, overruns: 0 }
    }

    /// Appends samples recorded at `fs` (at least 4 kHz). Samples evicted
    /// before any snapshot saw them count as one overrun per push.
    pub fn push(&mut self, samples: &[f64], fs: u32) -> Result<usize, EngineError> {
        if fs < TARGET_FS {
            return Err(EngineError::InvalidInput(format!("sample rate {fs} Hz below {TARGET_FS}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(EngineError::InvalidInput("non-finite samples".into()));
        }
        let x = if fs == TARGET_FS {
            self.resampler = None;
            samples.to_vec()
        } else {
            if self.resampler.as_ref().map(|r| r.0) != Some(fs) {
                let r = StreamResampler::new(fs, TARGET_FS).map_err(|e| EngineError::InvalidInput(e.to_string()))?;
                self.resampler = Some((fs, r));
            }
            self.resampler.as_mut().expect("resampler set").1.process(samples)
        };
        self.ring.extend(&x);
        self.total += x.len() as u64;
        if self.unseen + x.len() > BUFFER_CAPACITY {
            self.overruns += 1;
        }
        self.unseen = (self.unseen + x.len()).min(BUFFER_CAPACITY);
        Ok(x.len())
    }

    /// Stream seconds ingested so far.
    pub fn t(&self) -> f64 {
        self.total as f64 / TARGET_FS as f64
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn overruns(&self) -> u64 {
        self.overruns
    }

    pub fn snapshot(&mut self) -> Snapshot {
        self.unseen = 0;
        Snapshot {
            t: self.t(),
            samples: self.ring.is_full().then(|| self.ring.snapshot()),
            overruns: self.overruns,
        }
    }

    pub fn marker(&self, label: impl Into<String>) -> MarkerMessage {
        MarkerMessage { version: SCHEMA_VERSION, t: self.t(), label: label.into() }
    }
}

/// Scoring side; immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct Scorer {
    models: Arc<Models>,
    artifact: &'static EmissionArtifact,
}

impl Scorer {
    pub fn new(models: Models) -> Self {
        Scorer { models: Arc::new(models), artifact: EmissionArtifact::bundled() }
    }

    pub fn models(&self) -> &Models {
        &self.models
    }

    /// Fast features, clamped qualities and trailing-window vitals for a
    /// snapshot; a warm-up message while the buffer is not yet full.
    pub fn score(&self, snap: &Snapshot) -> Result<ScoreMessage, EngineError> {
        let start = Instant::now();
        let mut msg = ScoreMessage {
            version: SCHEMA_VERSION,
            t: snap.t,
            heart_quality: None,
            lung_quality: None,
            hr: None,
            br: None,
            latency_ms: 0.0,
            window_s: SEGMENT_S,
            warmup: true,
            overruns: snap.overruns,
        };
        if let Some(x) = &snap.samples {
            let rec = AudioRecording::new(x.clone(), TARGET_FS).map_err(|e| EngineError::InvalidInput(e.to_string()))?;
            let fv = extract_with(&rec, &ExtractConfig::streaming(), self.artifact)
                .map_err(|e| EngineError::InvalidInput(e.to_string()))?;
            msg.heart_quality = Some(predict_quality(&self.models.heart, &fv).map_err(|e| EngineError::Model(e.to_string()))?);
            msg.lung_quality = Some(predict_quality(&self.models.lung, &fv).map_err(|e| EngineError::Model(e.to_string()))?);
            let fs = TARGET_FS as f64;
            let heart = filter_samples(x, SoundTarget::Heart, FilterPhase::Causal).map_err(|e| EngineError::InvalidInput(e.to_string()))?;
            let lung = filter_samples(x, SoundTarget::Lung, FilterPhase::Causal).map_err(|e| EngineError::InvalidInput(e.to_string()))?;
            let tail = |v: &[f64], s: f64| v[v.len() - (s * fs) as usize..].to_vec();
            msg.hr = Some(hr_schmidt_point(&tail(&heart, HR_WINDOW_S), fs, snap.t).into());
            msg.br = Some(br_point(&tail(&lung, BR_WINDOW_S), fs, snap.t).into());
            msg.warmup = false;
        }
        msg.latency_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(msg)
    }
}

/// Single-threaded engine: push audio, tick once per second.
#[derive(Debug)]
pub struct Engine {
    pub ingest: Ingest,
    pub scorer: Scorer,
    last_t: Option<f64>,
}

impl Engine {
    pub fn new(models: Models) -> Self {
        Engine { ingest: Ingest::new(), scorer: Scorer::new(models), last_t: None }
    }

    pub fn push(&mut self, samples: &[f64], fs: u32) -> Result<usize, EngineError> {
        self.ingest.push(samples, fs)
    }

    /// Scores the current buffer. Fails with `NoNewAudio` when nothing
    /// arrived since the previous tick, keeping message times increasing.
    pub fn tick(&mut self) -> Result<ScoreMessage, EngineError> {
        let t = self.ingest.t();
        if self.last_t.is_some_and(|last| t <= last) {
            return Err(EngineError::NoNewAudio);
        }
        let snap = self.ingest.snapshot();
        let msg = self.scorer.score(&snap)?;
        self.last_t = Some(t);
        Ok(msg)
    }
}

/// Streams `x` (at 4 kHz) through an engine in `hop_s` chunks with one tick
/// per chunk, as a live session would.
pub fn replay(engine: &mut Engine, x: &[f64], hop_s: f64) -> Result<Vec<ScoreMessage>, EngineError> {
    let hop = ((hop_s * TARGET_FS as f64).round() as usize).max(1);
    let mut out = Vec::new();
    for chunk in x.chunks(hop) {
        engine.push(chunk, TARGET_FS)?;
        out.push(engine.tick()?);
    }
    Ok(out)
}
