//! Socket messages. One JSON object per line; the same objects travel as
//! text frames over the WebSocket upgrade.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use neoscope_core::vitals::{VitalFlag, VitalPoint};
use serde::{Deserialize, Serialize};

use crate::EngineError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Inbound {
    /// `pcm` is base64 of mono little-endian signed 16-bit samples.
    Audio { fs: u32, pcm: String },
    Marker { label: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vital {
    pub value: f64,
    pub flag: Option<VitalFlag>,
}

impl From<VitalPoint> for Vital {
    fn from(p: VitalPoint) -> Self {
        Vital { value: p.value, flag: p.flag }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMessage {
    pub version: u32,
    /// Stream time at the end of the scored window, seconds.
    pub t: f64,
    pub heart_quality: Option<f64>,
    pub lung_quality: Option<f64>,
    pub hr: Option<Vital>,
    pub br: Option<Vital>,
    pub latency_ms: f64,
    pub window_s: f64,
    /// Set while the buffer holds less than one window; scores are null.
    pub warmup: bool,
    pub overruns: u64,
}

impl ScoreMessage {
    /// Copy with `latency_ms` zeroed, for content comparisons.
    pub fn without_latency(&self) -> Self {
        ScoreMessage { latency_ms: 0.0, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerMessage {
    pub version: u32,
    pub t: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outbound {
    Score(ScoreMessage),
    Marker(MarkerMessage),
    Error { version: u32, message: String },
}

impl Outbound {
    pub fn error(message: impl Into<String>) -> Self {
        Outbound::Error { version: SCHEMA_VERSION, message: message.into() }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("message serializes")
    }
}

pub fn parse_inbound(line: &str) -> Result<Inbound, EngineError> {
    serde_json::from_str(line).map_err(|e| EngineError::Protocol(e.to_string()))
}

pub fn encode_pcm(x: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(2 * x.len());
    for &v in x {
        let s = (v.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16;
        bytes.extend_from_slice(&s.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

pub fn decode_pcm(b64: &str) -> Result<Vec<f64>, EngineError> {
    let bytes = STANDARD.decode(b64).map_err(|e| EngineError::Protocol(format!("pcm: {e}")))?;
    if bytes.len() % 2 != 0 {
        return Err(EngineError::Protocol("pcm has an odd byte count".into()));
    }
    Ok(bytes.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / i16::MAX as f64).collect())
}
