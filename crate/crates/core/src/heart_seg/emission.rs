//! Discriminative emission models for the heart-state HSMM and their
//! versioned JSON artifact.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::hsmm::N_STATES;
use super::springer::{frame_features, SPRINGER_ENVELOPES};
use super::{DurationParams, SegError};
use crate::dsp::envelope::{EnvelopeKind, FRAME_RATE};
use crate::optim::{minimize, LbfgsConfig};
use crate::signal_io::{filter_samples, FilterPhase, SoundTarget, TARGET_FS};
use crate::synth::{mix, synth_heart_clean, synth_noise, NoiseKind};

pub const ARTIFACT_VERSION: u32 = 1;
const BUNDLED_JSON: &str = include_str!("../../assets/emission_v1.json");

/// Multinomial logistic model `P(state | frame)` over the features
/// `[1, z_1..z_k, z_1^2..z_k^2]` of `k` z-scored envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxEmission {
    pub envelopes: Vec<EnvelopeKind>,
    /// `weights[state]`, length `1 + 2k`
    pub weights: Vec<Vec<f64>>,
    pub log_prior: [f64; N_STATES],
}

fn expand(z: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    out.extend_from_slice(z);
    out.extend(z.iter().map(|v| v * v));
}

fn log_softmax(scores: &mut [f64; N_STATES]) {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    scores.iter_mut().for_each(|s| *s -= lse);
}

impl SoftmaxEmission {
    pub fn n_params(k: usize) -> usize {
        1 + 2 * k
    }

    /// `log P(s | frame) - log P(s)` for every frame. `features[j]` is the
    /// z-scored track of `self.envelopes[j]`.
    pub fn log_emissions(&self, features: &[Vec<f64>]) -> Vec<[f64; N_STATES]> {
        let frames = features.iter().map(Vec::len).min().unwrap_or(0);
        let mut z = vec![0.0; features.len()];
        let mut phi = Vec::new();
        (0..frames)
            .map(|t| {
                for (j, f) in features.iter().enumerate() {
                    z[j] = f[t];
                }
                expand(&z, &mut phi);
                let mut sc = [0.0; N_STATES];
                for (s, w) in self.weights.iter().enumerate() {
                    sc[s] = w.iter().zip(&phi).map(|(a, b)| a * b).sum();
                }
                log_softmax(&mut sc);
                for s in 0..N_STATES {
                    sc[s] -= self.log_prior[s];
                }
                sc
            })
            .collect()
    }

    /// Penalized maximum likelihood over frames pooled from several recordings.
    /// `features[r][j][t]`, `labels[r][t]` in `0..4`.
    pub fn fit(envelopes: Vec<EnvelopeKind>, features: &[Vec<Vec<f64>>], labels: &[Vec<usize>], l2: f64) -> Self {
        let k = envelopes.len();
        let p = Self::n_params(k);
        let mut rows: Vec<(Vec<f64>, usize)> = Vec::new();
        let mut counts = [0usize; N_STATES];
        let mut z = vec![0.0; k];
        for (f, lab) in features.iter().zip(labels) {
            let frames = f.iter().map(Vec::len).min().unwrap_or(0).min(lab.len());
            for t in 0..frames {
                for j in 0..k {
                    z[j] = f[j][t];
                }
                let mut phi = Vec::with_capacity(p);
                expand(&z, &mut phi);
                rows.push((phi, lab[t]));
                counts[lab[t]] += 1;
            }
        }
        let n = rows.len().max(1) as f64;
        let objective = |w: &[f64], g: &mut [f64]| -> f64 {
            g.iter_mut().for_each(|v| *v = 0.0);
            let mut nll = 0.0;
            for (phi, y) in &rows {
                let mut sc = [0.0; N_STATES];
                for s in 0..N_STATES {
                    sc[s] = w[s * p..(s + 1) * p].iter().zip(phi).map(|(a, b)| a * b).sum();
                }
                log_softmax(&mut sc);
                nll -= sc[*y];
                for s in 0..N_STATES {
                    let r = sc[s].exp() - if s == *y { 1.0 } else { 0.0 };
                    for (gi, x) in g[s * p..(s + 1) * p].iter_mut().zip(phi) {
                        *gi += r * x;
                    }
                }
            }
            let mut f = nll / n;
            g.iter_mut().for_each(|v| *v /= n);
            for s in 0..N_STATES {
                for i in 1..p {
                    let wi = w[s * p + i];
                    f += 0.5 * l2 * wi * wi;
                    g[s * p + i] += l2 * wi;
                }
            }
            f
        };
        let res = minimize(objective, vec![0.0; N_STATES * p], LbfgsConfig { max_iter: 300, ..Default::default() });
        let total: usize = counts.iter().sum();
        let log_prior = counts.map(|c| ((c.max(1)) as f64 / total.max(1) as f64).ln());
        SoftmaxEmission {
            envelopes,
            weights: (0..N_STATES).map(|s| res.x[s * p..(s + 1) * p].to_vec()).collect(),
            log_prior,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub seed: u64,
    pub recordings: usize,
    pub heart_rates: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub l2: f64,
}

/// Emission and duration models shipped with the library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionArtifact {
    pub version: u32,
    pub frame_rate: f64,
    pub durations: DurationParams,
    /// Joint model over the four segmentation envelopes.
    pub springer: SoftmaxEmission,
    /// Single-envelope models, one per heart envelope kind.
    pub per_envelope: Vec<SoftmaxEmission>,
    pub training: TrainingInfo,
}

impl EmissionArtifact {
    pub fn bundled() -> &'static EmissionArtifact {
        static CELL: OnceLock<EmissionArtifact> = OnceLock::new();
        CELL.get_or_init(|| Self::from_json(BUNDLED_JSON).expect("bundled emission artifact is valid"))
    }

    pub fn from_json(text: &str) -> Result<Self, SegError> {
        let a: EmissionArtifact = serde_json::from_str(text).map_err(|e| SegError::InvalidArtifact(e.to_string()))?;
        a.validate()?;
        Ok(a)
    }

    pub fn load(path: &Path) -> Result<Self, SegError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SegError::MissingArtifact(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serializes")
    }

    pub fn validate(&self) -> Result<(), SegError> {
        if self.version != ARTIFACT_VERSION {
            return Err(SegError::InvalidArtifact(format!("version {} (expected {ARTIFACT_VERSION})", self.version)));
        }
        if (self.frame_rate - FRAME_RATE).abs() > 1e-9 {
            return Err(SegError::InvalidArtifact(format!("frame rate {}", self.frame_rate)));
        }
        for m in std::iter::once(&self.springer).chain(&self.per_envelope) {
            let p = SoftmaxEmission::n_params(m.envelopes.len());
            if m.weights.len() != N_STATES || m.weights.iter().any(|w| w.len() != p) {
                return Err(SegError::InvalidArtifact("weight shape".into()));
            }
        }
        Ok(())
    }

    pub fn per_envelope(&self, kind: EnvelopeKind) -> Option<&SoftmaxEmission> {
        self.per_envelope.iter().find(|m| m.envelopes == [kind])
    }
}

/// Trains the emission models on synthetic heart recordings with known state
/// timing.
pub fn train_artifact(seed: u64) -> EmissionArtifact {
    const L2: f64 = 1e-3;
    let heart_rates = vec![80.0, 100.0, 120.0, 140.0, 160.0, 180.0, 200.0];
    let snrs = vec![f64::INFINITY, 15.0, 8.0, 3.0];
    let fs = TARGET_FS as f64;
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    let mut i = 0u64;
    for &hr in &heart_rates {
        for &snr in &snrs {
            for rep in 0..2u64 {
                let item_seed = seed.wrapping_mul(1_000_003).wrapping_add(i);
                i += 1;
                let (clean, truth) = synth_heart_clean(hr, 10.0, item_seed);
                let noise = synth_noise(NoiseKind::ALL[((i + rep) % 4) as usize], clean.len(), item_seed);
                let x = mix(&clean, &noise, snr).expect("non-silent synth");
                let band = filter_samples(&x, SoundTarget::Heart, FilterPhase::ZeroPhase).expect("valid band");
                let f = frame_features(&band, fs, EnvelopeKind::heart())
                    .expect("10 s input");
                let frames = f[0].len();
                labels.push(truth.frame_states(frames, FRAME_RATE));
                feats.push(f);
            }
        }
    }
    let heart = EnvelopeKind::heart();
    let pick = |kinds: &[EnvelopeKind]| -> Vec<Vec<Vec<f64>>> {
        feats
            .iter()
            .map(|f| kinds.iter().map(|k| f[heart.iter().position(|h| h == k).unwrap()].clone()).collect())
            .collect()
    };
    let springer = SoftmaxEmission::fit(SPRINGER_ENVELOPES.to_vec(), &pick(&SPRINGER_ENVELOPES), &labels, L2);
    let per_envelope = heart
        .iter()
        .map(|&k| SoftmaxEmission::fit(vec![k], &pick(&[k]), &labels, L2))
        .collect();
    EmissionArtifact {
        version: ARTIFACT_VERSION,
        frame_rate: FRAME_RATE,
        durations: DurationParams::default(),
        springer,
        per_envelope,
        training: TrainingInfo {
            seed,
            recordings: labels.len(),
            heart_rates,
            snr_db: snrs.iter().map(|s| if s.is_finite() { *s } else { 99.0 }).collect(),
            l2: L2,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_artifact_loads() {
        let a = EmissionArtifact::bundled();
        assert_eq!(a.version, ARTIFACT_VERSION);
        assert_eq!(a.per_envelope.len(), 6);
        for k in EnvelopeKind::heart() {
            assert!(a.per_envelope(*k).is_some());
        }
    }

    #[test]
    fn missing_artifact_is_an_error() {
        let err = EmissionArtifact::load(Path::new("/nonexistent/emission.json")).unwrap_err();
        assert!(matches!(err, SegError::MissingArtifact(_)));
    }

    #[test]
    #[ignore = "retrains all emission models (about a minute)"]
    fn retraining_reproduces_bundled_artifact() {
        let bundled = EmissionArtifact::bundled();
        let fresh = train_artifact(bundled.training.seed);
        for (a, b) in std::iter::once((&fresh.springer, &bundled.springer)).chain(fresh.per_envelope.iter().zip(&bundled.per_envelope)) {
            for (wa, wb) in a.weights.iter().flatten().zip(b.weights.iter().flatten()) {
                assert!((wa - wb).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn version_mismatch_rejected() {
        let mut a = EmissionArtifact::bundled().clone();
        a.version = 99;
        assert!(EmissionArtifact::from_json(&a.to_json()).is_err());
    }
}
