use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use neoscope_core::annotations::{agreement_report, RaterPanel};
use neoscope_core::features::{self, extract_with, ExtractConfig, FeatureVector};
use neoscope_core::heart_seg::EmissionArtifact;
use neoscope_core::signal_io::{resample_to_4k, segment_10s, AudioRecording, DatasetManifest, SoundTarget, SEGMENT_LEN};
use neoscope_core::train::Dataset;
use rayon::prelude::*;

/// Loads an entry at 4 kHz, keeping the first 10 s of longer recordings.
pub fn load_entry(manifest: &DatasetManifest, e: &neoscope_core::signal_io::ManifestEntry) -> Result<AudioRecording> {
    let rec = manifest.load(e).with_context(|| format!("loading {}", e.recording_id))?;
    let rec = resample_to_4k(&rec)?;
    Ok(if rec.samples.len() > SEGMENT_LEN { segment_10s(&rec, 0.0)? } else { rec })
}

pub fn extract_manifest(
    manifest: &DatasetManifest,
    target: Option<SoundTarget>,
    cfg: &ExtractConfig,
) -> Result<Vec<FeatureVector>> {
    let entries: Vec<_> = manifest.entries.iter().filter(|e| target.is_none_or(|t| e.sound_target == t)).collect();
    entries
        .par_iter()
        .map(|e| {
            let rec = load_entry(manifest, e)?;
            extract_with(&rec, cfg, EmissionArtifact::bundled()).with_context(|| format!("extracting {}", e.recording_id))
        })
        .collect()
}

/// Labels from the manifest, or agreement-filtered median labels.
pub fn labels(manifest: &DatasetManifest, annotations: Option<&Path>, threshold: f64) -> Result<BTreeMap<String, u8>> {
    match annotations {
        Some(p) => Ok(agreement_report(&RaterPanel::load(p)?, threshold)?.labels),
        None => Ok(manifest.entries.iter().filter_map(|e| e.label.map(|l| (e.recording_id.clone(), l))).collect()),
    }
}

/// Feature vectors for the target's entries, extracted or read from a cache
/// (which must match the requested mode).
pub fn vectors(
    manifest: &DatasetManifest,
    target: SoundTarget,
    cfg: &ExtractConfig,
    cache: Option<&Path>,
) -> Result<Vec<FeatureVector>> {
    match cache {
        Some(p) => {
            let v = features::io::load(p).with_context(|| format!("reading features {}", p.display()))?;
            if let Some(bad) = v.iter().find(|f| f.mode != cfg.mode) {
                bail!("feature file {} holds {:?}-mode vectors ({})", p.display(), bad.mode, bad.recording_id);
            }
            let ids: std::collections::HashSet<_> = manifest.for_target(target).map(|e| e.recording_id.as_str()).collect();
            Ok(v.into_iter().filter(|f| ids.contains(f.recording_id.as_str())).collect())
        }
        None => extract_manifest(manifest, Some(target), cfg),
    }
}

pub fn dataset(
    manifest: &DatasetManifest,
    target: SoundTarget,
    cfg: &ExtractConfig,
    cache: Option<&Path>,
    labels: &BTreeMap<String, u8>,
) -> Result<Dataset> {
    let v = vectors(manifest, target, cfg, cache)?;
    let patients: BTreeMap<_, _> = manifest.entries.iter().map(|e| (e.recording_id.clone(), e.patient_id.clone())).collect();
    Ok(Dataset::from_vectors(target, cfg.mode, cfg.phase, &v, labels, &patients)?)
}
