use std::collections::BTreeMap;

use anyhow::{Context, Result};
use neoscope_core::features::{extract_with, ExtractConfig};
use neoscope_core::heart_seg::EmissionArtifact;
use neoscope_core::signal_io::{filter_samples, load_wav, resample_to_4k, DatasetManifest, FilterPhase, SoundTarget, TARGET_FS};
use neoscope_core::synth::read_truth;
use neoscope_core::train::{predict_quality, round_level, QualityModel};
use neoscope_core::vitals::{
    aligned_errors, br_estimate, hr_schmidt, hr_springer, read_reference, vital_error, VitalKind, VitalSeries,
    ACCEPTABLE_ERROR,
};
use rayon::prelude::*;
use serde::Serialize;

use super::{require_out, usage};
use crate::args::{Cli, HrMethod, VitalsArgs};
use crate::output::{sibling, write_atomic, write_json, Done};
use crate::pipeline::load_entry;

const FS: f64 = TARGET_FS as f64;

fn hr_series(x: &[f64], method: HrMethod) -> Result<VitalSeries> {
    let heart = filter_samples(x, SoundTarget::Heart, FilterPhase::ZeroPhase)?;
    Ok(match method {
        HrMethod::Schmidt => hr_schmidt(&heart, FS)?,
        HrMethod::Springer => hr_springer(&heart, FS, EmissionArtifact::bundled())?,
    })
}

fn br_series(x: &[f64]) -> Result<VitalSeries> {
    let lung = filter_samples(x, SoundTarget::Lung, FilterPhase::ZeroPhase)?;
    Ok(br_estimate(&lung, FS)?)
}

fn flag_name(f: Option<neoscope_core::vitals::VitalFlag>) -> String {
    f.and_then(|f| serde_json::to_value(f).ok()).and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

#[derive(Serialize)]
struct Agreement {
    n: usize,
    mae: Option<f64>,
    pct_acceptable: Option<f64>,
}

fn agreement(est: &VitalSeries, reference: &VitalSeries) -> Agreement {
    let e = aligned_errors(est, reference);
    let n = e.len();
    let mean = |v: f64| (n > 0).then(|| v / n as f64);
    Agreement {
        n,
        mae: mean(e.iter().sum()),
        pct_acceptable: mean(e.iter().filter(|v| **v < ACCEPTABLE_ERROR).count() as f64),
    }
}

pub fn vitals(cli: &Cli, a: &VitalsArgs) -> Result<Done> {
    let out = require_out(cli)?;
    if let Some(wav) = &a.wav {
        let rec = resample_to_4k(&load_wav(wav)?)?;
        let hr = hr_series(&rec.samples, a.method)?;
        let br = br_series(&rec.samples).ok();
        let by_t: BTreeMap<i64, _> = br.iter().flat_map(|s| s.points.iter()).map(|p| (p.t as i64, *p)).collect();
        let mut csv = String::from("t_seconds,hr_bpm,hr_flag,br_bpm,br_flag\n");
        for p in &hr.points {
            let (bv, bf) = match by_t.get(&(p.t as i64)) {
                Some(b) => (format!("{:.3}", b.value), flag_name(b.flag)),
                None => (String::new(), String::new()),
            };
            csv.push_str(&format!("{},{:.3},{},{bv},{bf}\n", p.t, p.value, flag_name(p.flag)));
        }
        write_atomic(out, csv.as_bytes())?;
        let mut artifacts = vec![out.to_path_buf()];
        if let Some(r) = &a.reference {
            let (hr_ref, br_ref) = read_reference(r)?;
            let report = serde_json::json!({
                "hr": agreement(&hr, &hr_ref),
                "br": br.as_ref().map(|b| agreement(b, &br_ref)),
            });
            let p = sibling(out, "error.json");
            write_json(&p, &report)?;
            artifacts.push(p);
        }
        return Ok(Done::new("vitals", artifacts));
    }

    let manifest = DatasetManifest::read(a.manifest.as_ref().expect("clap requires wav or manifest"))?;
    let truth_path = a.truth.as_ref().ok_or_else(|| usage("--manifest needs --truth with each recording's rate"))?;
    let truth: BTreeMap<String, f64> = read_truth(truth_path)?.into_iter().map(|(id, _, rate)| (id, rate)).collect();
    let models = a.model.iter().map(|p| QualityModel::load(p).with_context(|| p.display().to_string())).collect::<Result<Vec<_>>>()?;

    let rows: Vec<Option<(SoundTarget, VitalSeries, VitalSeries, u8)>> = manifest
        .entries
        .par_iter()
        .map(|e| -> Result<_> {
            let Some(&rate) = truth.get(&e.recording_id) else { return Ok(None) };
            let rec = load_entry(&manifest, e)?;
            let quality = match models.iter().find(|m| m.target == e.sound_target) {
                Some(m) => {
                    let fv = extract_with(&rec, &ExtractConfig { mode: m.mode, phase: m.phase }, EmissionArtifact::bundled())?;
                    Some(round_level(predict_quality(m, &fv)?))
                }
                None => e.label,
            };
            let Some(q) = quality else { return Ok(None) };
            let (est, kind) = match e.sound_target {
                SoundTarget::Heart => (hr_series(&rec.samples, a.method)?, VitalKind::Hr),
                SoundTarget::Lung => (br_series(&rec.samples)?, VitalKind::Br),
            };
            Ok(Some((e.sound_target, est, VitalSeries::constant(kind, rate, rec.duration()), q)))
        })
        .collect::<Result<_>>()?;

    let mut reports = BTreeMap::new();
    let mut artifacts = Vec::new();
    for target in [SoundTarget::Heart, SoundTarget::Lung] {
        let items: Vec<_> = rows.iter().flatten().filter(|r| r.0 == target).map(|r| (r.1.clone(), r.2.clone(), r.3)).collect();
        if items.is_empty() {
            continue;
        }
        let report = vital_error(&items)?;
        let name = if target == SoundTarget::Heart { "hr" } else { "br" };
        let p = sibling(out, &format!("{name}.csv"));
        write_atomic(&p, report.to_csv().as_bytes())?;
        artifacts.push(p);
        reports.insert(name, report);
    }
    if reports.is_empty() {
        return Err(usage("no manifest recording has both a truth rate and a quality level"));
    }
    write_json(out, &reports)?;
    artifacts.insert(0, out.to_path_buf());
    Ok(Done::new("vitals", artifacts).with_summary(
        reports.iter().map(|(k, r)| (k.to_string(), r.overall.mae)).collect::<BTreeMap<_, _>>(),
    ))
}
