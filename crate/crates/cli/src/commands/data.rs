use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use neoscope_core::annotations::{agreement_report, RaterPanel};
use neoscope_core::features::{io as fio, ExtractConfig};
use neoscope_core::signal_io::{ingest as ingest_rec, load_wav, write_wav, AudioRecording, DatasetManifest, ManifestEntry, WavFormat};
use neoscope_core::synth::{write_corpus, CorpusConfig};
use serde::Serialize;

use super::{require_out, usage};
use crate::args::{phase_for, AnnotateArgs, Cli, FeaturesArgs, IngestArgs, SynthArgs};
use crate::output::{write_atomic, write_json, Done};
use crate::pipeline::extract_manifest;

fn write_wav_atomic(path: &Path, rec: &AudioRecording) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = tempfile::Builder::new().suffix(".wav").tempfile_in(dir)?;
    write_wav(tmp.path(), rec, WavFormat::Float32)?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn synth(cli: &Cli, a: &SynthArgs) -> Result<Done> {
    let out = require_out(cli)?;
    if a.n == 0 || a.per_patient == 0 {
        return Err(usage("--n and --per-patient must be positive"));
    }
    let mut cfg = CorpusConfig::new(a.n, cli.seed());
    cfg.recordings_per_patient = a.per_patient;
    if !a.targets.is_empty() {
        cfg.targets = a.targets.iter().map(|&t| t.into()).collect();
    }
    cfg.snr_range = (a.snr_min.unwrap_or(cfg.snr_range.0), a.snr_max.unwrap_or(cfg.snr_range.1));
    if !(cfg.snr_range.0 < cfg.snr_range.1) {
        return Err(usage("--snr-min must be below --snr-max"));
    }
    std::fs::create_dir_all(out)?;
    // render next to the destination, then move each file in
    let tmp = tempfile::Builder::new().prefix(".synth").tempdir_in(out)?;
    let items = write_corpus(&cfg, tmp.path())?;
    let mut names: Vec<PathBuf> = std::fs::read_dir(tmp.path())?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    names.sort();
    for p in &names {
        std::fs::rename(p, out.join(p.file_name().expect("file name")))?;
    }
    write_json(&out.join("corpus.json"), &cfg)?;
    Ok(Done::new("synth", vec![out.join("manifest.csv"), out.join("annotations.csv"), out.join("truth.csv"), out.join("corpus.json")])
        .with_summary(serde_json::json!({ "items": items.len(), "seed": cfg.seed })))
}

pub fn ingest(cli: &Cli, a: &IngestArgs) -> Result<Done> {
    let out = require_out(cli)?;
    if let Some(wav) = &a.wav {
        let rec = ingest_rec(&load_wav(wav)?, a.start)?;
        write_wav_atomic(out, &rec)?;
        return Ok(Done::new("ingest", vec![out.to_path_buf()]));
    }
    let mpath = a.manifest.as_ref().expect("clap requires wav or manifest");
    let manifest = DatasetManifest::read(mpath)?;
    std::fs::create_dir_all(out)?;
    let mut entries = Vec::new();
    for e in &manifest.entries {
        let rec = ingest_rec(&manifest.load(e)?, a.start).with_context(|| format!("ingesting {}", e.recording_id))?;
        let name = format!("{}.wav", e.recording_id);
        write_wav_atomic(&out.join(&name), &rec)?;
        entries.push(ManifestEntry { file_path: name, ..e.clone() });
    }
    let m = DatasetManifest::new(entries, out)?;
    write_atomic(&out.join("manifest.csv"), &m.to_csv()?)?;
    Ok(Done::new("ingest", vec![out.join("manifest.csv")]).with_summary(serde_json::json!({ "items": m.entries.len() })))
}

pub fn features(cli: &Cli, a: &FeaturesArgs) -> Result<Done> {
    if a.catalog {
        let json = fio::catalog_json();
        return match &cli.out {
            Some(p) => {
                write_atomic(p, json.as_bytes())?;
                Ok(Done::new("features", vec![p.clone()]))
            }
            None => {
                println!("{json}");
                Ok(Done::new("features", vec![]))
            }
        };
    }
    let out = require_out(cli)?;
    let manifest = DatasetManifest::read(a.manifest.as_ref().expect("clap requires manifest"))?;
    let cfg = ExtractConfig { mode: cli.mode(), phase: phase_for(cli.mode(), a.phase) };
    let vectors = extract_manifest(&manifest, a.target.map(Into::into), &cfg)?;
    let mut bytes = Vec::new();
    if out.extension().is_some_and(|e| e == "csv") {
        fio::write_csv(&mut bytes, &vectors)?;
    } else {
        fio::write_binary(&mut bytes, &vectors)?;
    }
    write_atomic(out, &bytes)?;
    let flagged: usize = vectors.iter().map(|v| v.flagged().count()).sum();
    Ok(Done::new("features", vec![out.to_path_buf()])
        .with_summary(serde_json::json!({ "vectors": vectors.len(), "flagged_values": flagged, "phase": cfg.phase })))
}

#[derive(Serialize)]
struct LabelRow<'a> {
    recording_id: &'a str,
    label: u8,
}

pub fn annotate_stats(cli: &Cli, a: &AnnotateArgs) -> Result<Done> {
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(usage("--threshold must lie in [0, 1]"));
    }
    let report = agreement_report(&RaterPanel::load(&a.annotations)?, a.threshold)?;
    let mut artifacts = Vec::new();
    match &cli.out {
        Some(p) => {
            write_json(p, &report)?;
            artifacts.push(p.clone());
        }
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    if let Some(p) = &a.labels_out {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (id, &label) in &report.labels {
            w.serialize(LabelRow { recording_id: id, label })?;
        }
        write_atomic(p, &w.into_inner()?)?;
        artifacts.push(p.clone());
    }
    Ok(Done::new("annotate-stats", artifacts).with_summary(serde_json::json!({
        "kappa": report.kappa,
        "retained": report.n_retained,
        "items": report.n_items,
    })))
}
