use std::collections::BTreeMap;

use anyhow::Result;
use neoscope_core::dsp::stats::spearman;
use neoscope_core::features::{ExtractConfig, Mode};
use neoscope_core::signal_io::{DatasetManifest, FilterPhase, SoundTarget};
use neoscope_core::synth::read_truth;
use neoscope_core::train::{
    clamp_quality, cross_validate, evaluate, grid_search_train, round_level, EvalReport, ModelFamily, QualityModel,
    TrainConfig,
};
use serde::Serialize;

use super::{out_or, usage};
use crate::args::{phase_for, Cli, EvalArgs, TrainArgs};
use crate::output::{sibling, write_atomic, write_json, Done};
use crate::pipeline;

pub fn train(cli: &Cli, a: &TrainArgs) -> Result<Done> {
    let target: SoundTarget = a.target.into();
    let mode = cli.mode();
    let cfg = ExtractConfig { mode, phase: phase_for(mode, a.phase) };
    let mut tc = TrainConfig::new(target, cli.seed());
    if !a.families.is_empty() {
        tc.families = a.families.iter().map(|f| f.parse::<ModelFamily>().map_err(usage)).collect::<Result<_>>()?;
    }
    if let Some(k) = a.folds {
        if k < 2 {
            return Err(usage("--folds must be at least 2"));
        }
        tc.n_splits = k;
    }
    let manifest = DatasetManifest::read(&a.source.manifest)?;
    let labels = pipeline::labels(&manifest, a.source.annotations.as_deref(), a.source.threshold)?;
    let ds = pipeline::dataset(&manifest, target, &cfg, a.source.features.as_deref(), &labels)?;

    let model = grid_search_train(&ds, &tc)?;
    let out = out_or(cli, format!("{}_{}.json", target.as_str(), mode_name(mode)));
    write_atomic(&out, format!("{}\n", model.to_json()).as_bytes())?;
    let mut artifacts = vec![out.clone()];
    let mut summary = serde_json::json!({
        "target": target,
        "mode": mode,
        "phase": cfg.phase,
        "n": ds.labels.len(),
        "patients": ds.n_patients(),
        "selected": model.selected_ids.len(),
        "params": model.params,
        "inner_cv_mse": model.cv_mse,
    });
    if !a.no_cv {
        let cv = cross_validate(&ds, &tc)?;
        let p = sibling(&out, "cv.json");
        write_json(&p, &cv)?;
        let c = sibling(&out, "confusion.csv");
        write_atomic(&c, cv.report.confusion_csv().as_bytes())?;
        artifacts.extend([p, c]);
        summary["cv"] = serde_json::json!({
            "mse": cv.report.mse,
            "accuracy": cv.report.accuracy,
            "balanced_accuracy": cv.report.balanced_accuracy,
        });
    }
    Ok(Done::new("train", artifacts).with_summary(summary))
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Full => "full",
        Mode::Fast => "fast",
    }
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    target: SoundTarget,
    mode: Mode,
    phase: FilterPhase,
    model_seed: u64,
    report: EvalReport,
    /// Rank correlation of predictions with the generating SNR.
    spearman_snr: Option<f64>,
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    recording_id: &'a str,
    label: u8,
    prediction: f64,
    level: u8,
}

pub fn eval(cli: &Cli, a: &EvalArgs) -> Result<Done> {
    let model = QualityModel::load(&a.model)?;
    let cfg = ExtractConfig { mode: model.mode, phase: model.phase };
    let manifest = DatasetManifest::read(&a.source.manifest)?;
    let labels = pipeline::labels(&manifest, a.source.annotations.as_deref(), a.source.threshold)?;
    let ds = pipeline::dataset(&manifest, model.target, &cfg, a.source.features.as_deref(), &labels)?;
    let preds = ds.rows.iter().map(|r| model.raw_predict(r).map(clamp_quality)).collect::<Result<Vec<_>, _>>()?;
    let report = evaluate(&preds, &ds.labels, None)?;
    let spearman_snr = match &a.truth {
        Some(p) => {
            let snr: BTreeMap<String, f64> = read_truth(p)?.into_iter().map(|(id, s, _)| (id, s)).collect();
            let pairs: Vec<(f64, f64)> =
                ds.recording_ids.iter().zip(&preds).filter_map(|(id, &p)| snr.get(id).map(|&s| (p, s))).collect();
            if pairs.len() < 2 {
                return Err(usage("--truth shares fewer than two recordings with the manifest"));
            }
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            Some(spearman(&x, &y))
        }
        None => None,
    };
    let output = EvalOutput { target: model.target, mode: model.mode, phase: model.phase, model_seed: model.training.seed, report, spearman_snr };
    let mut artifacts = Vec::new();
    match &cli.out {
        Some(out) => {
            write_json(out, &output)?;
            let c = sibling(out, "confusion.csv");
            write_atomic(&c, output.report.confusion_csv().as_bytes())?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for ((id, &label), &p) in ds.recording_ids.iter().zip(&ds.labels).zip(&preds) {
                w.serialize(PredictionRow { recording_id: id, label, prediction: p, level: round_level(p) })?;
            }
            let pp = sibling(out, "predictions.csv");
            write_atomic(&pp, &w.into_inner()?)?;
            artifacts.extend([out.clone(), c, pp]);
        }
        None => println!("{}", serde_json::to_string_pretty(&output)?),
    }
    Ok(Done::new("eval", artifacts).with_summary(serde_json::json!({
        "n": output.report.n,
        "mse": output.report.mse,
        "accuracy": output.report.accuracy,
        "balanced_accuracy": output.report.balanced_accuracy,
        "spearman_snr": output.spearman_snr,
    })))
}
