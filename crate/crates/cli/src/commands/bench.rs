use anyhow::Result;
use neoscope_core::dsp::stats::{median, percentile};
use neoscope_core::signal_io::{load_wav, resample_to_4k, segment_10s, SEGMENT_LEN};
use neoscope_core::synth::{synth, SynthSpec};
use neoscope_core::train::QualityModel;
use neoscope_engine::bench::{bench_features, BenchReport};
use neoscope_engine::{replay, Engine, Models};
use serde::Serialize;

use super::usage;
use crate::args::{BenchArgs, Cli};
use crate::output::{sibling, write_atomic, write_json, Done};

#[derive(Debug, Serialize)]
pub struct TickStats {
    pub ticks: usize,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

#[derive(Debug, Serialize)]
struct BenchOutput {
    features: BenchReport,
    ticks: Option<TickStats>,
}

/// Scores a streamed session one second at a time; latencies of the
/// scored (post warm-up) ticks.
pub fn tick_latencies(models: Models, x: &[f64]) -> Result<Vec<f64>> {
    let mut e = Engine::new(models);
    Ok(replay(&mut e, x, 1.0)?.into_iter().filter(|m| !m.warmup).map(|m| m.latency_ms).collect())
}

pub fn bench(cli: &Cli, a: &BenchArgs) -> Result<Done> {
    let rec = match &a.wav {
        Some(p) => {
            let r = resample_to_4k(&load_wav(p)?)?;
            if r.samples.len() > SEGMENT_LEN { segment_10s(&r, 0.0)? } else { r }
        }
        None => synth(&SynthSpec::heart(120.0, 10.0, cli.seed()))?,
    };
    let features = bench_features(&rec, a.repetitions)?;
    let ticks = match a.model.len() {
        0 => None,
        2 => {
            let models = Models::from_pair(QualityModel::load(&a.model[0])?, QualityModel::load(&a.model[1])?)?;
            if !(a.session >= 1.0) {
                return Err(usage("--session must be at least 1 s"));
            }
            let n = ((a.session + 10.0) * 4000.0) as usize;
            let x: Vec<f64> = rec.samples.iter().copied().cycle().take(n).collect();
            let lat = tick_latencies(models, &x)?;
            Some(TickStats {
                ticks: lat.len(),
                median_ms: median(&lat),
                p95_ms: percentile(&lat, 95.0),
                max_ms: lat.iter().copied().fold(0.0, f64::max),
            })
        }
        _ => return Err(usage("--model takes a heart and a lung model")),
    };
    let output = BenchOutput { features, ticks };
    let mut artifacts = Vec::new();
    match &cli.out {
        Some(out) => {
            write_json(out, &output)?;
            let c = sibling(out, "families.csv");
            write_atomic(&c, output.features.to_csv().as_bytes())?;
            artifacts.extend([out.clone(), c]);
        }
        None => println!("{}", serde_json::to_string_pretty(&output)?),
    }
    Ok(Done::new("bench", artifacts).with_summary(serde_json::json!({
        "fast_total_ms": output.features.fast_total_ms,
        "full_total_ms": output.features.full_total_ms,
        "mismatches": output.features.mismatches,
        "ticks": output.ticks,
    })))
}

