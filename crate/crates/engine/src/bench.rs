//! Per-family extraction timing.
//!
//! Run on an idle machine with the process pinned to one core (for example
//! `taskset -c 2 neoscope bench ...`) so medians are comparable across runs.

use std::collections::BTreeMap;
use std::time::Instant;

use neoscope_core::dsp::stats::median;
use neoscope_core::features::{catalog, extract_with, time_families, CostClass, ExtractConfig, Family, Mode};
use neoscope_core::heart_seg::EmissionArtifact;
use neoscope_core::signal_io::{AudioRecording, FilterPhase};
use serde::{Deserialize, Serialize};

use crate::EngineError;

/// Standalone family cost above which a family counts as slow.
pub const SLOW_FAMILY_MS: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTiming {
    pub family: Family,
    pub n_features: usize,
    /// Fast if any of the family's features is in the fast set.
    pub declared: CostClass,
    pub observed: CostClass,
    pub median_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub repetitions: usize,
    pub families: Vec<FamilyTiming>,
    /// Median wall clock of a whole fast-mode extraction.
    pub fast_total_ms: f64,
    pub full_total_ms: f64,
    /// Fast-declared families whose standalone cost exceeds the threshold.
    pub mismatches: Vec<Family>,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed().as_secs_f64() * 1e3)
}

pub fn bench_features(rec: &AudioRecording, repetitions: usize) -> Result<BenchReport, EngineError> {
    let reps = repetitions.max(1);
    let artifact = EmissionArtifact::bundled();
    let err = |e: neoscope_core::features::FeatureError| EngineError::InvalidInput(e.to_string());
    let mut per: BTreeMap<Family, Vec<f64>> = BTreeMap::new();
    let mut fast = Vec::new();
    let mut full = Vec::new();
    for _ in 0..reps {
        for (f, ms) in time_families(rec, FilterPhase::Causal, artifact).map_err(err)? {
            per.entry(f).or_default().push(ms);
        }
        let (r, ms) = timed(|| extract_with(rec, &ExtractConfig::streaming(), artifact));
        r.map_err(err)?;
        fast.push(ms);
        let (r, ms) = timed(|| extract_with(rec, &ExtractConfig::new(Mode::Full), artifact));
        r.map_err(err)?;
        full.push(ms);
    }
    let specs_all = catalog();
    let mut families = Vec::new();
    for (family, t) in per {
        let specs: Vec<_> = specs_all.iter().filter(|s| s.family == family).collect();
        let declared = if specs.iter().any(|s| s.cost == CostClass::Fast) { CostClass::Fast } else { CostClass::Slow };
        let m = median(&t);
        families.push(FamilyTiming {
            family,
            n_features: specs.len(),
            declared,
            observed: if m > SLOW_FAMILY_MS { CostClass::Slow } else { CostClass::Fast },
            median_ms: m,
            min_ms: t.iter().copied().fold(f64::INFINITY, f64::min),
            max_ms: t.iter().copied().fold(0.0, f64::max),
        });
    }
    let mismatches = families
        .iter()
        .filter(|f| f.declared == CostClass::Fast && f.observed == CostClass::Slow)
        .map(|f| f.family)
        .collect();
    Ok(BenchReport { repetitions: reps, families, fast_total_ms: median(&fast), full_total_ms: median(&full), mismatches })
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,n_features,declared,observed,median_ms,min_ms,max_ms\n");
        for f in &self.families {
            let name = serde_json::to_value(f.family).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let class = |c: CostClass| if c == CostClass::Fast { "fast" } else { "slow" };
            s.push_str(&format!(
                "{name},{},{},{},{:.3},{:.3},{:.3}\n",
                f.n_features,
                class(f.declared),
                class(f.observed),
                f.median_ms,
                f.min_ms,
                f.max_ms
            ));
        }
        s
    }
}
