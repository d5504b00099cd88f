#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::OnceLock;

use neoscope_core::features::{extract_with, ExtractConfig};
use neoscope_core::heart_seg::EmissionArtifact;
use neoscope_core::signal_io::SoundTarget;
use neoscope_core::synth::{plan_corpus, synth, CorpusConfig};
use neoscope_core::train::models::{HyperGrid, ModelFamily};
use neoscope_core::train::{grid_search_train, Dataset, QualityModel, TrainConfig};
use neoscope_engine::Models;
use rayon::prelude::*;

fn train(target: SoundTarget, n: usize) -> QualityModel {
    let mut cfg = CorpusConfig::new(n, 11);
    cfg.targets = vec![target];
    let items = plan_corpus(&cfg);
    let xcfg = ExtractConfig::streaming();
    let vectors: Vec<_> = items
        .par_iter()
        .map(|it| {
            let rec = synth(&it.spec).unwrap().with_ids(it.patient_id.clone(), it.recording_id.clone());
            extract_with(&rec, &xcfg, EmissionArtifact::bundled()).unwrap()
        })
        .collect();
    let labels: BTreeMap<_, _> = items.iter().map(|i| (i.recording_id.clone(), i.label)).collect();
    let patients: BTreeMap<_, _> = items.iter().map(|i| (i.recording_id.clone(), i.patient_id.clone())).collect();
    let ds = Dataset::from_vectors(target, xcfg.mode, xcfg.phase, &vectors, &labels, &patients).unwrap();
    let mut tc = TrainConfig::new(target, 11);
    tc.families = vec![ModelFamily::Knn, ModelFamily::Ridge];
    tc.grid = HyperGrid { knn_neighbors: vec![3, 5, 7], alphas: vec![1.0, 10.0], ..HyperGrid::default() };
    tc.feature_range = (5, 10);
    grid_search_train(&ds, &tc).unwrap()
}

pub fn models() -> &'static Models {
    static M: OnceLock<Models> = OnceLock::new();
    M.get_or_init(|| Models::new(train(SoundTarget::Heart, 90), train(SoundTarget::Lung, 60)).unwrap())
}
