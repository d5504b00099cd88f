//! Quality model training: scaling, class balancing, mRMR selection,
//! patient-wise cross-validated grid search and evaluation.

pub mod balance;
pub mod folds;
pub mod models;
pub mod mrmr;
pub mod scaler;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use balance::oversample_balance;
pub use folds::{check_patient_integrity, patientwise_folds, Splits};
pub use models::{fit, Fitted, HyperGrid, ModelFamily, RegressorParams};
pub use mrmr::mrmr_mid_rank;
pub use scaler::{apply_scaler, fit_scaler, ScalerParams};

use crate::features::{catalog, CostClass, FeatureVector, Mode, Status, CATALOG_SIZE, CATALOG_VERSION};
use crate::signal_io::{FilterPhase, SoundTarget};

pub const MODEL_VERSION: u32 = 1;
pub const CLAMP: [f64; 2] = [1.0, 5.0];

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training input: {0}")]
    InvalidInput(String),
    #[error("patient leakage: {0}")]
    Leakage(String),
    #[error("model expects catalog version {expected}, features are version {found}")]
    CatalogMismatch { expected: u32, found: u32 },
    #[error("model artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Mixes a root seed with stream indices (splitmix64 finalizer).
pub fn derive_seed(root: u64, a: u64, b: u64) -> u64 {
    let mut z = root ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Labelled feature rows of one target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub target: SoundTarget,
    pub mode: Mode,
    pub phase: FilterPhase,
    pub recording_ids: Vec<String>,
    pub patients: Vec<String>,
    pub labels: Vec<u8>,
    /// Full catalog-width rows.
    pub rows: Vec<Vec<f64>>,
}

impl Dataset {
    /// Joins feature vectors with labels and patient ids by recording id;
    /// vectors without a label are skipped.
    pub fn from_vectors(
        target: SoundTarget,
        mode: Mode,
        phase: FilterPhase,
        vectors: &[FeatureVector],
        labels: &BTreeMap<String, u8>,
        patients: &BTreeMap<String, String>,
    ) -> Result<Self, TrainError> {
        let mut ds = Dataset {
            target,
            mode,
            phase,
            recording_ids: Vec::new(),
            patients: Vec::new(),
            labels: Vec::new(),
            rows: Vec::new(),
        };
        for v in vectors {
            let Some(&y) = labels.get(&v.recording_id) else { continue };
            let p = patients
                .get(&v.recording_id)
                .ok_or_else(|| TrainError::InvalidInput(format!("no patient for {}", v.recording_id)))?;
            if v.values.len() != CATALOG_SIZE {
                return Err(TrainError::InvalidInput(format!("{} has {} features", v.recording_id, v.values.len())));
            }
            ds.recording_ids.push(v.recording_id.clone());
            ds.patients.push(p.clone());
            ds.labels.push(y);
            ds.rows.push(v.values.clone());
        }
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let n = self.labels.len();
        if n == 0 {
            return Err(TrainError::InvalidInput("empty dataset".into()));
        }
        if self.rows.len() != n || self.patients.len() != n || self.recording_ids.len() != n {
            return Err(TrainError::InvalidInput("dataset columns differ in length".into()));
        }
        if let Some(y) = self.labels.iter().find(|y| !(1..=5).contains(*y)) {
            return Err(TrainError::InvalidInput(format!("label {y} outside 1..5")));
        }
        Ok(())
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            target: self.target,
            mode: self.mode,
            phase: self.phase,
            recording_ids: idx.iter().map(|&i| self.recording_ids[i].clone()).collect(),
            patients: idx.iter().map(|&i| self.patients[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Catalog ids a model for this dataset may use.
    pub fn candidate_ids(&self) -> Vec<usize> {
        catalog()
            .iter()
            .filter(|s| self.mode == Mode::Full || s.cost == CostClass::Fast)
            .map(|s| s.id as usize)
            .collect()
    }

    pub fn n_patients(&self) -> usize {
        self.patients.iter().collect::<std::collections::BTreeSet<_>>().len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub seed: u64,
    pub families: Vec<ModelFamily>,
    pub grid: HyperGrid,
    /// Inclusive range of selected feature counts searched.
    pub feature_range: (usize, usize),
    pub n_splits: usize,
}

impl TrainConfig {
    pub fn new(target: SoundTarget, seed: u64) -> Self {
        TrainConfig {
            seed,
            families: ModelFamily::ALL.to_vec(),
            grid: HyperGrid::default(),
            feature_range: match target {
                SoundTarget::Heart => (5, 15),
                SoundTarget::Lung => (5, 20),
            },
            n_splits: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub n_items: usize,
    pub n_patients: usize,
    pub n_splits: usize,
    pub feature_range: (usize, usize),
    pub families: Vec<ModelFamily>,
    pub grid: HyperGrid,
    /// Best CV MSE reached by each family.
    pub family_cv_mse: BTreeMap<ModelFamily, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityModel {
    pub version: u32,
    pub catalog_version: u32,
    pub target: SoundTarget,
    pub mode: Mode,
    pub phase: FilterPhase,
    /// Catalog ids in selection order.
    pub selected_ids: Vec<usize>,
    pub selected_names: Vec<String>,
    /// Standardization of the selected features.
    pub scaler: ScalerParams,
    pub params: RegressorParams,
    pub regressor: Fitted,
    pub clamp: [f64; 2],
    pub cv_mse: f64,
    pub training: TrainingMeta,
}

impl QualityModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, TrainError> {
        let m: QualityModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.version != MODEL_VERSION {
            return Err(TrainError::Artifact(format!("model version {} (expected {MODEL_VERSION})", self.version)));
        }
        if self.catalog_version != CATALOG_VERSION {
            return Err(TrainError::CatalogMismatch { expected: self.catalog_version, found: CATALOG_VERSION });
        }
        let k = self.selected_ids.len();
        if k == 0 || self.selected_ids.iter().any(|&i| i >= CATALOG_SIZE) {
            return Err(TrainError::Artifact("selected ids outside the catalog".into()));
        }
        if self.scaler.mean.len() != k || self.scaler.std.len() != k || self.scaler.constant.len() != k {
            return Err(TrainError::Artifact("scaler width differs from selection".into()));
        }
        if let Some(t) = self.regressor.thresholds() {
            if t.windows(2).any(|w| w[1] < w[0]) {
                return Err(TrainError::Artifact("ordinal thresholds decrease".into()));
            }
        }
        Ok(())
    }

    /// Unclamped regressor output for a catalog-width feature row.
    pub fn raw_predict(&self, values: &[f64]) -> Result<f64, TrainError> {
        if values.len() != CATALOG_SIZE {
            return Err(TrainError::InvalidInput(format!("{} features (expected {CATALOG_SIZE})", values.len())));
        }
        let sel: Vec<f64> = self.selected_ids.iter().map(|&i| values[i]).collect();
        Ok(self.regressor.predict(&self.scaler.transform_row(&sel)))
    }
}

pub fn clamp_quality(v: f64) -> f64 {
    if v.is_nan() {
        return CLAMP[0];
    }
    v.clamp(CLAMP[0], CLAMP[1])
}

/// Quality in [1, 5] for a feature vector from the matching catalog version.
pub fn predict_quality(model: &QualityModel, v: &FeatureVector) -> Result<f64, TrainError> {
    if let Some(&i) = model.selected_ids.iter().find(|&&i| v.status.get(i) == Some(&Status::Skipped)) {
        return Err(TrainError::InvalidInput(format!("feature {} was not extracted ({:?} mode)", i, v.mode)));
    }
    Ok(clamp_quality(model.raw_predict(&v.values)?))
}

pub fn round_level(v: f64) -> u8 {
    clamp_quality(v).round() as u8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n: usize,
    pub mse: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub mse: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    /// Rows are true levels 1..5, columns rounded predictions.
    pub confusion: [[usize; 5]; 5],
    pub per_fold: Vec<FoldMetrics>,
}

impl EvalReport {
    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("true\\pred,1,2,3,4,5\n");
        for (i, row) in self.confusion.iter().enumerate() {
            s.push_str(&format!("{},{}\n", i + 1, row.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")));
        }
        s
    }
}

/// Metrics of continuous predictions; `folds` adds a per-fold breakdown.
pub fn evaluate(preds: &[f64], labels: &[u8], folds: Option<&[usize]>) -> Result<EvalReport, TrainError> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(TrainError::InvalidInput(format!("{} predictions for {} labels", preds.len(), labels.len())));
    }
    let n = preds.len();
    let mut confusion = [[0usize; 5]; 5];
    let mut se = 0.0;
    for (&p, &y) in preds.iter().zip(labels) {
        se += (clamp_quality(p) - y as f64).powi(2);
        confusion[y as usize - 1][round_level(p) as usize - 1] += 1;
    }
    let correct: usize = (0..5).map(|i| confusion[i][i]).sum();
    let recalls: Vec<f64> = (0..5)
        .filter_map(|i| {
            let row: usize = confusion[i].iter().sum();
            (row > 0).then(|| confusion[i][i] as f64 / row as f64)
        })
        .collect();
    let per_fold = match folds {
        Some(f) => (0..folds::n_folds(f))
            .map(|k| {
                let idx: Vec<usize> = (0..n).filter(|&i| f[i] == k).collect();
                let mse = idx.iter().map(|&i| (clamp_quality(preds[i]) - labels[i] as f64).powi(2)).sum::<f64>()
                    / idx.len().max(1) as f64;
                let acc = idx.iter().filter(|&&i| round_level(preds[i]) == labels[i]).count() as f64
                    / idx.len().max(1) as f64;
                FoldMetrics { fold: k, n: idx.len(), mse, accuracy: acc }
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(EvalReport {
        n,
        mse: se / n as f64,
        accuracy: correct as f64 / n as f64,
        balanced_accuracy: recalls.iter().sum::<f64>() / recalls.len() as f64,
        confusion,
        per_fold,
    })
}

struct FoldData {
    test: Vec<usize>,
    /// Oversampled training indices.
    balanced: Vec<usize>,
}

fn make_folds(ds: &Dataset, n_splits: usize, seed: u64) -> Result<(Vec<usize>, Vec<FoldData>), TrainError> {
    let assign = patientwise_folds(&ds.patients, &ds.labels, Splits::KFold(n_splits))?;
    check_patient_integrity(&ds.patients, &assign)?;
    let mut out = Vec::with_capacity(n_splits);
    for k in 0..n_splits {
        let train: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] != k).collect();
        let test: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] == k).collect();
        let train_patients: std::collections::BTreeSet<&str> = train.iter().map(|&i| ds.patients[i].as_str()).collect();
        if let Some(&i) = test.iter().find(|&&i| train_patients.contains(ds.patients[i].as_str())) {
            return Err(TrainError::Leakage(format!("patient {} in train and test of fold {k}", ds.patients[i])));
        }
        let labels: Vec<u8> = train.iter().map(|&i| ds.labels[i]).collect();
        let balanced = oversample_balance(&labels, derive_seed(seed, 1, k as u64))?.into_iter().map(|j| train[j]).collect();
        out.push(FoldData { test, balanced });
    }
    Ok((assign, out))
}

fn prefix_rows(rows: &[Vec<f64>], idx: &[usize], m: usize) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| rows[i][..m].to_vec()).collect()
}

/// Cross-validated MSE of one grid point on the first `m` ranked columns.
fn cv_mse(ranked: &[Vec<f64>], y: &[u8], folds: &[FoldData], params: &RegressorParams, m: usize, seed: u64) -> f64 {
    let mut se = 0.0;
    let mut n = 0usize;
    for (k, f) in folds.iter().enumerate() {
        let train = prefix_rows(ranked, &f.balanced, m);
        let ty: Vec<f64> = f.balanced.iter().map(|&i| y[i] as f64).collect();
        let Ok(model) = fit(params, &train, &ty, derive_seed(seed, 2, k as u64)) else {
            return f64::INFINITY;
        };
        for &i in &f.test {
            se += (clamp_quality(model.predict(&ranked[i][..m])) - y[i] as f64).powi(2);
            n += 1;
        }
    }
    se / n as f64
}

/// Searches feature counts and hyperparameters of `cfg.families` by
/// patient-wise CV MSE, then refits the best point on all of `ds`.
pub fn grid_search_train(ds: &Dataset, cfg: &TrainConfig) -> Result<QualityModel, TrainError> {
    ds.validate()?;
    let cand = ds.candidate_ids();
    let (lo, hi) = cfg.feature_range;
    if lo == 0 || lo > hi || hi > cand.len() {
        return Err(TrainError::InvalidInput(format!("feature range {lo}..{hi} with {} candidates", cand.len())));
    }
    if cfg.families.is_empty() {
        return Err(TrainError::InvalidInput("no model families".into()));
    }
    let x: Vec<Vec<f64>> = ds.rows.iter().map(|r| cand.iter().map(|&c| r[c]).collect()).collect();
    let scaler = fit_scaler(&x);
    let xs = apply_scaler(&scaler, &x);
    let ranking = mrmr_mid_rank(&xs, &ds.labels, hi)?;
    let ranked: Vec<Vec<f64>> = xs.iter().map(|r| ranking.iter().map(|&j| r[j]).collect()).collect();
    let (_, folds) = make_folds(ds, cfg.n_splits, cfg.seed)?;

    let mut points: Vec<(RegressorParams, usize)> = Vec::new();
    for &fam in &cfg.families {
        for m in lo..=hi {
            for p in cfg.grid.points(fam) {
                points.push((p, m));
            }
        }
    }
    let scores: Vec<f64> =
        points.par_iter().map(|(p, m)| cv_mse(&ranked, &ds.labels, &folds, p, *m, cfg.seed)).collect();
    let mut best = 0;
    let mut family_cv_mse: BTreeMap<ModelFamily, f64> = BTreeMap::new();
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] - 1e-12 {
            best = i;
        }
        let e = family_cv_mse.entry(points[i].0.family()).or_insert(f64::INFINITY);
        *e = e.min(*s);
    }
    if !scores[best].is_finite() {
        return Err(TrainError::InvalidInput("no grid point could be fitted".into()));
    }
    let (params, m) = points[best];

    let all_balanced = oversample_balance(&ds.labels, derive_seed(cfg.seed, 3, 0))?;
    let train = prefix_rows(&ranked, &all_balanced, m);
    let ty: Vec<f64> = all_balanced.iter().map(|&i| ds.labels[i] as f64).collect();
    let regressor = fit(&params, &train, &ty, derive_seed(cfg.seed, 4, 0))?;
    let sel_cols: Vec<usize> = ranking[..m].to_vec();
    let selected_ids: Vec<usize> = sel_cols.iter().map(|&j| cand[j]).collect();
    let specs = catalog();
    let model = QualityModel {
        version: MODEL_VERSION,
        catalog_version: CATALOG_VERSION,
        target: ds.target,
        mode: ds.mode,
        phase: ds.phase,
        selected_names: selected_ids.iter().map(|&i| specs[i].name.clone()).collect(),
        selected_ids,
        scaler: scaler.select(&sel_cols),
        params,
        regressor,
        clamp: CLAMP,
        cv_mse: scores[best],
        training: TrainingMeta {
            seed: cfg.seed,
            n_items: ds.labels.len(),
            n_patients: ds.n_patients(),
            n_splits: cfg.n_splits,
            feature_range: cfg.feature_range,
            families: cfg.families.clone(),
            grid: cfg.grid.clone(),
            family_cv_mse,
        },
    };
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldModel {
    pub fold: usize,
    pub params: RegressorParams,
    pub selected_ids: Vec<usize>,
    pub inner_cv_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub recording_ids: Vec<String>,
    pub folds: Vec<usize>,
    /// Out-of-fold clamped predictions.
    pub predictions: Vec<f64>,
    pub report: EvalReport,
    pub fold_models: Vec<FoldModel>,
}

/// Patient-wise outer cross-validation of the whole training procedure:
/// each outer fold runs scaling, selection and the inner grid search on its
/// training patients only.
pub fn cross_validate(ds: &Dataset, cfg: &TrainConfig) -> Result<CvResult, TrainError> {
    ds.validate()?;
    let assign = patientwise_folds(&ds.patients, &ds.labels, Splits::KFold(cfg.n_splits))?;
    check_patient_integrity(&ds.patients, &assign)?;
    let mut predictions = vec![0.0; ds.labels.len()];
    let mut fold_models = Vec::new();
    for k in 0..cfg.n_splits {
        let train: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] != k).collect();
        let test: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] == k).collect();
        let inner = TrainConfig { seed: derive_seed(cfg.seed, 5, k as u64), ..cfg.clone() };
        let model = grid_search_train(&ds.subset(&train), &inner)?;
        for &i in &test {
            predictions[i] = clamp_quality(model.raw_predict(&ds.rows[i])?);
        }
        fold_models.push(FoldModel {
            fold: k,
            params: model.params,
            selected_ids: model.selected_ids.clone(),
            inner_cv_mse: model.cv_mse,
        });
    }
    let report = evaluate(&predictions, &ds.labels, Some(&assign))?;
    Ok(CvResult { recording_ids: ds.recording_ids.clone(), folds: assign, predictions, report, fold_models })
}
