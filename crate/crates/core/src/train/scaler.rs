use serde::{Deserialize, Serialize};

/// Per-column standardization fitted on training rows (population std).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Zero-variance columns; they map to 0.
    pub constant: Vec<bool>,
}

pub fn fit_scaler(rows: &[Vec<f64>]) -> ScalerParams {
    let d = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m).powi(2);
        }
    }
    let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
    let constant = std.iter().zip(&mean).map(|(s, m)| *s <= 1e-12 * (1.0 + m.abs())).collect();
    ScalerParams { mean, std, constant }
}

impl ScalerParams {
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| if self.constant[j] { 0.0 } else { (v - self.mean[j]) / self.std[j] })
            .collect()
    }

    /// Keeps only the listed columns.
    pub fn select(&self, cols: &[usize]) -> ScalerParams {
        ScalerParams {
            mean: cols.iter().map(|&c| self.mean[c]).collect(),
            std: cols.iter().map(|&c| self.std[c]).collect(),
            constant: cols.iter().map(|&c| self.constant[c]).collect(),
        }
    }
}

pub fn apply_scaler(params: &ScalerParams, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| params.transform_row(r)).collect()
}
