//! Regressors: least squares, ridge, k nearest neighbours, regression trees
//! and ordinal threshold models.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::optim::{minimize, LbfgsConfig};

pub const N_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Ols,
    Ridge,
    Knn,
    Tree,
    OrdinalLogistic,
    OrdinalRidge,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 6] = [
        ModelFamily::Ols,
        ModelFamily::Ridge,
        ModelFamily::Knn,
        ModelFamily::Tree,
        ModelFamily::OrdinalLogistic,
        ModelFamily::OrdinalRidge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Ols => "ols",
            ModelFamily::Ridge => "ridge",
            ModelFamily::Knn => "knn",
            ModelFamily::Tree => "tree",
            ModelFamily::OrdinalLogistic => "ordinal_logistic",
            ModelFamily::OrdinalRidge => "ordinal_ridge",
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ModelFamily::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            format!("unknown model family '{s}' (expected one of ols, ridge, knn, tree, ordinal_logistic, ordinal_ridge)")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeights {
    Uniform,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    fn count(self, d: usize) -> usize {
        match self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => (d as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (d as f64).log2().floor() as usize,
        }
        .clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Every threshold contributes a loss term per sample.
    All,
    /// Only the two thresholds bounding the sample's level contribute.
    Immediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RegressorParams {
    Ols,
    Ridge { alpha: f64 },
    Knn { neighbors: usize, weights: KnnWeights, metric: Metric },
    Tree { max_depth: Option<usize>, max_features: MaxFeatures },
    OrdinalLogistic { variant: Threshold, alpha: f64 },
    OrdinalRidge { alpha: f64 },
}

impl RegressorParams {
    pub fn family(&self) -> ModelFamily {
        match self {
            RegressorParams::Ols => ModelFamily::Ols,
            RegressorParams::Ridge { .. } => ModelFamily::Ridge,
            RegressorParams::Knn { .. } => ModelFamily::Knn,
            RegressorParams::Tree { .. } => ModelFamily::Tree,
            RegressorParams::OrdinalLogistic { .. } => ModelFamily::OrdinalLogistic,
            RegressorParams::OrdinalRidge { .. } => ModelFamily::OrdinalRidge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fitted {
    Linear { weights: Vec<f64>, intercept: f64 },
    Knn { neighbors: usize, weights: KnnWeights, metric: Metric, rows: Vec<Vec<f64>>, targets: Vec<f64> },
    Tree { nodes: Vec<TreeNode> },
    Ordinal { weights: Vec<f64>, thresholds: Vec<f64> },
    /// Ridge fit whose output is rounded to the nearest level.
    RoundedLinear { weights: Vec<f64>, intercept: f64 },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Fitted {
    /// Unclamped prediction.
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Fitted::Linear { weights, intercept } => intercept + dot(weights, row),
            Fitted::RoundedLinear { weights, intercept } => {
                (intercept + dot(weights, row)).clamp(1.0, N_LEVELS as f64).round()
            }
            Fitted::Ordinal { weights, thresholds } => {
                let z = dot(weights, row);
                1.0 + thresholds.iter().filter(|&&t| t < z).count() as f64
            }
            Fitted::Knn { neighbors, weights, metric, rows, targets } => {
                knn_predict(row, rows, targets, *neighbors, *weights, *metric)
            }
            Fitted::Tree { nodes } => {
                let mut i = 0;
                loop {
                    match &nodes[i] {
                        TreeNode::Leaf { value } => return *value,
                        TreeNode::Split { feature, threshold, left, right } => {
                            i = if row[*feature] <= *threshold { *left } else { *right };
                        }
                    }
                }
            }
        }
    }

    pub fn thresholds(&self) -> Option<&[f64]> {
        match self {
            Fitted::Ordinal { thresholds, .. } => Some(thresholds),
            _ => None,
        }
    }
}

pub fn fit(params: &RegressorParams, rows: &[Vec<f64>], y: &[f64], seed: u64) -> Result<Fitted, TrainError> {
    if rows.is_empty() || rows.len() != y.len() {
        return Err(TrainError::InvalidInput(format!("{} rows for {} targets", rows.len(), y.len())));
    }
    Ok(match *params {
        RegressorParams::Ols => {
            let (weights, intercept) = ridge(rows, y, 0.0);
            Fitted::Linear { weights, intercept }
        }
        RegressorParams::Ridge { alpha } => {
            let (weights, intercept) = ridge(rows, y, alpha);
            Fitted::Linear { weights, intercept }
        }
        RegressorParams::OrdinalRidge { alpha } => {
            let (weights, intercept) = ridge(rows, y, alpha);
            Fitted::RoundedLinear { weights, intercept }
        }
        RegressorParams::Knn { neighbors, weights, metric } => {
            if neighbors == 0 {
                return Err(TrainError::InvalidInput("k = 0 neighbours".into()));
            }
            Fitted::Knn { neighbors, weights, metric, rows: rows.to_vec(), targets: y.to_vec() }
        }
        RegressorParams::Tree { max_depth, max_features } => {
            let mut b = TreeBuilder {
                rows,
                y,
                max_depth: max_depth.unwrap_or(usize::MAX),
                n_try: max_features.count(rows[0].len()),
                rng: ChaCha8Rng::seed_from_u64(seed),
                nodes: Vec::new(),
            };
            let idx: Vec<usize> = (0..rows.len()).collect();
            b.grow(idx, 0);
            Fitted::Tree { nodes: b.nodes }
        }
        RegressorParams::OrdinalLogistic { variant, alpha } => {
            let levels: Vec<usize> = y.iter().map(|v| (v.round() as usize).clamp(1, N_LEVELS)).collect();
            ordinal_logistic(rows, &levels, variant, alpha)?
        }
    })
}

/// Ridge with an unpenalized intercept, solved through the SVD so that
/// `alpha = 0` gives the minimum-norm least-squares solution.
fn ridge(rows: &[Vec<f64>], y: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let n = rows.len();
    let d = rows[0].len();
    let xm: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let ym = y.iter().sum::<f64>() / n as f64;
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j] - xm[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - ym));
    let mut a = x.transpose() * &x;
    for j in 0..d {
        a[(j, j)] += alpha;
    }
    let b = x.transpose() * yc;
    let svd = a.svd(true, true);
    let tol = 1e-10 * svd.singular_values.max().max(1e-300);
    let w = svd.solve(&b, tol).unwrap_or_else(|_| DVector::zeros(d));
    let w: Vec<f64> = w.iter().copied().collect();
    let intercept = ym - dot(&w, &xm);
    (w, intercept)
}

fn knn_predict(row: &[f64], rows: &[Vec<f64>], targets: &[f64], k: usize, weights: KnnWeights, metric: Metric) -> f64 {
    let mut d: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let dist = match metric {
                Metric::L1 => r.iter().zip(row).map(|(a, b)| (a - b).abs()).sum(),
                Metric::L2 => r.iter().zip(row).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(),
            };
            (dist, i)
        })
        .collect();
    let k = k.min(d.len());
    d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let near = &mut d[..k];
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    match weights {
        KnnWeights::Uniform => near.iter().map(|(_, i)| targets[*i]).sum::<f64>() / k as f64,
        KnnWeights::Distance => {
            let exact: Vec<f64> = near.iter().filter(|(dist, _)| *dist == 0.0).map(|(_, i)| targets[*i]).collect();
            if !exact.is_empty() {
                return exact.iter().sum::<f64>() / exact.len() as f64;
            }
            let (num, den) = near.iter().fold((0.0, 0.0), |(n, s), (dist, i)| (n + targets[*i] / dist, s + 1.0 / dist));
            num / den
        }
    }
}

struct TreeBuilder<'a> {
    rows: &'a [Vec<f64>],
    y: &'a [f64],
    max_depth: usize,
    n_try: usize,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(TreeNode::Leaf { value });
        self.nodes.len() - 1
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let first = self.y[idx[0]];
        if depth >= self.max_depth || idx.len() < 2 || idx.iter().all(|&i| self.y[i] == first) {
            return self.leaf(&idx);
        }
        let d = self.rows[0].len();
        let mut features: Vec<usize> = (0..d).collect();
        if self.n_try < d {
            features.shuffle(&mut self.rng);
            features.truncate(self.n_try);
            features.sort_unstable();
        }
        let n = idx.len() as f64;
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let total_sq: f64 = idx.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let parent_sse = total_sq - total * total / n;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.clone();
        for &f in &features {
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]).then(a.cmp(&b)));
            let (mut sl, mut sql) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let v = self.y[order[k]];
                sl += v;
                sql += v * v;
                let (x0, x1) = (self.rows[order[k]][f], self.rows[order[k + 1]][f]);
                if x0 == x1 {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let sr = total - sl;
                let sqr = total_sq - sql;
                let sse = (sql - sl * sl / nl) + (sqr - sr * sr / nr);
                if best.is_none_or(|(b, _, _)| sse < b - 1e-12) {
                    best = Some((sse, f, 0.5 * (x0 + x1)));
                }
            }
        }
        let Some((sse, feature, threshold)) = best else {
            return self.leaf(&idx);
        };
        if sse >= parent_sse - 1e-12 {
            return self.leaf(&idx);
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.rows[i][feature] <= threshold);
        let me = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: 0.0 });
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = TreeNode::Split { feature, threshold, left, right };
        me
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Thresholds from the unconstrained parameters: the first is free, the
/// rest add softplus increments, so they never decrease.
fn thresholds_from(p: &[f64]) -> Vec<f64> {
    let mut t = Vec::with_capacity(p.len());
    let mut cur = p[0];
    t.push(cur);
    for q in &p[1..] {
        cur += softplus(*q);
        t.push(cur);
    }
    t
}

fn ordinal_logistic(rows: &[Vec<f64>], levels: &[usize], variant: Threshold, alpha: f64) -> Result<Fitted, TrainError> {
    if levels.iter().all(|&l| l == levels[0]) {
        return Err(TrainError::InvalidInput("ordinal fit needs at least two levels".into()));
    }
    let d = rows[0].len();
    let nt = N_LEVELS - 1;
    // thresholds start at -1.5, -0.5, 0.5, 1.5
    let inc0 = (1f64.exp() - 1.0).ln();
    let mut x0 = vec![0.0; d];
    x0.push(-1.5);
    x0.extend(std::iter::repeat_n(inc0, nt - 1));
    let objective = |p: &[f64], g: &mut [f64]| -> f64 {
        let (w, tp) = p.split_at(d);
        let theta = thresholds_from(tp);
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut dtheta = vec![0.0; nt];
        let mut f = 0.5 * alpha * dot(w, w);
        for (j, wj) in w.iter().enumerate() {
            g[j] = alpha * wj;
        }
        for (row, &y) in rows.iter().zip(levels) {
            let z = dot(w, row);
            let range = match variant {
                Threshold::All => 0..nt,
                Threshold::Immediate => y.saturating_sub(2)..y.min(nt),
            };
            let mut dz = 0.0;
            for j in range {
                // threshold j separates level j+1 from j+2
                let s = if y > j + 1 { 1.0 } else { -1.0 };
                let m = s * (z - theta[j]);
                f += softplus(-m);
                let dm = -sigmoid(-m) * s;
                dz += dm;
                dtheta[j] -= dm;
            }
            for (gj, xj) in g[..d].iter_mut().zip(row) {
                *gj += dz * xj;
            }
        }
        // chain rule through the cumulative softplus parameterization
        let mut acc = 0.0;
        for j in (0..nt).rev() {
            acc += dtheta[j];
            if j == 0 {
                g[d] = acc;
            } else {
                g[d + j] = acc * sigmoid(tp[j]);
            }
        }
        f
    };
    let res = minimize(objective, x0, LbfgsConfig { max_iter: 300, grad_tol: 1e-6, ..Default::default() });
    let (w, tp) = res.x.split_at(d);
    Ok(Fitted::Ordinal { weights: w.to_vec(), thresholds: thresholds_from(tp) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub knn_neighbors: Vec<usize>,
    pub knn_weights: Vec<KnnWeights>,
    pub knn_metrics: Vec<Metric>,
    /// Only `squared_error` is implemented.
    pub tree_criteria: Vec<String>,
    pub tree_depths: Vec<Option<usize>>,
    pub tree_max_features: Vec<MaxFeatures>,
    pub alphas: Vec<f64>,
    pub ordinal_variants: Vec<Threshold>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            knn_neighbors: (1..=10).collect(),
            knn_weights: vec![KnnWeights::Uniform, KnnWeights::Distance],
            knn_metrics: vec![Metric::L1, Metric::L2],
            tree_criteria: vec!["squared_error".into()],
            tree_depths: std::iter::once(None).chain((1..=10).map(Some)).collect(),
            tree_max_features: vec![MaxFeatures::All, MaxFeatures::Sqrt, MaxFeatures::Log2],
            alphas: vec![0.0, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0, 500.0, 1000.0],
            ordinal_variants: vec![Threshold::All, Threshold::Immediate],
        }
    }
}

impl HyperGrid {
    pub fn points(&self, family: ModelFamily) -> Vec<RegressorParams> {
        match family {
            ModelFamily::Ols => vec![RegressorParams::Ols],
            ModelFamily::Ridge => self.alphas.iter().map(|&alpha| RegressorParams::Ridge { alpha }).collect(),
            ModelFamily::OrdinalRidge => {
                self.alphas.iter().map(|&alpha| RegressorParams::OrdinalRidge { alpha }).collect()
            }
            ModelFamily::Knn => {
                let mut v = Vec::new();
                for &neighbors in &self.knn_neighbors {
                    for &weights in &self.knn_weights {
                        for &metric in &self.knn_metrics {
                            v.push(RegressorParams::Knn { neighbors, weights, metric });
                        }
                    }
                }
                v
            }
            ModelFamily::Tree => {
                let mut v = Vec::new();
                for &max_depth in &self.tree_depths {
                    for &max_features in &self.tree_max_features {
                        v.push(RegressorParams::Tree { max_depth, max_features });
                    }
                }
                v
            }
            ModelFamily::OrdinalLogistic => {
                let mut v = Vec::new();
                for &variant in &self.ordinal_variants {
                    for &alpha in &self.alphas {
                        v.push(RegressorParams::OrdinalLogistic { variant, alpha });
                    }
                }
                v
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn line(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let y = rows.iter().map(|r| 2.0 * r[0] - 0.5 * r[1] + 1.0).collect();
        (rows, y)
    }

    #[test]
    fn ols_recovers_exact_plane() {
        let (rows, y) = line(20);
        let Fitted::Linear { weights, intercept } = fit(&RegressorParams::Ols, &rows, &y, 0).unwrap() else {
            panic!()
        };
        assert!((weights[0] - 2.0).abs() < 1e-9 && (weights[1] + 0.5).abs() < 1e-9 && (intercept - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ridge_shrinks() {
        let (rows, y) = line(20);
        let w0 = match fit(&RegressorParams::Ridge { alpha: 0.0 }, &rows, &y, 0).unwrap() {
            Fitted::Linear { weights, .. } => weights,
            _ => unreachable!(),
        };
        let w1 = match fit(&RegressorParams::Ridge { alpha: 1000.0 }, &rows, &y, 0).unwrap() {
            Fitted::Linear { weights, .. } => weights,
            _ => unreachable!(),
        };
        assert!(dot(&w1, &w1) < dot(&w0, &w0));
    }

    #[test]
    fn knn_exact_and_weighted() {
        let rows = vec![vec![0.0], vec![1.0], vec![3.0]];
        let y = vec![1.0, 2.0, 5.0];
        let m = fit(&RegressorParams::Knn { neighbors: 2, weights: KnnWeights::Uniform, metric: Metric::L2 }, &rows, &y, 0)
            .unwrap();
        assert_eq!(m.predict(&[0.4]), 1.5);
        let m = fit(&RegressorParams::Knn { neighbors: 2, weights: KnnWeights::Distance, metric: Metric::L1 }, &rows, &y, 0)
            .unwrap();
        assert_eq!(m.predict(&[1.0]), 2.0);
        assert!((m.predict(&[0.25]) - (1.0 / 0.25 + 2.0 / 0.75) / (1.0 / 0.25 + 1.0 / 0.75)).abs() < 1e-12);
    }

    #[test]
    fn tree_fits_steps_and_respects_depth() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| if i < 10 { 1.0 } else if i < 25 { 3.0 } else { 5.0 }).collect();
        let full = fit(&RegressorParams::Tree { max_depth: None, max_features: MaxFeatures::All }, &rows, &y, 1).unwrap();
        assert!(rows.iter().zip(&y).all(|(r, v)| full.predict(r) == *v));
        let stump = fit(&RegressorParams::Tree { max_depth: Some(1), max_features: MaxFeatures::All }, &rows, &y, 1).unwrap();
        let Fitted::Tree { nodes } = &stump else { panic!() };
        assert_eq!(nodes.len(), 3);
    }

    #[test]
    fn ordinal_separable_1d() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 10.0]).collect();
        let y: Vec<f64> = (0..50).map(|i| (i / 10 + 1) as f64).collect();
        for variant in [Threshold::All, Threshold::Immediate] {
            let m = fit(&RegressorParams::OrdinalLogistic { variant, alpha: 0.0 }, &rows, &y, 0).unwrap();
            let t = m.thresholds().unwrap();
            assert!(t.windows(2).all(|w| w[1] > w[0]), "{t:?}");
            let acc = rows.iter().zip(&y).filter(|(r, v)| m.predict(r) == **v).count();
            assert_eq!(acc, 50, "{variant:?}");
            // reversing the labels flips the sign of the weight
            let rev: Vec<f64> = y.iter().map(|v| 6.0 - v).collect();
            let r = fit(&RegressorParams::OrdinalLogistic { variant, alpha: 0.0 }, &rows, &rev, 0).unwrap();
            assert!(rows.iter().zip(&rev).all(|(row, v)| r.predict(row) == *v));
        }
    }

    #[test]
    fn ordinal_rejects_single_level() {
        assert!(fit(&RegressorParams::OrdinalLogistic { variant: Threshold::All, alpha: 1.0 }, &[vec![1.0], vec![2.0]], &[3.0, 3.0], 0)
            .is_err());
    }

    #[test]
    fn ordinal_errors_land_in_adjacent_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let make = |rng: &mut ChaCha8Rng, n: usize| -> (Vec<Vec<f64>>, Vec<f64>) {
            let mut rows = Vec::new();
            let mut y = Vec::new();
            for _ in 0..n {
                let level = rng.gen_range(1..=5);
                let z = level as f64 + rng.gen_range(-0.8..0.8);
                rows.push(vec![z + rng.gen_range(-0.3..0.3), rng.gen::<f64>()]);
                y.push(level as f64);
            }
            (rows, y)
        };
        let (rows, y) = make(&mut rng, 300);
        let (test, ty) = make(&mut rng, 300);
        let m = fit(&RegressorParams::OrdinalLogistic { variant: Threshold::All, alpha: 1.0 }, &rows, &y, 0).unwrap();
        let wrong: Vec<f64> = test.iter().zip(&ty).map(|(r, v)| (m.predict(r) - v).abs()).filter(|e| *e > 0.0).collect();
        let adjacent = wrong.iter().filter(|e| **e == 1.0).count();
        assert!(!wrong.is_empty() && adjacent as f64 >= 0.9 * wrong.len() as f64, "{adjacent}/{}", wrong.len());
    }

    #[test]
    fn grid_sizes() {
        let g = HyperGrid::default();
        assert_eq!(g.points(ModelFamily::Knn).len(), 40);
        assert_eq!(g.points(ModelFamily::Tree).len(), 33);
        assert_eq!(g.points(ModelFamily::OrdinalLogistic).len(), 20);
        assert_eq!(g.points(ModelFamily::Ols).len(), 1);
    }

    proptest! {
        #[test]
        fn ordinal_thresholds_never_decrease(seed in 0u64..200, alpha in prop::sample::select(vec![0.0, 0.5, 10.0])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let y: Vec<f64> = (0..40).map(|i| (i % 3 + rng.gen_range(1..=3)) as f64).collect();
            for variant in [Threshold::All, Threshold::Immediate] {
                let m = fit(&RegressorParams::OrdinalLogistic { variant, alpha }, &rows, &y, 0).unwrap();
                prop_assert!(m.thresholds().unwrap().windows(2).all(|w| w[1] >= w[0]));
            }
        }
    }
}
