//! Scalar statistics used across the feature families.

use super::DspError;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

/// Pearson (non-excess) kurtosis; a Gaussian gives 3. Zero-variance input gives 0.
pub fn kurtosis(x: &[f64]) -> f64 {
    let var = variance(x);
    if var <= 0.0 {
        return 0.0;
    }
    let m = mean(x);
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / x.len() as f64;
    m4 / (var * var)
}

/// Sample skewness (population moments). Zero-variance input gives 0.
pub fn skewness(x: &[f64]) -> f64 {
    let var = variance(x);
    if var <= 0.0 {
        return 0.0;
    }
    let m = mean(x);
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / x.len() as f64;
    m3 / var.powf(1.5)
}

/// Fraction of adjacent sample pairs that cross `threshold`, normalized by
/// the sequence length.
pub fn zcr(x: &[f64], threshold: f64) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let crossings = x
        .windows(2)
        .filter(|w| (w[0] >= threshold) != (w[1] >= threshold))
        .count();
    crossings as f64 / x.len() as f64
}

/// Root mean square of successive differences.
pub fn rmssd(x: &[f64]) -> Result<f64, DspError> {
    if x.len() < 2 {
        return Err(DspError::TooShort { needed: 2, got: x.len() });
    }
    let s: f64 = x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok((s / (x.len() - 1) as f64).sqrt())
}

/// Short-axis dispersion of the Poincaré plot: `std(diff) / sqrt(2)`.
pub fn poincare_sd1(x: &[f64]) -> Result<f64, DspError> {
    if x.len() < 2 {
        return Err(DspError::TooShort { needed: 2, got: x.len() });
    }
    let d: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    Ok((variance(&d) / 2.0).sqrt())
}

/// Variance fractal dimension from the scaling of increment variance over
/// lags {1, 2, 4, 8, 16}: `D = 2 - H`, with `var(lag) ~ lag^(2H)`.
/// Flat input (no increment variance at any lag) is reported as 1.
pub fn variance_fractal_dimension(x: &[f64]) -> Result<f64, DspError> {
    const LAGS: [usize; 5] = [1, 2, 4, 8, 16];
    if x.len() < 18 {
        return Err(DspError::TooShort { needed: 18, got: x.len() });
    }
    let mut pts = Vec::with_capacity(LAGS.len());
    for &lag in &LAGS {
        let inc: Vec<f64> = (lag..x.len()).map(|i| x[i] - x[i - lag]).collect();
        let v = variance(&inc);
        if v > 0.0 {
            pts.push(((lag as f64).ln(), v.ln()));
        }
    }
    if pts.len() < 2 {
        return Ok(1.0);
    }
    let slope = linear_slope(&pts);
    let hurst = slope / 2.0;
    Ok(2.0 - hurst)
}

fn linear_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Linear-interpolated percentile, `q` in [0, 100].
pub fn percentile(x: &[f64], q: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    percentile_sorted(&v, q)
}

pub fn percentile_sorted(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let pos = (q / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] + (v[hi] - v[lo]) * frac
}

pub fn median(x: &[f64]) -> f64 {
    percentile(x, 50.0)
}

/// Pearson correlation; 0 when either input has no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let (a, b) = (&a[..n], &b[..n]);
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..n {
        let (da, db) = (a[i] - ma, b[i] - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// 1-based ranks with ties given their average rank.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    pearson(&ranks(&a[..n]), &ranks(&b[..n]))
}

/// Linear interpolation of `x` onto `n` evenly spaced points spanning it.
pub fn resize_linear(x: &[f64], n: usize) -> Vec<f64> {
    if x.is_empty() || n == 0 {
        return vec![0.0; n];
    }
    if x.len() == 1 || n == 1 {
        return vec![x[0]; n];
    }
    let scale = (x.len() - 1) as f64 / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let pos = i as f64 * scale;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(x.len() - 1);
            let f = pos - lo as f64;
            x[lo] * (1.0 - f) + x[hi] * f
        })
        .collect()
}

/// Block means over non-overlapping blocks of `block` samples (partial tail dropped).
pub fn block_mean(x: &[f64], block: usize) -> Vec<f64> {
    x.chunks_exact(block.max(1)).map(mean).collect()
}
