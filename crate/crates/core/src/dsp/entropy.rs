//! Sample entropy and histogram-based Shannon / Rényi / Tsallis entropies.

use super::stats::std_dev;
use super::DspError;

/// Number of equal-width histogram bins over `[min, max]`.
pub const HISTOGRAM_BINS: usize = 100;
/// Default order for Rényi and Tsallis entropies.
pub const DEFAULT_ORDER: f64 = 2.0;

/// Sample entropy with template length `m` and tolerance `r * std(x)`
/// (population standard deviation). Self-matches are excluded and both
/// template lengths use the first `N - m` start positions.
///
/// Zero-variance input returns 0. When no template pair matches at either
/// length, the undefined logarithm is replaced by `ln(N - m)`.
pub fn sample_entropy(x: &[f64], m: usize, r: f64) -> Result<f64, DspError> {
    let n = x.len();
    if n < m + 2 {
        return Err(DspError::TooShort { needed: m + 2, got: n });
    }
    if !(r > 0.0) {
        return Err(DspError::InvalidParameter(format!("tolerance r must be > 0, got {r}")));
    }
    let sd = std_dev(x);
    if sd == 0.0 {
        return Ok(0.0);
    }
    let tol = r * sd;
    let templates = n - m;
    let mut b = 0u64; // matches of length m
    let mut a = 0u64; // matches of length m + 1
    for i in 0..templates {
        for j in (i + 1)..templates {
            let mut k = 0;
            while k < m && (x[i + k] - x[j + k]).abs() <= tol {
                k += 1;
            }
            if k == m {
                b += 1;
                if (x[i + m] - x[j + m]).abs() <= tol {
                    a += 1;
                }
            }
        }
    }
    if a == 0 || b == 0 {
        return Ok(sample_entropy_ceiling(n, m));
    }
    Ok(-((a as f64) / (b as f64)).ln())
}

/// Value reported when the sample-entropy ratio is undefined.
pub fn sample_entropy_ceiling(n: usize, m: usize) -> f64 {
    ((n - m) as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyKind {
    Shannon,
    Renyi,
    Tsallis,
}

/// Probability mass over `bins` equal-width bins spanning `[min, max]`.
pub fn histogram_probs(x: &[f64], bins: usize) -> Result<Vec<f64>, DspError> {
    if x.is_empty() {
        return Err(DspError::Empty);
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let mut counts = vec![0usize; bins];
    let width = hi - lo;
    for &v in x {
        let idx = if width > 0.0 {
            (((v - lo) / width) * bins as f64).floor() as usize
        } else {
            0
        };
        counts[idx.min(bins - 1)] += 1;
    }
    let total = x.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Entropy of a probability vector; Shannon in bits, Rényi in bits.
pub fn entropy_of_probs(p: &[f64], kind: EntropyKind, q: f64) -> f64 {
    match kind {
        EntropyKind::Shannon => -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.log2()).sum::<f64>(),
        EntropyKind::Renyi => {
            let s: f64 = p.iter().filter(|&&v| v > 0.0).map(|v| v.powf(q)).sum();
            s.log2() / (1.0 - q)
        }
        EntropyKind::Tsallis => {
            let s: f64 = p.iter().filter(|&&v| v > 0.0).map(|v| v.powf(q)).sum();
            (1.0 - s) / (q - 1.0)
        }
    }
}

/// Histogram entropy of `x` over [`HISTOGRAM_BINS`] bins.
pub fn entropy(x: &[f64], kind: EntropyKind, q: f64) -> Result<f64, DspError> {
    if kind != EntropyKind::Shannon && (q - 1.0).abs() < 1e-12 {
        return Err(DspError::InvalidParameter("order q must differ from 1".into()));
    }
    let p = histogram_probs(x, HISTOGRAM_BINS)?;
    Ok(entropy_of_probs(&p, kind, q))
}
