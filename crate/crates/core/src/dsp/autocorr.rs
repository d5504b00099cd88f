//! Biased autocorrelation normalized at lag 0.

use rustfft::num_complex::Complex64;

use super::fft::{inverse_plan, next_pow2, real_fft};

#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrSeq {
    pub values: Vec<f64>,
    pub fs: f64,
    pub normalized: bool,
}

impl AutocorrSeq {
    /// Index and value of the maximum over lags within `[lo_s, hi_s]` seconds,
    /// with parabolic refinement of the lag. `None` if the range holds no lag.
    pub fn peak_in(&self, lo_s: f64, hi_s: f64) -> Option<(f64, f64)> {
        let lo = (lo_s * self.fs).ceil().max(1.0) as usize;
        let hi = ((hi_s * self.fs).floor() as usize).min(self.values.len().saturating_sub(1));
        if lo > hi {
            return None;
        }
        let mut best = lo;
        for k in lo..=hi {
            if self.values[k] > self.values[best] {
                best = k;
            }
        }
        Some(self.refine(best))
    }

    /// Like [`peak_in`](Self::peak_in) but only interior local maxima qualify,
    /// so a decaying edge of the range is never reported.
    pub fn local_peak_in(&self, lo_s: f64, hi_s: f64) -> Option<(f64, f64)> {
        let lo = (lo_s * self.fs).ceil().max(1.0) as usize;
        let hi = ((hi_s * self.fs).floor() as usize).min(self.values.len().saturating_sub(2));
        let mut best: Option<usize> = None;
        for k in lo..=hi {
            let v = &self.values;
            if v[k] >= v[k - 1] && v[k] > v[k + 1] && best.is_none_or(|b| v[k] > v[b]) {
                best = Some(k);
            }
        }
        best.map(|b| self.refine(b))
    }

    fn refine(&self, best: usize) -> (f64, f64) {
        let mut lag = best as f64;
        if best > 0 && best + 1 < self.values.len() {
            let (a, b, c) = (self.values[best - 1], self.values[best], self.values[best + 1]);
            let denom = a - 2.0 * b + c;
            if denom < 0.0 {
                let shift = 0.5 * (a - c) / denom;
                if shift.abs() <= 0.5 {
                    lag += shift;
                }
            }
        }
        (lag / self.fs, self.values[best])
    }
}

/// Biased autocorrelation `r[k] = Σ x[n] x[n+k]`, divided by `r[0]`.
/// With `truncate_s`, only lags below `truncate_s * fs` are kept.
/// An all-zero input yields `[1, 0, 0, ...]`.
pub fn autocorr(x: &[f64], fs: f64, truncate_s: Option<f64>) -> AutocorrSeq {
    let n = x.len();
    let lags = match truncate_s {
        Some(t) => ((t * fs).round() as usize).min(n),
        None => n,
    };
    if n == 0 {
        return AutocorrSeq { values: Vec::new(), fs, normalized: true };
    }
    let nfft = next_pow2(2 * n);
    let mut spec = real_fft(x, nfft);
    for v in spec.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    inverse_plan(nfft).process(&mut spec);
    let r0 = spec[0].re;
    let values = if r0 <= 0.0 {
        let mut v = vec![0.0; lags];
        if lags > 0 {
            v[0] = 1.0;
        }
        v
    } else {
        (0..lags)
            .map(|k| if k == 0 { 1.0 } else { (spec[k].re / r0).clamp(-1.0, 1.0) })
            .collect()
    };
    AutocorrSeq { values, fs, normalized: true }
}

/// Autocorrelation of the mean-removed sequence.
pub fn autocorr_centered(x: &[f64], fs: f64, truncate_s: Option<f64>) -> AutocorrSeq {
    let m = super::stats::mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    autocorr(&c, fs, truncate_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn impulse_train_peaks_at_multiples_of_period() {
        let period = 25;
        let x: Vec<f64> = (0..1000).map(|i| if i % period == 0 { 1.0 } else { 0.0 }).collect();
        let ac = autocorr(&x, 50.0, None);
        for k in 1..5 {
            let lag = k * period;
            assert!(ac.values[lag] > ac.values[lag - 1] && ac.values[lag] > ac.values[lag + 1]);
        }
    }

    #[test]
    fn white_noise_is_decorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4000;
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let ac = autocorr(&x, 1.0, None);
        let bound = 4.0 / (n as f64).sqrt();
        let below = ac.values[1..].iter().filter(|v| v.abs() < bound).count();
        assert!(below as f64 >= 0.99 * (n - 1) as f64);
    }

    #[test]
    fn truncation_length() {
        let x = vec![1.0; 300];
        assert_eq!(autocorr(&x, 30.0, Some(5.0)).values.len(), 150);
    }

    #[test]
    fn sign_flip_invariant_and_bounded() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = autocorr(&x, 1.0, None);
        let b = autocorr(&neg, 1.0, None);
        assert_eq!(a.values[0], 1.0);
        for (u, v) in a.values.iter().zip(&b.values) {
            assert!((u - v).abs() < 1e-12);
            assert!(u.abs() <= 1.0);
        }
    }

    #[test]
    fn zero_input_is_defined() {
        let ac = autocorr(&[0.0; 10], 1.0, None);
        assert_eq!(ac.values[0], 1.0);
        assert!(ac.values[1..].iter().all(|v| *v == 0.0));
    }
}
