//! FFT helpers shared by the spectral primitives.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub(crate) fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Forward FFT of a real sequence zero-padded (or truncated) to `n` points.
pub fn real_fft(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(x.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    forward_plan(n).process(&mut buf);
    buf
}

/// Analytic signal of `x` (same length), computed with the one-sided spectrum.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf = real_fft(x, n);
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *v *= gain;
    }
    inverse_plan(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Magnitude of the analytic signal.
pub fn hilbert_envelope(x: &[f64]) -> Vec<f64> {
    analytic_signal(x).iter().map(|z| z.norm()).collect()
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Symmetric Hamming window.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Number of full frames of length `win` at hop `hop` in `n` samples.
pub fn frame_count(n: usize, win: usize, hop: usize) -> usize {
    if n < win || hop == 0 {
        0
    } else {
        (n - win) / hop + 1
    }
}

/// One-sided power spectrogram: `frames × (nfft/2 + 1)`, windowed, unscaled.
pub fn power_spectrogram(x: &[f64], win: &[f64], hop: usize, nfft: usize) -> Vec<Vec<f64>> {
    let wlen = win.len();
    let frames = frame_count(x.len(), wlen, hop);
    let plan = forward_plan(nfft);
    let bins = nfft / 2 + 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        let start = f * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = if i < wlen {
                Complex64::new(x[start + i] * win[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        plan.process(&mut buf);
        out.push(buf[..bins].iter().map(|c| c.norm_sqr()).collect());
    }
    out
}
