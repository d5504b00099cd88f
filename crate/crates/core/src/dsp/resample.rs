//! Rational polyphase resampling with a Kaiser-windowed sinc lowpass.
//!
//! The anti-alias lowpass is centred on the lower of the two Nyquist
//! frequencies with a transition band of ±4 % around it and 60 dB stopband.

use std::collections::VecDeque;
use std::f64::consts::PI;

use super::DspError;

const TRANSITION_FRAC: f64 = 0.04;
const STOPBAND_DB: f64 = 60.0;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn kaiser_beta(atten: f64) -> f64 {
    if atten > 50.0 {
        0.1102 * (atten - 8.7)
    } else if atten > 21.0 {
        0.5842 * (atten - 21.0).powf(0.4) + 0.07886 * (atten - 21.0)
    } else {
        0.0
    }
}

/// Polyphase filter for an `up / down` rate change.
#[derive(Debug, Clone)]
pub struct PolyphaseFilter {
    pub up: usize,
    pub down: usize,
    taps: Vec<f64>,
}

impl PolyphaseFilter {
    pub fn new(fs_in: u32, fs_out: u32) -> Result<Self, DspError> {
        if fs_in == 0 || fs_out == 0 {
            return Err(DspError::InvalidParameter("sample rates must be positive".into()));
        }
        let g = gcd(fs_in as u64, fs_out as u64);
        let up = (fs_out as u64 / g) as usize;
        let down = (fs_in as u64 / g) as usize;
        let fs_high = fs_in as f64 * up as f64;
        let cutoff = fs_in.min(fs_out) as f64 / 2.0;
        let delta_f = 2.0 * TRANSITION_FRAC * cutoff;
        let delta_w = 2.0 * PI * delta_f / fs_high;
        let mut len = ((STOPBAND_DB - 7.95) / (2.285 * delta_w)).ceil() as usize + 1;
        if len.is_multiple_of(2) {
            len += 1;
        }
        let beta = kaiser_beta(STOPBAND_DB);
        let i0b = bessel_i0(beta);
        let fc = cutoff / fs_high; // cycles per high-rate sample
        let mid = (len - 1) as f64 / 2.0;
        let taps = (0..len)
            .map(|n| {
                let t = n as f64 - mid;
                let sinc = if t == 0.0 {
                    2.0 * fc
                } else {
                    (2.0 * PI * fc * t).sin() / (PI * t)
                };
                let r = t / mid;
                let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0b;
                up as f64 * sinc * w
            })
            .collect();
        Ok(Self { up, down, taps })
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Output sample at high-rate time `t`, reading inputs through `get`.
    #[inline]
    fn eval(&self, t: i64, n_in: i64, get: impl Fn(i64) -> f64) -> f64 {
        let l = self.up as i64;
        let n = self.taps.len() as i64;
        let i_max = (t.div_euclid(l)).min(n_in - 1);
        let lo = t - n + 1;
        let i_min = if lo <= 0 { 0 } else { (lo + l - 1) / l };
        let mut acc = 0.0;
        let mut i = i_min;
        while i <= i_max {
            acc += get(i) * self.taps[(t - i * l) as usize];
            i += 1;
        }
        acc
    }
}

/// Resamples `x` from `fs_in` to `fs_out`, compensating the filter delay so
/// the output is time-aligned with the input. Output length is
/// `ceil(len * fs_out / fs_in)`.
pub fn resample(x: &[f64], fs_in: u32, fs_out: u32) -> Result<Vec<f64>, DspError> {
    if fs_in == fs_out {
        return Ok(x.to_vec());
    }
    let filt = PolyphaseFilter::new(fs_in, fs_out)?;
    let (l, m) = (filt.up as u64, filt.down as u64);
    let n_out = (x.len() as u64 * l).div_ceil(m) as usize;
    let delay = ((filt.len() - 1) / 2) as i64;
    let n_in = x.len() as i64;
    Ok((0..n_out)
        .map(|k| filt.eval(k as i64 * m as i64 + delay, n_in, |i| x[i as usize]))
        .collect())
}

/// Causal streaming resampler: feed chunks, receive the outputs that became
/// computable. Output lags the input by the filter's group delay.
#[derive(Debug, Clone)]
pub struct StreamResampler {
    filt: PolyphaseFilter,
    history: VecDeque<f64>,
    base: i64,
    received: i64,
    next_out: i64,
}

impl StreamResampler {
    pub fn new(fs_in: u32, fs_out: u32) -> Result<Self, DspError> {
        Ok(Self {
            filt: PolyphaseFilter::new(fs_in, fs_out)?,
            history: VecDeque::new(),
            base: 0,
            received: 0,
            next_out: 0,
        })
    }

    pub fn process(&mut self, chunk: &[f64]) -> Vec<f64> {
        self.history.extend(chunk.iter().copied());
        self.received += chunk.len() as i64;
        let (l, m) = (self.filt.up as i64, self.filt.down as i64);
        let mut out = Vec::new();
        loop {
            let t = self.next_out * m;
            if t.div_euclid(l) >= self.received {
                break;
            }
            let base = self.base;
            let hist = &self.history;
            let y = self
                .filt
                .eval(t, self.received, |i| if i < base { 0.0 } else { hist[(i - base) as usize] });
            out.push(y);
            self.next_out += 1;
        }
        // keep only what future outputs can reach
        let keep_from = (self.next_out * m - self.filt.len() as i64 + 1).div_euclid(l).max(0);
        while self.base < keep_from && !self.history.is_empty() {
            self.history.pop_front();
            self.base += 1;
        }
        out
    }
}
