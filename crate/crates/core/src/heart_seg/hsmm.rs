//! Explicit-duration hidden semi-Markov model over the cyclic heart states
//! S1 -> systole -> S2 -> diastole -> S1.
//!
//! The first and last segments may be cut by the recording edges, so their
//! durations are scored with the survival function instead of the pmf.

use super::State;

pub const N_STATES: usize = 4;

#[inline]
fn pred(s: usize) -> usize {
    (s + N_STATES - 1) % N_STATES
}

#[inline]
fn next(s: usize) -> usize {
    (s + 1) % N_STATES
}

/// Discretized Gaussian duration distributions, in frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationModel {
    /// `log_pmf[s][d - 1]` for `d` in `1..=dmax(s)`
    log_pmf: [Vec<f64>; N_STATES],
    /// `log P(D >= d)`
    log_surv: [Vec<f64>; N_STATES],
}

impl DurationModel {
    /// Gaussians truncated to `[max(1, mean - 3 sd), mean + 3 sd]` frames.
    pub fn gaussian(means: [f64; N_STATES], sds: [f64; N_STATES]) -> Self {
        let mut log_pmf: [Vec<f64>; N_STATES] = Default::default();
        let mut log_surv: [Vec<f64>; N_STATES] = Default::default();
        for s in 0..N_STATES {
            let mean = means[s].max(1.0);
            let sd = sds[s].max(0.5);
            let dmin = ((mean - 3.0 * sd).floor() as i64).max(1) as usize;
            let dmax = ((mean + 3.0 * sd).ceil() as usize).max(dmin);
            let w: Vec<f64> = (1..=dmax)
                .map(|d| if d < dmin { 0.0 } else { (-0.5 * ((d as f64 - mean) / sd).powi(2)).exp() })
                .collect();
            let total: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|v| v / total).collect();
            log_pmf[s] = p.iter().map(|v| v.ln()).collect();
            let mut surv = vec![0.0; dmax];
            let mut acc = 0.0;
            for d in (0..dmax).rev() {
                acc += p[d];
                surv[d] = acc.min(1.0).ln();
            }
            log_surv[s] = surv;
        }
        DurationModel { log_pmf, log_surv }
    }

    pub fn dmax(&self, s: usize) -> usize {
        self.log_pmf[s].len()
    }

    /// Duration score of a segment of `d` frames; `partial` segments touch a
    /// recording edge.
    #[inline]
    fn score(&self, s: usize, d: usize, partial: bool) -> f64 {
        if partial {
            self.log_surv[s][d - 1]
        } else {
            self.log_pmf[s][d - 1]
        }
    }
}

/// Per-state prefix sums of log emissions.
struct Emissions {
    cum: [Vec<f64>; N_STATES],
}

impl Emissions {
    fn new(log_b: &[[f64; N_STATES]]) -> Self {
        let mut cum: [Vec<f64>; N_STATES] = Default::default();
        for (s, c) in cum.iter_mut().enumerate() {
            c.reserve(log_b.len() + 1);
            c.push(0.0);
            let mut acc = 0.0;
            for row in log_b {
                acc += row[s];
                c.push(acc);
            }
        }
        Emissions { cum }
    }

    /// Sum over frames `start..=end`.
    #[inline]
    fn span(&self, s: usize, start: usize, end: usize) -> f64 {
        self.cum[s][end + 1] - self.cum[s][start]
    }
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

const LOG_INIT: f64 = -1.386_294_361_119_890_6; // ln(1/4)

/// Most likely state path. Returns per-frame states and the path log score.
pub fn viterbi(log_b: &[[f64; N_STATES]], dur: &DurationModel) -> Option<(Vec<State>, f64)> {
    let t_len = log_b.len();
    if t_len == 0 {
        return None;
    }
    let em = Emissions::new(log_b);
    let mut delta = vec![[f64::NEG_INFINITY; N_STATES]; t_len];
    let mut back = vec![[0usize; N_STATES]; t_len];
    for t in 0..t_len {
        let last = t == t_len - 1;
        for s in 0..N_STATES {
            let mut best = f64::NEG_INFINITY;
            let mut best_d = 0;
            for d in 1..=dur.dmax(s).min(t + 1) {
                let start = t + 1 - d;
                let e = em.span(s, start, t);
                let cand = if start == 0 {
                    LOG_INIT + dur.score(s, d, true) + e
                } else {
                    delta[start - 1][pred(s)] + dur.score(s, d, last) + e
                };
                if cand > best {
                    best = cand;
                    best_d = d;
                }
            }
            delta[t][s] = best;
            back[t][s] = best_d;
        }
    }
    let (mut s, score) = (0..N_STATES)
        .map(|s| (s, delta[t_len - 1][s]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if !score.is_finite() {
        return None;
    }
    let mut states = vec![State::S1; t_len];
    let mut t = t_len as i64 - 1;
    while t >= 0 {
        let d = back[t as usize][s];
        if d == 0 {
            return None;
        }
        let start = t - d as i64 + 1;
        for v in &mut states[start as usize..=t as usize] {
            *v = State::from_index(s);
        }
        t = start - 1;
        s = pred(s);
    }
    Some((states, score))
}

/// Per-frame state posteriors from forward-backward over segments.
pub fn posteriors(log_b: &[[f64; N_STATES]], dur: &DurationModel) -> Option<Vec<[f64; N_STATES]>> {
    let t_len = log_b.len();
    if t_len == 0 {
        return None;
    }
    let em = Emissions::new(log_b);
    // alpha[t][s]: segment of s ends at t
    let mut alpha = vec![[f64::NEG_INFINITY; N_STATES]; t_len];
    for t in 0..t_len {
        let last = t == t_len - 1;
        for s in 0..N_STATES {
            let mut acc = f64::NEG_INFINITY;
            for d in 1..=dur.dmax(s).min(t + 1) {
                let start = t + 1 - d;
                let e = em.span(s, start, t);
                let head = if start == 0 {
                    LOG_INIT + dur.score(s, d, true)
                } else {
                    alpha[start - 1][pred(s)] + dur.score(s, d, last)
                };
                acc = log_add(acc, head + e);
            }
            alpha[t][s] = acc;
        }
    }
    let log_z = (0..N_STATES).fold(f64::NEG_INFINITY, |a, s| log_add(a, alpha[t_len - 1][s]));
    if !log_z.is_finite() {
        return None;
    }
    // beta[t][s]: a segment of s has just ended at t
    let mut beta = vec![[f64::NEG_INFINITY; N_STATES]; t_len];
    beta[t_len - 1] = [0.0; N_STATES];
    for t in (0..t_len - 1).rev() {
        for s in 0..N_STATES {
            let n = next(s);
            let mut acc = f64::NEG_INFINITY;
            for d in 1..=dur.dmax(n).min(t_len - 1 - t) {
                let end = t + d;
                let partial = end == t_len - 1;
                acc = log_add(acc, dur.score(n, d, partial) + em.span(n, t + 1, end) + beta[end][n]);
            }
            beta[t][s] = acc;
        }
    }
    // accumulate segment posteriors into frames with difference arrays
    let mut diff = vec![[0.0f64; N_STATES]; t_len + 1];
    for t in 0..t_len {
        let last = t == t_len - 1;
        for s in 0..N_STATES {
            if beta[t][s] == f64::NEG_INFINITY {
                continue;
            }
            for d in 1..=dur.dmax(s).min(t + 1) {
                let start = t + 1 - d;
                let head = if start == 0 {
                    LOG_INIT + dur.score(s, d, true)
                } else {
                    alpha[start - 1][pred(s)] + dur.score(s, d, last)
                };
                let lp = head + em.span(s, start, t) + beta[t][s] - log_z;
                if lp > -40.0 {
                    let p = lp.exp();
                    diff[start][s] += p;
                    diff[t + 1][s] -= p;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(t_len);
    let mut run = [0.0f64; N_STATES];
    for row in diff.iter().take(t_len) {
        for s in 0..N_STATES {
            run[s] += row[s];
        }
        let mut p = run.map(|v| v.max(0.0));
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter_mut().for_each(|v| *v /= total);
        }
        out.push(p);
    }
    Some(out)
}
