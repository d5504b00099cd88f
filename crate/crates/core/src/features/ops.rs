//! Composite feature primitives built from dsp and segmentation outputs.

use crate::dsp::autocorr::autocorr_centered;
use crate::dsp::filter::{butterworth, BandSpec};
use crate::dsp::mfcc::mfcc_with;
use crate::dsp::stats::{mean, median, pearson, poincare_sd1, resize_linear, rmssd, std_dev, variance, zcr};
use crate::dsp::wavelet::{wavelet_decompose, Wavelet};
use crate::heart_seg::{State, StateSequence};
use crate::signal_io::{FilterPhase, HEART_BAND};

pub type OpResult<T> = Result<T, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Fraction of samples with magnitude above 0.97.
pub fn clipping_pct(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().filter(|v| v.abs() > 0.97).count() as f64 / x.len() as f64
}

/// Product of the max-normalized magnitudes of the level 1-3 sym4
/// approximations of the 50-250 Hz band, on the level-3 grid.
pub fn heart_contamination_trace(x: &[f64], fs: f64, phase: FilterPhase) -> OpResult<Vec<f64>> {
    let sos = butterworth(4, BandSpec::Bandpass(HEART_BAND.0, HEART_BAND.1), fs).map_err(err)?;
    let y = match phase {
        FilterPhase::ZeroPhase => sos.filtfilt(x),
        FilterPhase::Causal => sos.filter(x),
    };
    let mut levels = Vec::with_capacity(3);
    let mut cur = y;
    for _ in 0..3 {
        let p = wavelet_decompose(&cur, Wavelet::Sym4, 1).map_err(err)?;
        cur = p.approx;
        levels.push(cur.clone());
    }
    let n = levels[2].len();
    let mut out = vec![1.0; n];
    for (li, a) in levels.iter().enumerate() {
        let peak = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak <= 0.0 {
            return Ok(vec![0.0; n]);
        }
        let step = 1usize << (2 - li);
        for (i, o) in out.iter_mut().enumerate() {
            let v = a.get(i * step).copied().unwrap_or(0.0);
            *o *= v.abs() / peak;
        }
    }
    Ok(out)
}

pub fn exceed_fraction(x: &[f64], threshold: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().filter(|v| **v > threshold).count() as f64 / x.len() as f64
}

/// Lag ranges, in beats or breaths per minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rhythm {
    Heart,
    Lung,
}

impl Rhythm {
    /// Range searched by the periodicity degree.
    pub fn periodicity_bpm(self) -> (f64, f64) {
        match self {
            Rhythm::Heart => (15.0, 220.0),
            Rhythm::Lung => (15.0, 80.0),
        }
    }

    /// Range searched for the cycle duration.
    pub fn cycle_bpm(self) -> (f64, f64) {
        match self {
            Rhythm::Heart => (70.0, 220.0),
            Rhythm::Lung => (15.0, 80.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rhythm::Heart => "heart",
            Rhythm::Lung => "lung",
        }
    }
}

/// Largest centered autocorrelation of `env` within the periodicity band,
/// floored at 0. A constant envelope is fully correlated and gives 1.
pub fn periodicity_degree(env: &[f64], rate: f64, rhythm: Rhythm) -> f64 {
    if variance(env) <= 0.0 {
        return 1.0;
    }
    let (lo, hi) = rhythm.periodicity_bpm();
    let ac = autocorr_centered(env, rate, None);
    ac.peak_in(60.0 / hi, 60.0 / lo).map(|(_, v)| v.max(0.0)).unwrap_or(0.0)
}

/// Cycle length in seconds from the autocorrelation peak in the cycle band:
/// the strongest interior local maximum, else the in-band maximum.
pub fn cycle_duration(env: &[f64], rate: f64, rhythm: Rhythm) -> OpResult<f64> {
    let (lo, hi) = rhythm.cycle_bpm();
    let (lo_s, hi_s) = (60.0 / hi, 60.0 / lo);
    let ac = autocorr_centered(env, rate, None);
    let (lag, _) = ac
        .local_peak_in(lo_s, hi_s)
        .or_else(|| ac.peak_in(lo_s, hi_s))
        .ok_or_else(|| format!("envelope of {} frames has no lag in range", env.len()))?;
    Ok(lag.clamp(lo_s, hi_s))
}

/// Fraction of sliding windows whose event count lies in `[lo, hi]`.
/// Windows advance by `win_s * (1 - overlap)`.
pub fn acceptable_windows_pct(
    times: &[f64],
    duration_s: f64,
    win_s: f64,
    overlap: f64,
    lo: usize,
    hi: usize,
) -> OpResult<f64> {
    if duration_s + 1e-9 < win_s {
        return Err(format!("{duration_s:.2} s is shorter than one {win_s} s window"));
    }
    let hop = win_s * (1.0 - overlap);
    let mut total = 0usize;
    let mut ok = 0usize;
    let mut k = 0;
    loop {
        let start = k as f64 * hop;
        if start + win_s > duration_s + 1e-9 {
            break;
        }
        let c = times.iter().filter(|&&t| t >= start && t < start + win_s).count();
        total += 1;
        if (lo..=hi).contains(&c) {
            ok += 1;
        }
        k += 1;
    }
    Ok(ok as f64 / total as f64)
}

/// Mean and standard deviation of the Pearson correlations between all pairs
/// of consecutive `cycle_s` chunks of `env`.
pub fn envelope_cycle_correlation(env: &[f64], rate: f64, cycle_s: f64) -> OpResult<(f64, f64)> {
    let len = (cycle_s * rate).round() as usize;
    if len < 2 {
        return Err(format!("cycle of {cycle_s} s spans fewer than 2 frames"));
    }
    let chunks: Vec<&[f64]> = env.chunks_exact(len).collect();
    if chunks.len() < 2 {
        return Err(format!("{} frames hold fewer than 2 cycles", env.len()));
    }
    let mut r = Vec::new();
    for i in 0..chunks.len() {
        for j in i + 1..chunks.len() {
            r.push(pearson(chunks[i], chunks[j]));
        }
    }
    Ok((mean(&r), std_dev(&r)))
}

/// Rate (per minute) from the autocorrelation of each `win_s` window, one
/// window per second; returns mean and standard deviation.
pub fn envelope_rate_variability(env: &[f64], rate: f64, win_s: f64, rhythm: Rhythm) -> OpResult<(f64, f64)> {
    let win = (win_s * rate).round() as usize;
    let hop = rate.round().max(1.0) as usize;
    if env.len() < win || win < 2 {
        return Err(format!("{} frames shorter than a {win_s} s window", env.len()));
    }
    let mut rates = Vec::new();
    let mut start = 0;
    while start + win <= env.len() {
        let c = cycle_duration(&env[start..start + win], rate, rhythm)?;
        rates.push(60.0 / c);
        start += hop;
    }
    Ok((mean(&rates), std_dev(&rates)))
}

const CEPSTRAL_COEFFS: usize = 4;
const CEPSTRAL_LEN: usize = 14;
const CEPSTRAL_WIN_S: f64 = 0.025;
const CEPSTRAL_OVERLAP_S: f64 = 0.015;

fn cepstral_vector(x: &[f64], fs: f64, start: usize, end: usize) -> OpResult<Vec<f64>> {
    // short sounds are widened to one analysis window around their centre
    let min_len = (CEPSTRAL_WIN_S * fs).round() as usize + 1;
    let (mut a, mut b) = (start, end.min(x.len()));
    if b - a < min_len {
        let c = (a + b) / 2;
        a = c.saturating_sub(min_len / 2);
        b = (a + min_len).min(x.len());
        a = b.saturating_sub(min_len);
    }
    let m = mfcc_with(&x[a..b], fs, CEPSTRAL_WIN_S, CEPSTRAL_OVERLAP_S, CEPSTRAL_COEFFS).map_err(err)?;
    let mut out = Vec::with_capacity((CEPSTRAL_COEFFS + 1) * CEPSTRAL_LEN);
    for c in 0..=CEPSTRAL_COEFFS {
        let col: Vec<f64> = m.iter().map(|r| r[c]).collect();
        out.extend(resize_linear(&col, CEPSTRAL_LEN));
    }
    Ok(out)
}

fn mean_pairwise_distance(v: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            sum += v[i].iter().zip(&v[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            n += 1;
        }
    }
    sum / n as f64
}

/// Mean pairwise distance between the 70-value cepstral vectors of all S1
/// segments plus the same for S2 segments. Lower is more self-similar.
pub fn segmentation_quality_cepstral(x: &[f64], fs: f64, seq: &StateSequence) -> OpResult<f64> {
    let spf = fs / seq.rate;
    let mut total = 0.0;
    for state in [State::S1, State::S2] {
        let segs: Vec<_> = seq.complete_segments().into_iter().filter(|s| s.state == state).collect();
        if segs.len() < 2 {
            return Err(format!("fewer than 2 complete {state:?} segments"));
        }
        let vecs = segs
            .iter()
            .map(|s| cepstral_vector(x, fs, (s.start as f64 * spf) as usize, (s.end as f64 * spf) as usize))
            .collect::<OpResult<Vec<_>>>()?;
        total += mean_pairwise_distance(&vecs);
    }
    Ok(total)
}

/// Per-state (S1, systole, S2, diastole) and overall fractions of complete
/// segments whose duration is further than 3 median absolute deviations
/// from the state's median. The deviation is floored at one frame.
pub fn pct_bad_segmentation(seq: &StateSequence) -> OpResult<[f64; 5]> {
    let segs = seq.complete_segments();
    let mut out = [0.0; 5];
    let mut bad_all = 0usize;
    let mut n_all = 0usize;
    for s in 0..4 {
        let d: Vec<f64> = segs.iter().filter(|g| g.state.index() == s).map(|g| g.len() as f64).collect();
        if d.len() < 2 {
            return Err(format!("fewer than 2 complete {:?} segments", State::from_index(s)));
        }
        let med = median(&d);
        let dev: Vec<f64> = d.iter().map(|v| (v - med).abs()).collect();
        let mad = median(&dev).max(1.0);
        let bad = dev.iter().filter(|v| **v > 3.0 * mad).count();
        out[s] = bad as f64 / d.len() as f64;
        bad_all += bad;
        n_all += d.len();
    }
    out[4] = bad_all as f64 / n_all as f64;
    Ok(out)
}

pub const ABNORMAL_THRESHOLDS: [f64; 3] = [0.8, 0.8, 0.6];

/// For each systole and the diastole after the following S2, `|stat(sys) - stat(dia)| /
/// stat(sys ++ dia)` for RMSSD, SD1 and ZCR; returns the fractions of cycles
/// above 0.8, 0.8 and 0.6 respectively.
pub fn pct_abnormal_segmentation(x: &[f64], fs: f64, seq: &StateSequence) -> OpResult<[f64; 3]> {
    let spf = fs / seq.rate;
    let segs = seq.segments();
    let mut hits = [0usize; 3];
    let mut n = 0usize;
    for w in segs.windows(3) {
        let w = [w[0], w[2]];
        if w[0].state != State::Systole || w[1].state != State::Diastole || w[0].start == 0 || w[1].end == seq.labels.len() {
            continue;
        }
        let bounds = |a: usize, b: usize| ((a as f64 * spf) as usize, ((b as f64 * spf) as usize).min(x.len()));
        let (s0, s1) = bounds(w[0].start, w[0].end);
        let (d0, d1) = bounds(w[1].start, w[1].end);
        if s1 - s0 < 3 || d1 - d0 < 3 {
            continue;
        }
        let (sys, dia) = (&x[s0..s1], &x[d0..d1]);
        let both: Vec<f64> = sys.iter().chain(dia).copied().collect();
        let stats = |v: &[f64]| -> [f64; 3] {
            [rmssd(v).unwrap_or(0.0), poincare_sd1(v).unwrap_or(0.0), zcr(v, 0.0)]
        };
        let (a, b, c) = (stats(sys), stats(dia), stats(&both));
        n += 1;
        for k in 0..3 {
            let ratio = if c[k] > 0.0 { (a[k] - b[k]).abs() / c[k] } else { 0.0 };
            if ratio > ABNORMAL_THRESHOLDS[k] {
                hits[k] += 1;
            }
        }
    }
    if n == 0 {
        return Err("no complete systole-diastole pair".into());
    }
    Ok(hits.map(|h| h as f64 / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_noise, NoiseKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FS: f64 = 4000.0;

    #[test]
    fn clipping_fraction() {
        let mut x = vec![0.5; 1000];
        for v in x.iter_mut().take(50) {
            *v = -1.0;
        }
        assert_eq!(clipping_pct(&x), 0.05);
        assert_eq!(clipping_pct(&[0.5; 100]), 0.0);
        let clipped: Vec<f64> = (0..4000)
            .map(|i| (1.3 * (2.0 * std::f64::consts::PI * 5.0 * i as f64 / FS).sin()).clamp(-0.99, 0.99))
            .collect();
        let direct = clipped.iter().filter(|v| v.abs() > 0.97).count() as f64 / clipped.len() as f64;
        assert_eq!(clipping_pct(&clipped), direct);
    }

    #[test]
    fn contamination_of_lung_noise_and_silence() {
        let noise = synth_noise(NoiseKind::White, 40000, 4);
        let sos = butterworth(4, BandSpec::Bandpass(200.0, 1000.0), FS).unwrap();
        let lung = sos.filtfilt(&noise);
        let t = heart_contamination_trace(&lung, FS, FilterPhase::ZeroPhase).unwrap();
        assert!(exceed_fraction(&t, 0.1) < 0.05, "{}", exceed_fraction(&t, 0.1));
        assert!(exceed_fraction(&t, 0.2) < 0.05);
        let t = heart_contamination_trace(&vec![0.0; 40000], FS, FilterPhase::ZeroPhase).unwrap();
        assert_eq!(exceed_fraction(&t, 0.1), 0.0);
    }

    #[test]
    fn contamination_thresholds_are_ordered() {
        let (x, _) = crate::synth::synth_heart_clean(120.0, 10.0, 1);
        let t = heart_contamination_trace(&x, FS, FilterPhase::ZeroPhase).unwrap();
        assert!(exceed_fraction(&t, 0.1) >= exceed_fraction(&t, 0.2));
        assert!(exceed_fraction(&t, 0.1) > 0.0, "{}", exceed_fraction(&t, 0.1));
    }

    fn impulse_env(period_frames: usize, n: usize) -> Vec<f64> {
        (0..n).map(|i| if i % period_frames == 0 { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn periodicity_cases() {
        assert!(periodicity_degree(&impulse_env(25, 500), 50.0, Rhythm::Heart) >= 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        assert!(periodicity_degree(&noise, 50.0, Rhythm::Heart) <= 0.3);
        assert_eq!(periodicity_degree(&[2.0; 500], 50.0, Rhythm::Heart), 1.0);
    }

    #[test]
    fn cycle_duration_of_impulse_train() {
        let c = cycle_duration(&impulse_env(25, 500), 50.0, Rhythm::Heart).unwrap();
        assert!((c - 0.5).abs() < 0.02);
        let c = cycle_duration(&impulse_env(100, 500), 50.0, Rhythm::Lung).unwrap();
        assert!((c - 2.0).abs() < 0.02);
    }

    #[test]
    fn acceptable_windows_counting() {
        // 40 per minute, 4 s windows with 25% overlap
        let times: Vec<f64> = (0..7).map(|k| 0.3 + 1.5 * k as f64).collect();
        assert_eq!(acceptable_windows_pct(&times, 10.0, 4.0, 0.25, 1, 4).unwrap(), 1.0);
        assert_eq!(acceptable_windows_pct(&[], 10.0, 2.2, 0.25, 2, 4).unwrap(), 0.0);
        assert!(acceptable_windows_pct(&[], 1.0, 2.2, 0.25, 2, 4).is_err());
    }

    #[test]
    fn windows_counting_oracle_at_120_bpm() {
        // 2.2 s windows at starts 0, 1.65, ... , 6.6 hold 4 or 5 beats
        let times: Vec<f64> = (0..20).map(|k| 0.13 + 0.5 * k as f64).collect();
        let starts = [0.0, 1.65, 3.3, 4.95, 6.6];
        let oracle = starts
            .iter()
            .filter(|&&s| (2..=4).contains(&times.iter().filter(|&&t| t >= s && t < s + 2.2).count()))
            .count() as f64
            / starts.len() as f64;
        assert_eq!(acceptable_windows_pct(&times, 10.0, 2.2, 0.25, 2, 4).unwrap(), oracle);
    }

    #[test]
    fn cycle_correlation_cases() {
        let env: Vec<f64> = (0..500).map(|i| ((i % 25) as f64 / 25.0 * std::f64::consts::TAU).sin()).collect();
        let (m, s) = envelope_cycle_correlation(&env, 50.0, 0.5).unwrap();
        assert!((m - 1.0).abs() < 1e-9 && s < 1e-9);
        let (mis, _) = envelope_cycle_correlation(&env, 50.0, 0.55).unwrap();
        assert!(mis < m);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        assert!(envelope_cycle_correlation(&noise, 50.0, 0.5).unwrap().0.abs() < 0.2);
        assert!(envelope_cycle_correlation(&env[..30], 50.0, 0.5).is_err());
    }

    fn bump_env(bpm_at: impl Fn(f64) -> f64, secs: f64) -> Vec<f64> {
        let n = (secs * 50.0) as usize;
        let mut env = vec![0.0; n];
        let mut t = 0.1;
        while t < secs {
            for (i, v) in env.iter_mut().enumerate() {
                *v += (-0.5 * ((i as f64 / 50.0 - t) / 0.03).powi(2)).exp();
            }
            t += 60.0 / bpm_at(t);
        }
        env
    }

    #[test]
    fn hrv_stationary_and_chirp() {
        let (m, s) = envelope_rate_variability(&bump_env(|_| 120.0, 10.0), 50.0, 3.0, Rhythm::Heart).unwrap();
        assert!((m - 120.0).abs() <= 2.0 && s <= 2.0, "{m} {s}");
        let (mc, sc) = envelope_rate_variability(&bump_env(|t| 100.0 + 4.0 * t, 10.0), 50.0, 3.0, Rhythm::Heart).unwrap();
        assert!((mc - 120.0).abs() <= 6.0, "{mc}");
        assert!(sc > s);
    }

    fn seq_from_durations(cycle: &[usize], reps: usize) -> StateSequence {
        let mut labels = Vec::new();
        for r in 0..reps {
            for (s, &d) in cycle.iter().enumerate() {
                let d = if s == 3 && r % 4 == 3 { d * 2 } else { d };
                labels.extend(std::iter::repeat(State::from_index(s)).take(d));
            }
        }
        StateSequence { labels, rate: 50.0, posterior: None }
    }

    #[test]
    fn bad_segmentation_flags_doubled_cycles() {
        let clean = StateSequence {
            labels: (0..20).flat_map(|_| {
                [6usize, 5, 5, 9].iter().enumerate().flat_map(|(s, &d)| std::iter::repeat(State::from_index(s)).take(d)).collect::<Vec<_>>()
            }).collect(),
            rate: 50.0,
            posterior: None,
        };
        let a = pct_bad_segmentation(&clean).unwrap();
        assert!(a[4] < 0.1);
        let b = pct_bad_segmentation(&seq_from_durations(&[6, 5, 5, 9], 20)).unwrap();
        assert!(b[4] > a[4], "{b:?}");
    }

    #[test]
    fn cepstral_quality_identical_and_noisy() {
        let tpl_s1: Vec<f64> = (0..480).map(|i| (i as f64 * 0.09).sin() * (std::f64::consts::PI * i as f64 / 480.0).sin()).collect();
        let tpl_s2: Vec<f64> = (0..400).map(|i| (i as f64 * 0.15).sin() * (std::f64::consts::PI * i as f64 / 400.0).sin()).collect();
        let cycle = [6usize, 5, 5, 9];
        let mut labels = Vec::new();
        let mut x = Vec::new();
        for _ in 0..12 {
            for (s, &d) in cycle.iter().enumerate() {
                labels.extend(std::iter::repeat(State::from_index(s)).take(d));
                match s {
                    0 => x.extend_from_slice(&tpl_s1),
                    2 => x.extend_from_slice(&tpl_s2),
                    _ => x.extend(std::iter::repeat(0.0).take(d * 80)),
                }
            }
        }
        let seq = StateSequence { labels, rate: 50.0, posterior: None };
        let clean = segmentation_quality_cepstral(&x, FS, &seq).unwrap();
        assert!(clean < 1e-6, "{clean}");
        let noise = synth_noise(NoiseKind::White, x.len(), 3);
        let noisy: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + 0.2 * b).collect();
        assert!(segmentation_quality_cepstral(&noisy, FS, &seq).unwrap() > clean);
        let one = StateSequence { labels: seq.labels[..40].to_vec(), rate: 50.0, posterior: None };
        assert!(segmentation_quality_cepstral(&x, FS, &one).is_err());
    }

    #[test]
    fn abnormal_fractions_small_for_identical_halves() {
        let noise = synth_noise(NoiseKind::White, 50 * 80 * 25, 8);
        let seq = seq_from_durations(&[6, 8, 5, 8], 1);
        let mut labels = Vec::new();
        for _ in 0..40 {
            labels.extend_from_slice(&seq.labels);
        }
        let seq = StateSequence { labels, rate: 50.0, posterior: None };
        let n = seq.labels.len() * 80;
        let f = pct_abnormal_segmentation(&noise[..n.min(noise.len())], FS, &seq).unwrap();
        for v in f {
            assert!(v < 0.1, "{f:?}");
        }
    }
}
