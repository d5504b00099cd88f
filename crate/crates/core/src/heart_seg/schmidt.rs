//! Duration-dependent HMM segmentation with Gaussian emissions on a single
//! normalized envelope.

use super::hsmm::{viterbi, N_STATES};
use super::{zscore, DurationParams, SegError, State, StateSequence, HR_BAND_BPM};
use crate::dsp::autocorr::autocorr_centered;
use crate::dsp::stats::{mean, percentile, std_dev};

const SD_FLOOR: f64 = 0.1;
const REFINE_ITERS: usize = 2;

/// Segments a frame-rate heart envelope given its heart rate. The systolic
/// interval is taken from the envelope autocorrelation.
pub fn schmidt_segment(env: &[f64], rate: f64, hr_bpm: f64) -> Result<StateSequence, SegError> {
    let cycle = check(env, rate, hr_bpm)?;
    let ac = autocorr_centered(env, rate, Some(cycle));
    let systolic = ac.local_peak_in(0.1, cycle / 2.0).map(|(l, _)| l).unwrap_or(0.4 * cycle).min(cycle / 2.0);
    schmidt_segment_with(env, rate, hr_bpm, systolic)
}

fn check(env: &[f64], rate: f64, hr_bpm: f64) -> Result<f64, SegError> {
    if !(HR_BAND_BPM.0..=HR_BAND_BPM.1).contains(&hr_bpm) {
        return Err(SegError::InvalidParameter(format!(
            "heart rate {hr_bpm} outside [{}, {}] bpm",
            HR_BAND_BPM.0, HR_BAND_BPM.1
        )));
    }
    if rate <= 0.0 {
        return Err(SegError::InvalidParameter(format!("frame rate {rate}")));
    }
    let cycle = 60.0 / hr_bpm;
    let got = env.len() as f64 / rate;
    if got < cycle {
        return Err(SegError::TooShort { needed: cycle, got });
    }
    Ok(cycle)
}

/// As [`schmidt_segment`] with an explicit systolic interval (seconds).
pub fn schmidt_segment_with(env: &[f64], rate: f64, hr_bpm: f64, systolic_s: f64) -> Result<StateSequence, SegError> {
    check(env, rate, hr_bpm)?;
    let z = zscore(env);
    let dur = DurationParams::default().model(hr_bpm, systolic_s, rate);
    // sounds sit in the upper tail of the envelope, silences below the median
    let high: Vec<f64> = {
        let p = percentile(&z, 80.0);
        z.iter().cloned().filter(|v| *v >= p).collect()
    };
    let low: Vec<f64> = {
        let p = percentile(&z, 60.0);
        z.iter().cloned().filter(|v| *v <= p).collect()
    };
    let sound = (mean(&high), std_dev(&high).max(SD_FLOOR));
    let quiet = (mean(&low), std_dev(&low).max(SD_FLOOR));
    let mut params = [sound, quiet, sound, quiet];
    let mut labels = Vec::new();
    for iter in 0..=REFINE_ITERS {
        let log_b: Vec<[f64; N_STATES]> = z
            .iter()
            .map(|&v| {
                let mut row = [0.0; N_STATES];
                for (s, (m, sd)) in params.iter().enumerate() {
                    row[s] = -0.5 * ((v - m) / sd).powi(2) - sd.ln();
                }
                row
            })
            .collect();
        labels = viterbi(&log_b, &dur).ok_or_else(|| SegError::DecodeFailed("no admissible path".into()))?.0;
        if iter == REFINE_ITERS {
            break;
        }
        for (s, p) in params.iter_mut().enumerate() {
            let vals: Vec<f64> = z.iter().zip(&labels).filter(|(_, l)| l.index() == s).map(|(v, _)| *v).collect();
            if vals.len() >= 2 {
                *p = (mean(&vals), std_dev(&vals).max(SD_FLOOR));
            }
        }
    }
    Ok(StateSequence { labels, rate, posterior: None })
}

/// Fraction of complete cycles (S1 onset to S1 onset) whose S1 segment is
/// longer than the following S2 segment.
pub fn s1_longer_fraction(seq: &StateSequence) -> f64 {
    let segs = seq.complete_segments();
    let mut total = 0;
    let mut wins = 0;
    for (i, s) in segs.iter().enumerate() {
        if s.state != State::S1 {
            continue;
        }
        if let Some(s2) = segs[i + 1..].iter().take(2).find(|g| g.state == State::S2) {
            total += 1;
            if s.len() > s2.len() {
                wins += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        wins as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RATE: f64 = 50.0;

    fn bump(t: f64, c: f64, w: f64) -> f64 {
        (-0.5 * ((t - c) / w).powi(2)).exp()
    }

    /// Alternating wide (S1-like) and narrow (S2-like) bumps.
    fn bump_train(hr: f64, secs: f64) -> (Vec<f64>, Vec<f64>) {
        let cycle = 60.0 / hr;
        let n = (secs * RATE) as usize;
        let mut wide_centres = Vec::new();
        let mut c = 0.2;
        while c < secs {
            wide_centres.push(c);
            c += cycle;
        }
        let env = (0..n)
            .map(|i| {
                let t = i as f64 / RATE;
                wide_centres
                    .iter()
                    .map(|&w| bump(t, w, 0.03) + 0.9 * bump(t, w + 0.35 * cycle, 0.018))
                    .sum::<f64>()
            })
            .collect();
        (env, wide_centres)
    }

    #[test]
    fn wider_bumps_become_s1() {
        let (env, centres) = bump_train(120.0, 10.0);
        let seq = schmidt_segment(&env, RATE, 120.0).unwrap();
        assert!(seq.is_legal());
        let mut hit = 0;
        let mut total = 0;
        for &c in &centres {
            let f = (c * RATE).round() as usize;
            if f + 2 >= env.len() || f < 2 {
                continue;
            }
            total += 1;
            if seq.labels[f] == State::S1 {
                hit += 1;
            }
        }
        assert!(hit as f64 >= 0.9 * total as f64, "{hit}/{total}");
    }

    #[test]
    fn cycle_length_follows_heart_rate() {
        let (env, _) = bump_train(140.0, 10.0);
        let seq = schmidt_segment(&env, RATE, 140.0).unwrap();
        let iv = seq.s1_intervals();
        let m = mean(&iv);
        assert!((m - 60.0 / 140.0).abs() <= 0.1 * 60.0 / 140.0, "{m}");
    }

    #[test]
    fn constant_envelope_completes() {
        let seq = schmidt_segment(&[1.0; 500], RATE, 120.0).unwrap();
        assert_eq!(seq.labels.len(), 500);
        assert!(seq.is_legal());
    }

    #[test]
    fn rejects_out_of_band_rate_and_short_input() {
        assert!(matches!(schmidt_segment(&[0.0; 500], RATE, 40.0), Err(SegError::InvalidParameter(_))));
        assert!(matches!(schmidt_segment(&[0.0; 10], RATE, 120.0), Err(SegError::TooShort { .. })));
    }
}
