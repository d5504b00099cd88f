//! Linear prediction by the autocorrelation method (Levinson-Durbin).

use super::DspError;

/// Returns `order + 1` coefficients `[1, a1, ..., a_order]` of the
/// prediction-error filter `e[n] = x[n] + Σ a_k x[n-k]`.
pub fn lpc(x: &[f64], order: usize) -> Result<Vec<f64>, DspError> {
    if x.len() <= order {
        return Err(DspError::TooShort { needed: order + 1, got: x.len() });
    }
    let r: Vec<f64> = (0..=order)
        .map(|k| x[k..].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect();
    if r[0] <= 0.0 {
        return Err(DspError::Degenerate("all-zero input has singular autocorrelation".into()));
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for i in 1..=order {
        let acc: f64 = (0..i).map(|j| a[j] * r[i - j]).sum();
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err <= 0.0 {
            // perfectly predictable: remaining coefficients stay zero
            break;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn recovers_ar2_process() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Normal::new(0.0, 1.0).unwrap();
        let mut x = vec![0.0; 40000];
        for n in 2..x.len() {
            x[n] = 0.5 * x[n - 1] - 0.3 * x[n - 2] + w.sample(&mut rng);
        }
        let a = lpc(&x, 10).unwrap();
        assert_eq!(a.len(), 11);
        assert!((a[1] + 0.5).abs() < 0.05, "{:?}", a);
        assert!((a[2] - 0.3).abs() < 0.05, "{:?}", a);
    }

    #[test]
    fn white_noise_coefficients_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..40000).map(|_| w.sample(&mut rng)).collect();
        let a = lpc(&x, 10).unwrap();
        assert!(a[1..].iter().all(|c| c.abs() < 0.1));
    }

    #[test]
    fn zero_signal_is_degenerate() {
        assert!(matches!(lpc(&[0.0; 100], 10), Err(DspError::Degenerate(_))));
    }
}
