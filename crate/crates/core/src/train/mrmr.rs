//! Greedy mRMR feature ranking with the mutual information difference
//! criterion over quantile-binned features.

use super::TrainError;

pub const MI_BINS: usize = 8;
/// Scores closer than this are ties, broken by the lowest column.
const TIE_EPS: f64 = 1e-12;

/// Rank-based equal-frequency bins; tied values share a bin.
pub fn quantile_bin(x: &[f64], bins: usize) -> Vec<usize> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0; n];
    let mut first = 0;
    for k in 0..n {
        if k > 0 && x[order[k]] != x[order[k - 1]] {
            first = k;
        }
        out[order[k]] = (first * bins / n).min(bins - 1);
    }
    out
}

/// Plug-in mutual information (nats) between two discrete sequences.
pub fn mutual_info(a: &[usize], b: &[usize]) -> f64 {
    let na = a.iter().max().map_or(0, |m| m + 1);
    let nb = b.iter().max().map_or(0, |m| m + 1);
    let n = a.len() as f64;
    let mut joint = vec![0usize; na * nb];
    let mut pa = vec![0usize; na];
    let mut pb = vec![0usize; nb];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * nb + j] += 1;
        pa[i] += 1;
        pb[j] += 1;
    }
    let mut mi = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let c = joint[i * nb + j];
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (pa[i] as f64 * pb[j] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Column indices of `rows` ordered by selection, `k` long.
pub fn mrmr_mid_rank(rows: &[Vec<f64>], labels: &[u8], k: usize) -> Result<Vec<usize>, TrainError> {
    let d = rows.first().map_or(0, Vec::len);
    if k > d {
        return Err(TrainError::InvalidInput(format!("k = {k} exceeds {d} features")));
    }
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(TrainError::InvalidInput("rows and labels differ in length".into()));
    }
    let y: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    let binned: Vec<Vec<usize>> =
        (0..d).map(|j| quantile_bin(&rows.iter().map(|r| r[j]).collect::<Vec<_>>(), MI_BINS)).collect();
    let relevance: Vec<f64> = binned.iter().map(|b| mutual_info(b, &y)).collect();
    let mut redundancy = vec![0.0; d];
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut taken = vec![false; d];
    while chosen.len() < k {
        let s = chosen.len() as f64;
        let mut best: Option<(usize, f64)> = None;
        for j in (0..d).filter(|&j| !taken[j]) {
            let score = if chosen.is_empty() { relevance[j] } else { relevance[j] - redundancy[j] / s };
            if best.is_none_or(|(_, b)| score > b + TIE_EPS) {
                best = Some((j, score));
            }
        }
        let (j, _) = best.expect("k <= d");
        taken[j] = true;
        chosen.push(j);
        for (i, r) in redundancy.iter_mut().enumerate() {
            if !taken[i] {
                *r += mutual_info(&binned[i], &binned[j]);
            }
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binning_shares_ties() {
        let b = quantile_bin(&[5.0, 1.0, 1.0, 3.0], 4);
        assert_eq!(b, vec![3, 0, 0, 2]);
    }

    #[test]
    fn identical_sequences_share_entropy() {
        let a = vec![0, 1, 2, 3, 0, 1, 2, 3];
        assert!((mutual_info(&a, &a) - 4f64.ln()).abs() < 1e-12);
        assert!(mutual_info(&a, &[0; 8]).abs() < 1e-12);
    }

    #[test]
    fn copy_beats_noise() {
        let y: Vec<u8> = (0..200).map(|i| (i % 5 + 1) as u8).collect();
        let rows: Vec<Vec<f64>> = y.iter().enumerate().map(|(i, &l)| vec![((i * 37) % 11) as f64, l as f64]).collect();
        assert_eq!(mrmr_mid_rank(&rows, &y, 1).unwrap(), vec![1]);
        assert!(mrmr_mid_rank(&rows, &y, 3).is_err());
    }

    proptest! {
        #[test]
        fn monotone_transform_keeps_ranking(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<u8> = (0..60).map(|_| rng.gen_range(1..=5)).collect();
            let rows: Vec<Vec<f64>> = y.iter().map(|&l| vec![
                l as f64 + rng.gen::<f64>() * 2.0,
                rng.gen::<f64>(),
                l as f64 * rng.gen::<f64>(),
                rng.gen::<f64>() - l as f64,
            ]).collect();
            let warped: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0].powi(3), r[1].exp(), 2.0 * r[2] + 1.0, r[3].atan()]).collect();
            prop_assert_eq!(mrmr_mid_rank(&rows, &y, 4).unwrap(), mrmr_mid_rank(&warped, &y, 4).unwrap());
        }

        #[test]
        fn first_pick_is_max_relevance(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<u8> = (0..50).map(|_| rng.gen_range(1..=5)).collect();
            let rows: Vec<Vec<f64>> = y.iter().map(|&l| (0..5).map(|j| l as f64 * j as f64 * 0.1 + rng.gen::<f64>()).collect()).collect();
            let first = mrmr_mid_rank(&rows, &y, 1).unwrap()[0];
            let yi: Vec<usize> = y.iter().map(|&v| v as usize).collect();
            let rel: Vec<f64> = (0..5).map(|j| mutual_info(&quantile_bin(&rows.iter().map(|r| r[j]).collect::<Vec<_>>(), MI_BINS), &yi)).collect();
            let max = rel.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((rel[first] - max).abs() <= 1e-12);
            prop_assert!(rel[..first].iter().all(|&r| r < max - 1e-12));
        }
    }
}
