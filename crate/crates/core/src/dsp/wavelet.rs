//! Discrete wavelet transform: cascaded two-channel filter bank with
//! half-sample symmetric boundary extension.

use super::DspError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wavelet {
    Db2,
    Db4,
    Db8,
    Sym4,
    Rbio39,
}

struct FilterBank {
    dec_lo: &'static [f64],
    dec_hi: &'static [f64],
    rec_lo: &'static [f64],
    rec_hi: &'static [f64],
}

const DB2: FilterBank = FilterBank {
    dec_lo: &[-0.12940952255126037, 0.2241438680420134, 0.8365163037378079, 0.48296291314453416],
    dec_hi: &[-0.48296291314453416, 0.8365163037378079, -0.2241438680420134, -0.12940952255126037],
    rec_lo: &[0.48296291314453416, 0.8365163037378079, 0.2241438680420134, -0.12940952255126037],
    rec_hi: &[-0.12940952255126037, -0.2241438680420134, 0.8365163037378079, -0.48296291314453416],
};

const DB4: FilterBank = FilterBank {
    dec_lo: &[
        -0.010597401785069032, 0.0328830116668852, 0.030841381835560764, -0.18703481171909309,
        -0.027983769416859854, 0.6308807679298589, 0.7148465705529157, 0.2303778133088965,
    ],
    dec_hi: &[
        -0.2303778133088965, 0.7148465705529157, -0.6308807679298589, -0.027983769416859854,
        0.18703481171909309, 0.030841381835560764, -0.0328830116668852, -0.010597401785069032,
    ],
    rec_lo: &[
        0.2303778133088965, 0.7148465705529157, 0.6308807679298589, -0.027983769416859854,
        -0.18703481171909309, 0.030841381835560764, 0.0328830116668852, -0.010597401785069032,
    ],
    rec_hi: &[
        -0.010597401785069032, -0.0328830116668852, 0.030841381835560764, 0.18703481171909309,
        -0.027983769416859854, -0.6308807679298589, 0.7148465705529157, -0.2303778133088965,
    ],
};

const DB8: FilterBank = FilterBank {
    dec_lo: &[
        -0.00011747678412476953, 0.0006754494064505693, -0.00039174037337694705,
        -0.004870352993451574, 0.008746094047405777, 0.013981027917398282,
        -0.044088253930794755, -0.017369301001807547, 0.12874742662047847,
        0.0004724845739132828, -0.2840155429615469, -0.015829105256349306,
        0.5853546836542067, 0.6756307362972898, 0.31287159091429995, 0.05441584224310401,
    ],
    dec_hi: &[
        -0.05441584224310401, 0.31287159091429995, -0.6756307362972898, 0.5853546836542067,
        0.015829105256349306, -0.2840155429615469, -0.0004724845739132828,
        0.12874742662047847, 0.017369301001807547, -0.044088253930794755,
        -0.013981027917398282, 0.008746094047405777, 0.004870352993451574,
        -0.00039174037337694705, -0.0006754494064505693, -0.00011747678412476953,
    ],
    rec_lo: &[
        0.05441584224310401, 0.31287159091429995, 0.6756307362972898, 0.5853546836542067,
        -0.015829105256349306, -0.2840155429615469, 0.0004724845739132828,
        0.12874742662047847, -0.017369301001807547, -0.044088253930794755,
        0.013981027917398282, 0.008746094047405777, -0.004870352993451574,
        -0.00039174037337694705, 0.0006754494064505693, -0.00011747678412476953,
    ],
    rec_hi: &[
        -0.00011747678412476953, -0.0006754494064505693, -0.00039174037337694705,
        0.004870352993451574, 0.008746094047405777, -0.013981027917398282,
        -0.044088253930794755, 0.017369301001807547, 0.12874742662047847,
        -0.0004724845739132828, -0.2840155429615469, 0.015829105256349306,
        0.5853546836542067, -0.6756307362972898, 0.31287159091429995, -0.05441584224310401,
    ],
};

const SYM4: FilterBank = FilterBank {
    dec_lo: &[
        -0.07576571478927333, -0.02963552764599851, 0.49761866763201545, 0.8037387518059161,
        0.29785779560527736, -0.09921954357684722, -0.012603967262037833, 0.0322231006040427,
    ],
    dec_hi: &[
        -0.0322231006040427, -0.012603967262037833, 0.09921954357684722, 0.29785779560527736,
        -0.8037387518059161, 0.49761866763201545, 0.02963552764599851, -0.07576571478927333,
    ],
    rec_lo: &[
        0.0322231006040427, -0.012603967262037833, -0.09921954357684722, 0.29785779560527736,
        0.8037387518059161, 0.49761866763201545, -0.02963552764599851, -0.07576571478927333,
    ],
    rec_hi: &[
        -0.07576571478927333, 0.02963552764599851, 0.49761866763201545, -0.8037387518059161,
        0.29785779560527736, 0.09921954357684722, -0.012603967262037833, -0.0322231006040427,
    ],
};

const RBIO39: FilterBank = FilterBank {
    dec_lo: &[
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1767766952966369, 0.5303300858899106,
        0.5303300858899106, 0.1767766952966369, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    dec_hi: &[
        0.0006797443727836989, 0.002039233118351097, -0.005060319219611981,
        -0.020618912641105536, 0.014112787930175844, 0.09913478249423216,
        -0.012300136269419315, -0.32019196836077857, -0.0020500227115698858,
        0.9421257006782068, -0.9421257006782068, 0.0020500227115698858, 0.32019196836077857,
        0.012300136269419315, -0.09913478249423216, -0.014112787930175844,
        0.020618912641105536, 0.005060319219611981, -0.002039233118351097,
        -0.0006797443727836989,
    ],
    rec_lo: &[
        -0.0006797443727836989, 0.002039233118351097, 0.005060319219611981,
        -0.020618912641105536, -0.014112787930175844, 0.09913478249423216,
        0.012300136269419315, -0.32019196836077857, 0.0020500227115698858,
        0.9421257006782068, 0.9421257006782068, 0.0020500227115698858, -0.32019196836077857,
        0.012300136269419315, 0.09913478249423216, -0.014112787930175844,
        -0.020618912641105536, 0.005060319219611981, 0.002039233118351097,
        -0.0006797443727836989,
    ],
    rec_hi: &[
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1767766952966369, -0.5303300858899106,
        0.5303300858899106, -0.1767766952966369, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
};

impl Wavelet {
    fn bank(self) -> &'static FilterBank {
        match self {
            Wavelet::Db2 => &DB2,
            Wavelet::Db4 => &DB4,
            Wavelet::Db8 => &DB8,
            Wavelet::Sym4 => &SYM4,
            Wavelet::Rbio39 => &RBIO39,
        }
    }

    pub fn filter_len(self) -> usize {
        self.bank().dec_lo.len()
    }
}

/// Coefficient pyramid: `approx` at the deepest level and `details[0]` =
/// level 1 (finest) through `details[depth-1]` (coarsest).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    pub wavelet: Wavelet,
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    /// Input length at each level, finest first (needed for reconstruction).
    lengths: Vec<usize>,
}

impl WaveletPyramid {
    pub fn depth(&self) -> usize {
        self.details.len()
    }

    /// Detail coefficients at `level` (1-based).
    pub fn detail(&self, level: usize) -> &[f64] {
        &self.details[level - 1]
    }
}

#[inline]
fn symmetric_index(i: i64, n: i64) -> usize {
    // half-sample symmetric: ... x1 x0 | x0 x1 ... x(n-1) | x(n-1) x(n-2) ...
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

fn dwt_step(x: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as i64;
    let flen = lo.len() as i64;
    let out = ((n + flen - 1) / 2) as usize;
    let mut a = Vec::with_capacity(out);
    let mut d = Vec::with_capacity(out);
    for i in 0..out as i64 {
        let pos = 2 * i + 1;
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..flen {
            let v = x[symmetric_index(pos - j, n)];
            sa += lo[j as usize] * v;
            sd += hi[j as usize] * v;
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

fn idwt_step(a: &[f64], d: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let m = a.len().min(d.len());
    let flen = lo.len();
    let out = 2 * m + 2 - flen;
    let mut x = vec![0.0; out];
    for (n, xv) in x.iter_mut().enumerate() {
        let t = n + flen - 2;
        // k with 0 <= t - 2k < flen
        let k_max = (t / 2).min(m - 1);
        let k_min = (t + 1).saturating_sub(flen).div_ceil(2);
        let mut s = 0.0;
        for k in k_min..=k_max {
            let idx = t - 2 * k;
            s += a[k] * lo[idx] + d[k] * hi[idx];
        }
        *xv = s;
    }
    x
}

/// Multi-level decomposition.
pub fn wavelet_decompose(x: &[f64], wavelet: Wavelet, depth: usize) -> Result<WaveletPyramid, DspError> {
    let flen = wavelet.filter_len();
    let needed = flen << depth.min(30);
    if depth == 0 || x.len() < needed {
        return Err(DspError::TooShort { needed, got: x.len() });
    }
    let bank = wavelet.bank();
    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(depth);
    let mut lengths = Vec::with_capacity(depth);
    for _ in 0..depth {
        lengths.push(approx.len());
        let (a, d) = dwt_step(&approx, bank.dec_lo, bank.dec_hi);
        details.push(d);
        approx = a;
    }
    Ok(WaveletPyramid { wavelet, approx, details, lengths })
}

/// Inverse of [`wavelet_decompose`].
pub fn wavelet_reconstruct(p: &WaveletPyramid) -> Vec<f64> {
    let bank = p.wavelet.bank();
    let mut a = p.approx.clone();
    for level in (0..p.depth()).rev() {
        let d = &p.details[level];
        if a.len() == d.len() + 1 {
            a.pop();
        }
        a = idwt_step(&a, d, bank.rec_lo, bank.rec_hi);
        a.truncate(p.lengths[level]);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(n: usize) -> Vec<f64> {
        (0..n).map(|i| (0.3 * i as f64).sin() + 0.1 * i as f64).collect()
    }

    #[test]
    fn matches_reference_db4_two_levels() {
        // reference values from an established wavelet library, symmetric mode
        let p = wavelet_decompose(&probe(20), Wavelet::Db4, 1).unwrap();
        assert_eq!(p.approx.len(), 13);
        let ref_d1 = [
            0.014567820474602273, 0.023075665374371356, -0.027849178495560203,
            -0.00388885639034129, -0.0038706504916090397, -0.0025003150168441263,
            -0.0002565475721803094, 0.0020768393203655887, 0.0036847264872656403,
            0.004005432681916691, -0.011459505518329393, -0.01931508420788913,
            0.027623799416761227,
        ];
        for (u, v) in p.details[0].iter().zip(ref_d1) {
            assert!((u - v).abs() < 1e-12);
        }
        let (a2, d2) = dwt_step(&p.approx, DB4.dec_lo, DB4.dec_hi);
        let ref_a2 = [
            1.853008330663722, 0.42802641641665373, 2.7941838772553567, 1.0130603919588206,
            0.9948125743581838, 3.0005368304667375, 2.597475226876618, 1.0858777777633815,
            1.939146137705007, 2.396581741195151,
        ];
        let ref_d2 = [
            -0.17472714377029308, -0.4815442606851847, 0.4382961817511681, -0.18193578464511273,
            -0.06772985080922607, 0.025113169673054898, 0.3266049655230686, -0.4542211313993983,
            0.18605671608393431, 0.05727422927236127,
        ];
        for (u, v) in a2.iter().zip(ref_a2) {
            assert!((u - v).abs() < 1e-12);
        }
        for (u, v) in d2.iter().zip(ref_d2) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_reference_rbio39() {
        let p = wavelet_decompose(&probe(41), Wavelet::Rbio39, 1).unwrap();
        let ref_a = [2.1243688846659734, 2.1406378476428802, 1.680834440384679, 0.8067761247704311];
        let ref_d_tail = [0.17614322341423844, -0.17614322341423858, 0.0759341565224202];
        for (u, v) in p.approx.iter().zip(ref_a) {
            assert!((u - v).abs() < 1e-12);
        }
        for (u, v) in p.details[0][24..27].iter().zip(ref_d_tail) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_reconstruction() {
        for w in [Wavelet::Db2, Wavelet::Db4, Wavelet::Db8, Wavelet::Sym4, Wavelet::Rbio39] {
            for n in [640usize, 641, 1001] {
                let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 113) as f64 / 50.0 - 1.0).collect();
                let depth = 3.min(((n / w.filter_len()) as f64).log2() as usize);
                let p = wavelet_decompose(&x, w, depth).unwrap();
                let y = wavelet_reconstruct(&p);
                assert_eq!(y.len(), n);
                let rms = (x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64).sqrt();
                assert!(rms < 1e-8, "{w:?} n={n} rms={rms}");
            }
        }
    }

    #[test]
    fn vanishing_moments() {
        let c = vec![0.7; 512];
        let p = wavelet_decompose(&c, Wavelet::Db2, 3).unwrap();
        assert!(p.details.iter().flatten().all(|v| v.abs() < 1e-9));
        let ramp: Vec<f64> = (0..512).map(|i| 0.01 * i as f64).collect();
        let p = wavelet_decompose(&ramp, Wavelet::Db4, 2).unwrap();
        // boundaries see the reflection; interior details vanish
        for d in &p.details {
            for v in &d[8..d.len() - 8] {
                assert!(v.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn too_short_errors() {
        assert!(wavelet_decompose(&[0.0; 20], Wavelet::Db8, 2).is_err());
    }
}
