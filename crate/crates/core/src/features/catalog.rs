//! The fixed 400-entry feature catalog. Ids follow the table row order, then
//! the text-described families, then the per-envelope instantiations.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::ops::Rhythm;
use super::{CostClass, Family, FeatureSpec, Target};
use crate::dsp::entropy::EntropyKind;
use crate::dsp::envelope::EnvelopeKind;
use crate::heart_seg::State;

pub const CATALOG_SIZE: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segmenter {
    Schmidt,
    Springer,
}

impl Segmenter {
    pub fn name(self) -> &'static str {
        match self {
            Segmenter::Schmidt => "schmidt",
            Segmenter::Springer => "springer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    Gieraltowski,
    Springer,
    Schmidt,
    Liang,
    Breath,
}

impl Detector {
    pub fn name(self) -> &'static str {
        match self {
            Detector::Gieraltowski => "gieraltowski",
            Detector::Springer => "springer",
            Detector::Schmidt => "schmidt",
            Detector::Liang => "liang",
            Detector::Breath => "breath",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MfccStat {
    Mean(usize),
    Std(usize),
    AvgMin,
    AvgMax,
    AvgSkew,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvStat {
    SampleEntropy(f64),
    Variance,
    Kurtosis,
    Skewness,
    Zcr,
    Rmssd,
    CycleCorrMean,
    CycleCorrStd,
    RateMean,
    RateStd,
    Periodicity(Rhythm),
    CycleDuration(Rhythm),
    AutocorrKurtosis,
    AutocorrSampleEntropy,
}

/// How a feature is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    AudioSampleEntropy,
    Clipping,
    MeanRateEnergy(u32),
    HeartContamination(f64),
    HighFrequencyVariance,
    Lpc(usize),
    Entropy(EntropyKind),
    Periodicity(Rhythm),
    AutocorrKurtosis { truncated: bool },
    AutocorrSampleEntropy { truncated: bool },
    CycleDuration(Rhythm),
    CryPower,
    /// `fs = 0` uses the native rate.
    BandPower { fs: u32, lo: f64, hi: f64 },
    Centroid { fs: u32 },
    Svd { fs: u32, group: usize },
    WaveletEntropy { set: usize, kind: EntropyKind },
    WaveletLogVariance,
    WaveletRmssd,
    WaveletZcr,
    PeakZcr { peak_threshold: bool },
    Mfcc(MfccStat),
    F0Below250,
    F0Dominant,
    F0Mean,
    Envelope(EnvelopeKind, EnvStat),
    BadSegmentation(Segmenter, Option<State>),
    SegmentationQuality(Segmenter),
    AbnormalSegmentation(Segmenter, usize),
    AcceptableWindows(Detector, usize, usize),
    HsmmQuality(EnvelopeKind),
    HeartRate(Segmenter),
    SpringerConfidence,
    PeakRate(Detector),
}

pub(crate) struct Entry {
    pub spec: FeatureSpec,
    pub op: Op,
}

struct Builder {
    entries: Vec<Entry>,
}

fn p(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn ent_name(k: EntropyKind) -> &'static str {
    match k {
        EntropyKind::Shannon => "shannon",
        EntropyKind::Renyi => "renyi",
        EntropyKind::Tsallis => "tsallis",
    }
}

const ENTROPIES: [EntropyKind; 3] = [EntropyKind::Shannon, EntropyKind::Renyi, EntropyKind::Tsallis];

impl Builder {
    fn push(&mut self, name: String, family: Family, target: Target, op: Op, params: BTreeMap<String, String>) {
        let slow = family.is_slow()
            || matches!(
                op,
                Op::BadSegmentation(Segmenter::Schmidt, _)
                    | Op::SegmentationQuality(Segmenter::Schmidt)
                    | Op::AbnormalSegmentation(Segmenter::Schmidt, _)
                    | Op::AcceptableWindows(Detector::Schmidt, _, _)
                    | Op::HeartRate(Segmenter::Schmidt)
                    | Op::Envelope(EnvelopeKind::Stft, _)
                    | Op::HsmmQuality(EnvelopeKind::Stft)
            );
        let id = self.entries.len() as u16;
        self.entries.push(Entry {
            spec: FeatureSpec {
                id,
                name,
                family,
                target,
                cost: if slow { CostClass::Slow } else { CostClass::Fast },
                params,
                sentinel: family.sentinel(),
            },
            op,
        });
    }

    fn env(&mut self, kind: EnvelopeKind, stat: EnvStat, family: Family, name: String) {
        let target = if kind.is_heart() { Target::Heart } else { Target::Lung };
        self.push(name, family, target, Op::Envelope(kind, stat), p(&[("envelope", kind.name().into())]));
    }
}

fn build() -> Vec<Entry> {
    use Family as F;
    let mut b = Builder { entries: Vec::with_capacity(CATALOG_SIZE) };
    let both = Target::Both;

    b.push("audio_sample_entropy".into(), F::AudioSampleEntropy, both, Op::AudioSampleEntropy,
        p(&[("m", "2".into()), ("r", "0.1".into()), ("rate_hz", "30".into())]));
    b.push("clipping_pct".into(), F::Clipping, both, Op::Clipping, p(&[("threshold", "0.97".into())]));
    for fs in [1000u32, 2000] {
        b.push(format!("mean_rate_avg_energy_{fs}"), F::MeanRateEnergy, Target::Lung, Op::MeanRateEnergy(fs),
            p(&[("fs", fs.to_string()), ("band_hz", "2-32".into())]));
    }
    for thr in [0.1, 0.2] {
        b.push(format!("heart_contamination_{thr}"), F::HeartContamination, Target::Lung, Op::HeartContamination(thr),
            p(&[("threshold", thr.to_string())]));
    }
    b.push("high_frequency_variance".into(), F::HighFrequencyVariance, both, Op::HighFrequencyVariance,
        p(&[("highpass_hz", "700".into()), ("order", "2".into())]));
    for k in 0..=10 {
        b.push(format!("lpc_{k}"), F::Lpc, both, Op::Lpc(k), p(&[("order", "10".into()), ("index", k.to_string())]));
    }
    for kind in ENTROPIES {
        b.push(format!("entropy_{}", ent_name(kind)), F::Entropy, both, Op::Entropy(kind), p(&[("bins", "100".into()), ("q", "2".into())]));
    }
    for r in [Rhythm::Heart, Rhythm::Lung] {
        let (lo, hi) = r.periodicity_bpm();
        let t = if r == Rhythm::Heart { Target::Heart } else { Target::Lung };
        b.push(format!("periodicity_{}", r.name()), F::Periodicity, t, Op::Periodicity(r), p(&[("bpm", format!("{lo}-{hi}"))]));
    }
    b.push("autocorr_kurtosis".into(), F::AutocorrKurtosis, both, Op::AutocorrKurtosis { truncated: false }, p(&[("truncate_s", "none".into())]));
    for truncated in [false, true] {
        let tag = if truncated { "5s" } else { "full" };
        b.push(format!("autocorr_sample_entropy_{tag}"), F::AutocorrSampleEntropy, both, Op::AutocorrSampleEntropy { truncated },
            p(&[("m", "2".into()), ("r", "0.2".into()), ("rate_hz", "30".into()), ("truncate_s", if truncated { "5".into() } else { "none".into() })]));
    }
    for r in [Rhythm::Heart, Rhythm::Lung] {
        let (lo, hi) = r.cycle_bpm();
        let t = if r == Rhythm::Heart { Target::Heart } else { Target::Lung };
        b.push(format!("autocorr_cycle_duration_{}", r.name()), F::AutocorrCycleDuration, t, Op::CycleDuration(r), p(&[("bpm", format!("{lo}-{hi}"))]));
    }
    b.push("cry_power".into(), F::CryPower, both, Op::CryPower, p(&[("band_hz", "295-406".into())]));
    const BANDS: [(f64, f64); 13] = [
        (0.0, 100.0), (100.0, 200.0), (200.0, 300.0), (300.0, 400.0), (400.0, 500.0), (500.0, 600.0),
        (600.0, 700.0), (700.0, 800.0), (800.0, 900.0), (900.0, 1000.0), (24.0, 144.0), (144.0, 200.0), (200.0, 1000.0),
    ];
    for (lo, hi) in BANDS {
        b.push(format!("power_{lo}_{hi}_2000"), F::Power, both, Op::BandPower { fs: 2000, lo, hi },
            p(&[("fs", "2000".into()), ("band_hz", format!("{lo}-{hi}"))]));
    }
    b.push("power_centroid_2000".into(), F::PowerCentroid, both, Op::Centroid { fs: 2000 }, p(&[("fs", "2000".into())]));
    for fs in [0u32, 2000] {
        for (g, label) in ["1_5", "6_10", "11_15", "1_15"].iter().enumerate() {
            let tag = if fs == 0 { "native".to_string() } else { fs.to_string() };
            b.push(format!("svd_dependency_{label}_{tag}"), F::SvdDependency, both, Op::Svd { fs, group: g },
                p(&[("fs", tag.clone()), ("bins", label.replace('_', "-"))]));
        }
    }
    for (set, label) in ["a5", "d3", "d4", "d5"].iter().enumerate() {
        for kind in ENTROPIES {
            b.push(format!("wavelet_entropy_{}_{label}", ent_name(kind)), F::WaveletEntropy, both, Op::WaveletEntropy { set, kind },
                p(&[("wavelet", "db4".into()), ("depth", "5".into()), ("coeffs", label.to_string())]));
        }
    }
    b.push("wavelet_log_variance_d3".into(), F::WaveletEntropy, both, Op::WaveletLogVariance, p(&[("wavelet", "db4".into()), ("coeffs", "d3".into())]));
    b.push("wavelet_rmssd_a2".into(), F::WaveletRmssdZcr, both, Op::WaveletRmssd, p(&[("wavelet", "db8".into()), ("coeffs", "a2".into())]));
    b.push("wavelet_zcr_a2".into(), F::WaveletRmssdZcr, both, Op::WaveletZcr, p(&[("wavelet", "db8".into()), ("coeffs", "a2".into())]));
    b.push("peak_zcr_p85".into(), F::WaveletPeakZcr, Target::Heart, Op::PeakZcr { peak_threshold: false }, p(&[("percentile", "85".into()), ("of", "signal".into())]));
    b.push("peak_zcr_p58".into(), F::WaveletPeakZcr, Target::Heart, Op::PeakZcr { peak_threshold: true }, p(&[("percentile", "58".into()), ("of", "peaks".into())]));
    for c in 0..14 {
        b.push(format!("mfcc_mean_{c}"), F::Mfcc, both, Op::Mfcc(MfccStat::Mean(c)), p(&[("column", c.to_string())]));
    }
    for (stat, name) in [(MfccStat::AvgMin, "min"), (MfccStat::AvgMax, "max"), (MfccStat::AvgSkew, "skew")] {
        b.push(format!("mfcc_avg_{name}"), F::Mfcc, both, Op::Mfcc(stat), p(&[("stat", name.into())]));
    }
    b.push("f0_pct_below_250".into(), F::FundamentalFrequency, both, Op::F0Below250, p(&[("range_hz", "50-1000".into())]));
    b.push("f0_dominant".into(), F::FundamentalFrequency, both, Op::F0Dominant, p(&[("range_hz", "50-1000".into())]));

    let all = EnvelopeKind::ALL;
    let heart = EnvelopeKind::heart();
    let lung = EnvelopeKind::lung();
    for &k in &all {
        b.env(k, EnvStat::SampleEntropy(0.2), F::EnvelopeSampleEntropy, format!("env_sample_entropy_{}", k.name()));
    }
    for &k in heart {
        b.env(k, EnvStat::Variance, F::EnvelopeVariance, format!("env_variance_{}", k.name()));
    }
    for &k in heart {
        b.env(k, EnvStat::CycleCorrMean, F::EnvelopeCycleCorrelation, format!("env_cycle_corr_mean_{}", k.name()));
        b.env(k, EnvStat::CycleCorrStd, F::EnvelopeCycleCorrelation, format!("env_cycle_corr_std_{}", k.name()));
    }
    for &k in heart {
        b.env(k, EnvStat::RateMean, F::EnvelopeRateVariability, format!("env_hr_mean_{}", k.name()));
        b.env(k, EnvStat::RateStd, F::EnvelopeRateVariability, format!("env_hrv_{}", k.name()));
    }
    for seg in [Segmenter::Schmidt, Segmenter::Springer] {
        for s in 0..4 {
            let st = State::from_index(s);
            b.push(format!("pct_bad_segmentation_{}_{}", seg.name(), format!("{st:?}").to_lowercase()),
                F::BadSegmentation, Target::Heart, Op::BadSegmentation(seg, Some(st)), p(&[("segmenter", seg.name().into())]));
        }
        b.push(format!("pct_bad_segmentation_{}_all", seg.name()), F::BadSegmentation, Target::Heart, Op::BadSegmentation(seg, None),
            p(&[("segmenter", seg.name().into())]));
    }
    for seg in [Segmenter::Schmidt, Segmenter::Springer] {
        b.push(format!("segmentation_quality_{}", seg.name()), F::SegmentationQuality, Target::Heart, Op::SegmentationQuality(seg),
            p(&[("segmenter", seg.name().into())]));
    }
    for seg in [Segmenter::Schmidt, Segmenter::Springer] {
        for (i, stat) in ["rmssd", "sd1", "zcr"].iter().enumerate() {
            b.push(format!("pct_abnormal_segmentation_{}_{stat}", seg.name()), F::AbnormalSegmentation, Target::Heart,
                Op::AbnormalSegmentation(seg, i), p(&[("segmenter", seg.name().into()), ("threshold", super::ops::ABNORMAL_THRESHOLDS[i].to_string())]));
        }
    }

    // text-described families
    b.push("autocorr_kurtosis_5s".into(), F::AutocorrKurtosis, both, Op::AutocorrKurtosis { truncated: true }, p(&[("truncate_s", "5".into())]));
    let windows: [(Detector, &[(usize, usize)]); 5] = [
        (Detector::Gieraltowski, &[(2, 4), (4, 7), (2, 8)]),
        (Detector::Springer, &[(4, 8), (9, 14), (5, 16)]),
        (Detector::Schmidt, &[(4, 8), (9, 14), (5, 16)]),
        (Detector::Liang, &[(4, 8), (9, 14), (5, 16)]),
        (Detector::Breath, &[(1, 4), (1, 5)]),
    ];
    for (det, ranges) in windows {
        let (win, t) = if det == Detector::Breath { ("4", Target::Lung) } else { ("2.2", Target::Heart) };
        for &(lo, hi) in ranges {
            b.push(format!("acceptable_windows_{}_{lo}_{hi}", det.name()), F::AcceptableWindows, t, Op::AcceptableWindows(det, lo, hi),
                p(&[("detector", det.name().into()), ("window_s", win.into()), ("overlap", "0.25".into()), ("range", format!("{lo}-{hi}"))]));
        }
    }
    for &k in heart {
        b.push(format!("hsmm_quality_{}", k.name()), F::HsmmQuality, Target::Heart, Op::HsmmQuality(k), p(&[("envelope", k.name().into())]));
    }

    // family instantiations over both envelope sets
    for &k in &all {
        b.env(k, EnvStat::Kurtosis, F::EnvelopeStats, format!("env_kurtosis_{}", k.name()));
    }
    for &k in &all {
        b.env(k, EnvStat::Skewness, F::EnvelopeStats, format!("env_skewness_{}", k.name()));
    }
    for &k in lung {
        b.env(k, EnvStat::Variance, F::EnvelopeVariance, format!("env_variance_{}", k.name()));
    }
    for r in [Rhythm::Heart, Rhythm::Lung] {
        for &k in &all {
            b.env(k, EnvStat::Periodicity(r), F::EnvelopeAutocorr, format!("env_periodicity_{}_{}", r.name(), k.name()));
        }
    }
    for r in [Rhythm::Heart, Rhythm::Lung] {
        for &k in &all {
            b.env(k, EnvStat::CycleDuration(r), F::EnvelopeAutocorr, format!("env_cycle_duration_{}_{}", r.name(), k.name()));
        }
    }
    for &k in lung {
        b.env(k, EnvStat::CycleCorrMean, F::EnvelopeCycleCorrelation, format!("env_cycle_corr_mean_{}", k.name()));
        b.env(k, EnvStat::CycleCorrStd, F::EnvelopeCycleCorrelation, format!("env_cycle_corr_std_{}", k.name()));
    }
    for &k in lung {
        b.env(k, EnvStat::RateMean, F::EnvelopeRateVariability, format!("env_br_mean_{}", k.name()));
        b.env(k, EnvStat::RateStd, F::EnvelopeRateVariability, format!("env_brv_{}", k.name()));
    }
    for &k in &all {
        b.env(k, EnvStat::AutocorrKurtosis, F::EnvelopeAutocorr, format!("env_autocorr_kurtosis_{}", k.name()));
    }
    for &k in &all {
        b.env(k, EnvStat::AutocorrSampleEntropy, F::EnvelopeAutocorrSampleEntropy, format!("env_autocorr_sample_entropy_{}", k.name()));
    }
    for &k in &all {
        b.env(k, EnvStat::Zcr, F::EnvelopeStats, format!("env_zcr_{}", k.name()));
    }
    for &k in &all {
        b.env(k, EnvStat::Rmssd, F::EnvelopeStats, format!("env_rmssd_{}", k.name()));
    }
    for c in 0..14 {
        b.push(format!("mfcc_std_{c}"), F::Mfcc, both, Op::Mfcc(MfccStat::Std(c)), p(&[("column", c.to_string())]));
    }
    for (lo, hi) in BANDS {
        b.push(format!("power_{lo}_{hi}_native"), F::Power, both, Op::BandPower { fs: 0, lo, hi },
            p(&[("fs", "native".into()), ("band_hz", format!("{lo}-{hi}"))]));
    }
    for &k in &all {
        b.env(k, EnvStat::SampleEntropy(0.1), F::EnvelopeSampleEntropy, format!("env_sample_entropy_r01_{}", k.name()));
    }
    b.push("power_centroid_native".into(), F::PowerCentroid, both, Op::Centroid { fs: 0 }, p(&[("fs", "native".into())]));
    b.push("f0_mean".into(), F::FundamentalFrequency, both, Op::F0Mean, p(&[("range_hz", "50-1000".into())]));
    b.push("heart_contamination_0.3".into(), F::HeartContamination, Target::Lung, Op::HeartContamination(0.3), p(&[("threshold", "0.3".into())]));
    for seg in [Segmenter::Schmidt, Segmenter::Springer] {
        b.push(format!("heart_rate_{}", seg.name()), F::SegmentationVitals, Target::Heart, Op::HeartRate(seg), p(&[("segmenter", seg.name().into())]));
    }
    b.push("springer_confidence".into(), F::SegmentationVitals, Target::Heart, Op::SpringerConfidence, p(&[("envelopes", "4".into())]));
    for det in [Detector::Gieraltowski, Detector::Liang, Detector::Breath] {
        let t = if det == Detector::Breath { Target::Lung } else { Target::Heart };
        b.push(format!("peak_rate_{}", det.name()), F::PeakRate, t, Op::PeakRate(det), p(&[("detector", det.name().into())]));
    }
    assert_eq!(b.entries.len(), CATALOG_SIZE, "catalog size");
    b.entries
}

pub(crate) fn entries() -> &'static [Entry] {
    static CELL: OnceLock<Vec<Entry>> = OnceLock::new();
    CELL.get_or_init(build)
}

/// All feature specs, ordered by id.
pub fn catalog() -> Vec<FeatureSpec> {
    entries().iter().map(|e| e.spec.clone()).collect()
}

pub fn spec(id: usize) -> &'static FeatureSpec {
    &entries()[id].spec
}

pub fn id_of(name: &str) -> Option<usize> {
    entries().iter().position(|e| e.spec.name == name)
}
