use neoscope_core::features::{catalog, extract, fast_ids, id_of, CostClass, Family, Mode, Status};
use neoscope_core::signal_io::AudioRecording;
use neoscope_core::synth::{synth, SynthSpec};

fn value(v: &[f64], name: &str) -> f64 {
    v[id_of(name).unwrap_or_else(|| panic!("no feature {name}"))]
}

#[test]
fn fast_mode_matches_full_mode_on_fast_ids() {
    let rec = synth(&SynthSpec::heart(130.0, 10.0, 3)).unwrap();
    let full = extract(&rec, Mode::Full).unwrap();
    let fast = extract(&rec, Mode::Fast).unwrap();
    for i in fast_ids() {
        assert_eq!(full.values[i].to_bits(), fast.values[i].to_bits(), "{}", catalog()[i].name);
    }
    for s in catalog().iter().filter(|s| s.cost == CostClass::Slow) {
        assert_eq!(fast.status[s.id as usize], Status::Skipped);
        assert_eq!(fast.values[s.id as usize], s.sentinel);
    }
}

#[test]
fn silence_gives_a_finite_vector() {
    let rec = AudioRecording::new(vec![0.0; 40_000], 4000).unwrap();
    let v = extract(&rec, Mode::Full).unwrap();
    assert!(v.values.iter().all(|x| x.is_finite()));
    assert_eq!(value(&v.values, "clipping_pct"), 0.0);
    assert_eq!(value(&v.values, "heart_contamination_0.1"), 0.0);
}

#[test]
fn heart_cycle_duration_at_120_bpm() {
    let rec = synth(&SynthSpec::heart(120.0, 20.0, 11)).unwrap();
    let v = extract(&rec, Mode::Fast).unwrap();
    let c = value(&v.values, "autocorr_cycle_duration_heart");
    assert!((c - 0.5).abs() <= 0.05, "{c}");
    let hr = value(&v.values, "heart_rate_springer");
    assert!((hr - 120.0).abs() < 5.0, "{hr}");
}

#[test]
fn fractions_lie_in_unit_interval() {
    let fams = [
        Family::Clipping,
        Family::HeartContamination,
        Family::BadSegmentation,
        Family::AbnormalSegmentation,
        Family::AcceptableWindows,
        Family::HsmmQuality,
        Family::Periodicity,
        Family::CryPower,
        Family::Power,
    ];
    for (k, spec) in [SynthSpec::heart(150.0, 5.0, 4), SynthSpec::lung(50.0, 0.0, 5)].iter().enumerate() {
        let v = extract(&synth(spec).unwrap(), Mode::Full).unwrap();
        for s in catalog().iter().filter(|s| fams.contains(&s.family)) {
            let x = v.values[s.id as usize];
            assert!((0.0..=1.0).contains(&x), "case {k}: {} = {x}", s.name);
        }
    }
}

#[test]
fn magnitude_features_ignore_polarity() {
    let rec = synth(&SynthSpec::heart(110.0, 10.0, 6)).unwrap();
    let neg = AudioRecording::new(rec.samples.iter().map(|v| -v).collect(), 4000).unwrap();
    let a = extract(&rec, Mode::Fast).unwrap();
    let b = extract(&neg, Mode::Fast).unwrap();
    let fams = [Family::Lpc, Family::Power, Family::PowerCentroid, Family::EnvelopeVariance, Family::Clipping, Family::Mfcc];
    for s in catalog().iter().filter(|s| fams.contains(&s.family) && s.cost == CostClass::Fast) {
        let (x, y) = (a.values[s.id as usize], b.values[s.id as usize]);
        assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{}: {x} vs {y}", s.name);
    }
}

#[test]
fn rejects_bad_input() {
    assert!(extract(&AudioRecording::new(vec![0.0; 8000], 4000).unwrap(), Mode::Fast).is_err());
    assert!(extract(&AudioRecording::new(vec![0.0; 20_000], 2000).unwrap(), Mode::Fast).is_err());
}
