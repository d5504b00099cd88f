//! Multi-rater quality labels: Fleiss' kappa, per-item agreement, filtering
//! and median labels.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const N_CATEGORIES: usize = 5;
pub const DEFAULT_AGREEMENT_THRESHOLD: f64 = 0.2;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("invalid panel: {0}")]
    InvalidPanel(String),
    #[error("kappa undefined: every rating falls in one category but items disagree")]
    Undefined,
    #[error("no item has agreement above {0}")]
    EmptySurvivors(f64),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelItem {
    pub recording_id: String,
    /// One score in 1..=5 per rater.
    pub ratings: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaterPanel {
    pub items: Vec<PanelItem>,
}

impl RaterPanel {
    pub fn new(items: Vec<PanelItem>) -> Result<Self, AnnotationError> {
        let p = RaterPanel { items };
        p.validate()?;
        Ok(p)
    }

    pub fn from_ratings(ratings: &[Vec<u8>]) -> Result<Self, AnnotationError> {
        Self::new(
            ratings
                .iter()
                .enumerate()
                .map(|(i, r)| PanelItem { recording_id: format!("item{i}"), ratings: r.clone() })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        let Some(first) = self.items.first() else {
            return Err(AnnotationError::InvalidPanel("no items".into()));
        };
        let n = first.ratings.len();
        if n < 2 {
            return Err(AnnotationError::InvalidPanel(format!("{n} raters (need at least 2)")));
        }
        for it in &self.items {
            if it.ratings.len() != n {
                return Err(AnnotationError::InvalidPanel(format!(
                    "item {} has {} ratings, expected {n}",
                    it.recording_id,
                    it.ratings.len()
                )));
            }
            if let Some(bad) = it.ratings.iter().find(|r| !(1..=5).contains(*r)) {
                return Err(AnnotationError::InvalidPanel(format!("score {bad} for {}", it.recording_id)));
            }
        }
        Ok(())
    }

    pub fn n_raters(&self) -> usize {
        self.items.first().map_or(0, |i| i.ratings.len())
    }

    fn counts(item: &PanelItem) -> [usize; N_CATEGORIES] {
        let mut c = [0; N_CATEGORIES];
        for &r in &item.ratings {
            c[r as usize - 1] += 1;
        }
        c
    }

    /// Reads `recording_id,rater_id,score` rows. Raters are ordered by id;
    /// every recording must be scored by the same rater set.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, AnnotationError> {
        #[derive(Deserialize)]
        struct Row {
            recording_id: String,
            rater_id: String,
            score: u8,
        }
        let mut order = Vec::new();
        let mut by_item: BTreeMap<String, BTreeMap<String, u8>> = BTreeMap::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let r: Row = row?;
            if !by_item.contains_key(&r.recording_id) {
                order.push(r.recording_id.clone());
            }
            let slot = by_item.entry(r.recording_id.clone()).or_default();
            if slot.insert(r.rater_id.clone(), r.score).is_some() {
                return Err(AnnotationError::InvalidPanel(format!(
                    "rater {} scored {} twice",
                    r.rater_id, r.recording_id
                )));
            }
        }
        let items = order
            .into_iter()
            .map(|id| {
                let ratings = by_item[&id].values().copied().collect();
                PanelItem { recording_id: id, ratings }
            })
            .collect();
        Self::new(items)
    }

    pub fn load(path: &Path) -> Result<Self, AnnotationError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Item-level agreement `P_i = (sum_j n_ij^2 - n) / (n (n - 1))`.
pub fn per_item_agreement(panel: &RaterPanel) -> Vec<f64> {
    let n = panel.n_raters() as f64;
    panel
        .items
        .iter()
        .map(|it| {
            let s: usize = RaterPanel::counts(it).iter().map(|c| c * c).sum();
            (s as f64 - n) / (n * (n - 1.0))
        })
        .collect()
}

/// Fleiss' kappa over the five quality categories.
pub fn fleiss_kappa(panel: &RaterPanel) -> Result<f64, AnnotationError> {
    panel.validate()?;
    if panel.items.len() < 2 {
        return Err(AnnotationError::InvalidPanel("kappa needs at least 2 items".into()));
    }
    let n = panel.n_raters() as f64;
    let n_items = panel.items.len() as f64;
    let mut p_j = [0.0; N_CATEGORIES];
    for it in &panel.items {
        for (j, c) in RaterPanel::counts(it).iter().enumerate() {
            p_j[j] += *c as f64;
        }
    }
    for p in &mut p_j {
        *p /= n_items * n;
    }
    let p_bar = per_item_agreement(panel).iter().sum::<f64>() / n_items;
    let p_e: f64 = p_j.iter().map(|p| p * p).sum();
    if p_e >= 1.0 {
        return if p_bar >= 1.0 { Ok(1.0) } else { Err(AnnotationError::Undefined) };
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Keeps items whose agreement is strictly above `threshold`.
pub fn filter_low_agreement(panel: &RaterPanel, threshold: f64) -> Result<RaterPanel, AnnotationError> {
    let p = per_item_agreement(panel);
    let items: Vec<PanelItem> =
        panel.items.iter().zip(&p).filter(|(_, &pi)| pi > threshold).map(|(it, _)| it.clone()).collect();
    if items.is_empty() {
        return Err(AnnotationError::EmptySurvivors(threshold));
    }
    Ok(RaterPanel { items })
}

/// Median score; an even-count midpoint rounds half up.
pub fn median_label(ratings: &[u8]) -> Option<u8> {
    if ratings.is_empty() {
        return None;
    }
    let mut r = ratings.to_vec();
    r.sort_unstable();
    let k = r.len();
    let twice = if k % 2 == 1 { 2 * r[k / 2] as u32 } else { r[k / 2 - 1] as u32 + r[k / 2] as u32 };
    Some(twice.div_ceil(2).clamp(1, 5) as u8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n_items: usize,
    pub n_raters: usize,
    pub kappa: Option<f64>,
    pub threshold: f64,
    pub n_retained: usize,
    pub kappa_retained: Option<f64>,
    pub removed: Vec<String>,
    /// Median label per retained recording.
    pub labels: BTreeMap<String, u8>,
}

pub fn agreement_report(panel: &RaterPanel, threshold: f64) -> Result<AgreementReport, AnnotationError> {
    panel.validate()?;
    let kept = filter_low_agreement(panel, threshold)?;
    let kept_ids: std::collections::HashSet<&str> = kept.items.iter().map(|i| i.recording_id.as_str()).collect();
    let removed =
        panel.items.iter().filter(|i| !kept_ids.contains(i.recording_id.as_str())).map(|i| i.recording_id.clone()).collect();
    Ok(AgreementReport {
        n_items: panel.items.len(),
        n_raters: panel.n_raters(),
        kappa: fleiss_kappa(panel).ok(),
        threshold,
        n_retained: kept.items.len(),
        kappa_retained: fleiss_kappa(&kept).ok(),
        removed,
        labels: kept
            .items
            .iter()
            .map(|i| (i.recording_id.clone(), median_label(&i.ratings).expect("validated panel")))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn panel(r: &[&[u8]]) -> RaterPanel {
        RaterPanel::from_ratings(&r.iter().map(|v| v.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(fleiss_kappa(&panel(&[&[1, 1], &[2, 2]])).unwrap(), 1.0);
        assert_eq!(fleiss_kappa(&panel(&[&[1, 2], &[1, 2]])).unwrap(), -1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let big: Vec<Vec<u8>> = (0..1000).map(|_| (0..5).map(|_| rng.gen_range(1..=5)).collect()).collect();
        let k = fleiss_kappa(&RaterPanel::from_ratings(&big).unwrap()).unwrap();
        assert!(k.abs() < 0.05, "{k}");
    }

    #[test]
    fn kappa_single_category() {
        assert_eq!(fleiss_kappa(&panel(&[&[3, 3], &[3, 3]])).unwrap(), 1.0);
    }

    #[test]
    fn agreement_examples() {
        let p = per_item_agreement(&panel(&[&[3, 3, 3, 3, 3], &[1, 2, 3, 4, 5], &[4, 4, 5, 5, 3]]));
        assert_eq!(p[0], 1.0);
        assert_eq!(p[1], 0.0);
        assert!((p[2] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn filtering_examples() {
        let all = panel(&[&[3, 3, 3], &[1, 1, 1]]);
        assert_eq!(filter_low_agreement(&all, 0.2).unwrap(), all);
        let p = panel(&[&[3, 3, 3, 3, 3], &[1, 2, 3, 4, 5], &[4, 4, 5, 5, 3]]);
        let f = filter_low_agreement(&p, 0.2).unwrap();
        assert_eq!(f.items.len(), 1);
        assert_eq!(f.items[0].recording_id, "item0");
        assert!(filter_low_agreement(&panel(&[&[1, 2, 3, 4, 5], &[1, 2, 3, 4, 5]]), 0.2).is_err());
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_label(&[3, 3, 3, 3, 3]), Some(3));
        assert_eq!(median_label(&[2, 4]), Some(3));
        assert_eq!(median_label(&[2, 3]), Some(3));
        assert_eq!(median_label(&[]), None);
    }

    #[test]
    fn csv_round_trip_orders_raters() {
        let csv = "recording_id,rater_id,score\nb,r2,4\nb,r1,5\na,r1,1\na,r2,1\n";
        let p = RaterPanel::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(p.items[0].recording_id, "b");
        assert_eq!(p.items[0].ratings, vec![5, 4]);
        assert!(RaterPanel::read_csv("recording_id,rater_id,score\na,r1,6\na,r2,1\n".as_bytes()).is_err());
        assert!(RaterPanel::read_csv("recording_id,rater_id,score\na,r1,2\nb,r1,1\nb,r2,1\n".as_bytes()).is_err());
    }

    #[test]
    fn rejects_ragged_panels() {
        assert!(RaterPanel::from_ratings(&[vec![1, 2], vec![1]]).is_err());
        assert!(RaterPanel::from_ratings(&[vec![1]]).is_err());
        assert!(RaterPanel::from_ratings(&[vec![0, 2]]).is_err());
    }

    fn ratings_strategy() -> impl Strategy<Value = Vec<Vec<u8>>> {
        (2usize..6).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(1u8..=5, n), 2..30))
    }

    proptest! {
        #[test]
        fn kappa_permutation_invariant(r in ratings_strategy(), rot in 0usize..30, seed in any::<u64>()) {
            let p = RaterPanel::from_ratings(&r).unwrap();
            let mut items = r.clone();
            let k = rot % items.len();
            items.rotate_left(k);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = items[0].len();
            let shift = rng.gen_range(0..n);
            for it in &mut items {
                it.rotate_left(shift);
            }
            let q = RaterPanel::from_ratings(&items).unwrap();
            match (fleiss_kappa(&p), fleiss_kappa(&q)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "{other:?}"),
            }
        }

        #[test]
        fn kappa_at_most_one(r in ratings_strategy()) {
            if let Ok(k) = fleiss_kappa(&RaterPanel::from_ratings(&r).unwrap()) {
                prop_assert!(k <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn median_in_range(r in prop::collection::vec(1u8..=5, 1..12)) {
            let m = median_label(&r).unwrap();
            prop_assert!((1..=5).contains(&m));
            prop_assert!(m >= *r.iter().min().unwrap() && m <= *r.iter().max().unwrap());
        }

        #[test]
        fn perfect_panel_survives_filter(r in prop::collection::vec(1u8..=5, 2..20), n in 2usize..6) {
            let rows: Vec<Vec<u8>> = r.iter().map(|&v| vec![v; n]).collect();
            let p = RaterPanel::from_ratings(&rows).unwrap();
            let f = filter_low_agreement(&p, 0.2).unwrap();
            prop_assert_eq!(fleiss_kappa(&f).unwrap(), 1.0);
        }
    }
}
