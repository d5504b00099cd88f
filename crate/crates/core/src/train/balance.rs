use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TrainError;

/// Random oversampling with replacement. Returns indices into the original
/// rows: every input index once, then the added duplicates, so that every
/// class reaches the largest class count.
pub fn oversample_balance(labels: &[u8], seed: u64) -> Result<Vec<usize>, TrainError> {
    if labels.is_empty() {
        return Err(TrainError::InvalidInput("no examples to balance".into()));
    }
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<usize> = (0..labels.len()).collect();
    for members in by_class.values() {
        for _ in members.len()..target {
            out.push(members[rng.gen_range(0..members.len())]);
        }
    }
    Ok(out)
}
