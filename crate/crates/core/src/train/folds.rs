use std::collections::BTreeMap;

use super::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splits {
    KFold(usize),
    LeaveOnePatientOut,
}

/// Fold index per item. Patients are never split. Patients are ordered by
/// their majority label (ties to the lower label) and then id, and dealt to
/// folds round-robin so each fold sees a similar label mix.
pub fn patientwise_folds(patients: &[String], labels: &[u8], splits: Splits) -> Result<Vec<usize>, TrainError> {
    if patients.len() != labels.len() {
        return Err(TrainError::InvalidInput("patients and labels differ in length".into()));
    }
    let mut per_patient: BTreeMap<&str, [usize; 6]> = BTreeMap::new();
    for (p, &y) in patients.iter().zip(labels) {
        per_patient.entry(p.as_str()).or_insert([0; 6])[(y as usize).min(5)] += 1;
    }
    let k = match splits {
        Splits::KFold(k) => k,
        Splits::LeaveOnePatientOut => per_patient.len(),
    };
    if k < 2 || per_patient.len() < k {
        return Err(TrainError::InvalidInput(format!("{} patients cannot fill {k} folds", per_patient.len())));
    }
    let mut order: Vec<(usize, &str)> = per_patient
        .iter()
        .map(|(p, c)| {
            let majority = (0..6).rev().max_by_key(|&l| c[l]).unwrap_or(0);
            (majority, *p)
        })
        .collect();
    order.sort();
    let fold_of: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, (_, p))| (*p, i % k)).collect();
    Ok(patients.iter().map(|p| fold_of[p.as_str()]).collect())
}

pub fn n_folds(assignment: &[usize]) -> usize {
    assignment.iter().max().map_or(0, |m| m + 1)
}

/// Asserts that no patient appears in more than one fold.
pub fn check_patient_integrity(patients: &[String], folds: &[usize]) -> Result<(), TrainError> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (p, &f) in patients.iter().zip(folds) {
        if let Some(prev) = seen.insert(p.as_str(), f) {
            if prev != f {
                return Err(TrainError::Leakage(format!("patient {p} spans folds {prev} and {f}")));
            }
        }
    }
    Ok(())
}
