use std::collections::HashSet;
use std::hash::Hash;

use super::EvalError;

/// Positions `1..=k` whose item is relevant and not seen earlier in the ranking.
fn hit_ranks<T: Eq + Hash>(retrieved: &[T], relevant: &HashSet<T>, k: usize) -> Vec<usize> {
    let mut seen = HashSet::new();
    retrieved
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, item)| relevant.contains(*item) && seen.insert(*item))
        .map(|(i, _)| i + 1)
        .collect()
}

fn check_k(k: usize) -> Result<(), EvalError> {
    if k == 0 {
        Err(EvalError::InvalidK)
    } else {
        Ok(())
    }
}

fn check_relevant<T>(relevant: &HashSet<T>) -> Result<(), EvalError> {
    if relevant.is_empty() {
        Err(EvalError::EmptyRelevant)
    } else {
        Ok(())
    }
}

/// Relevant items in the top `k`, divided by `k` even when fewer were retrieved.
pub fn precision_at_k<T: Eq + Hash>(retrieved: &[T], relevant: &HashSet<T>, k: usize) -> Result<f64, EvalError> {
    check_k(k)?;
    Ok(hit_ranks(retrieved, relevant, k).len() as f64 / k as f64)
}

pub fn recall_at_k<T: Eq + Hash>(retrieved: &[T], relevant: &HashSet<T>, k: usize) -> Result<f64, EvalError> {
    check_k(k)?;
    check_relevant(relevant)?;
    Ok(hit_ranks(retrieved, relevant, k).len() as f64 / relevant.len() as f64)
}

/// Sum of precision at each relevant rank within `k`, normalized by
/// `min(|relevant|, k)`.
pub fn average_precision_at_k<T: Eq + Hash>(retrieved: &[T], relevant: &HashSet<T>, k: usize) -> Result<f64, EvalError> {
    check_k(k)?;
    check_relevant(relevant)?;
    let sum: f64 = hit_ranks(retrieved, relevant, k)
        .iter()
        .enumerate()
        .map(|(hits_before, rank)| (hits_before + 1) as f64 / *rank as f64)
        .sum();
    Ok(sum / relevant.len().min(k) as f64)
}

/// Harmonic mean, or 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}
