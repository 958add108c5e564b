//! Stratified k-fold splits with a hold-out validation set per fold.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dataset;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Fraction of the non-test portion held out for model selection.
pub const VALIDATION_FRACTION: f64 = 0.1;

/// `k` stratified splits of `ds`.
///
/// Each class is shuffled and dealt round-robin over the folds, with the dealing
/// offset carried across classes so fold sizes stay balanced. Within a split the
/// validation set takes `ceil(10%)` of the non-test graphs, apportioned across
/// classes by largest remainder and with at least one graph per class whenever
/// the class has two or more non-test members.
pub fn stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    stratified_folds_for_labels(&ds.labels(), ds.num_classes, k, seed)
}

pub fn stratified_folds_for_labels(
    labels: &[usize],
    num_classes: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(Error::Config(format!(
                "class {c} has {} members, fewer than the {k} folds",
                members.len()
            )));
        }
    }

    let mut rng = rng::stream(seed, &[rng::tag::FOLDS]);
    let mut test_sets: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut cursor = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            test_sets[cursor % k].push(i);
            cursor += 1;
        }
    }

    let mut splits = Vec::with_capacity(k);
    for (f, test) in test_sets.into_iter().enumerate() {
        let in_test: std::collections::HashSet<usize> = test.iter().copied().collect();
        let rest: Vec<Vec<usize>> = by_class
            .iter()
            .map(|m| m.iter().copied().filter(|i| !in_test.contains(i)).collect())
            .collect();
        let quotas = validation_quotas(&rest.iter().map(Vec::len).collect::<Vec<_>>());
        let mut val = Vec::new();
        let mut train = Vec::new();
        for (c, members) in rest.into_iter().enumerate() {
            let mut members = members;
            // A per-fold shuffle so validation picks differ between folds.
            members.shuffle(&mut rng::stream(seed, &[rng::tag::FOLDS, f as u64, c as u64]));
            let (v, t) = members.split_at(quotas[c]);
            val.extend_from_slice(v);
            train.extend_from_slice(t);
        }
        let mut test = test;
        test.sort_unstable();
        val.sort_unstable();
        train.sort_unstable();
        splits.push(FoldSplit {
            train_idx: train,
            val_idx: val,
            test_idx: test,
        });
    }
    Ok(splits)
}

fn validation_quotas(class_sizes: &[usize]) -> Vec<usize> {
    let total: usize = class_sizes.iter().sum();
    let target = (VALIDATION_FRACTION * total as f64).ceil() as usize;
    let mut quotas: Vec<usize> = Vec::with_capacity(class_sizes.len());
    let mut remainders = Vec::with_capacity(class_sizes.len());
    for (c, &size) in class_sizes.iter().enumerate() {
        let exact = target as f64 * size as f64 / total.max(1) as f64;
        quotas.push(exact.floor() as usize);
        remainders.push((exact - exact.floor(), c));
    }
    let assigned: usize = quotas.iter().sum();
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().take(target.saturating_sub(assigned)) {
        quotas[c] += 1;
    }
    // Guarantee one validation graph per class without emptying its training set.
    for (c, &size) in class_sizes.iter().enumerate() {
        if quotas[c] == 0 && size >= 2 {
            quotas[c] = 1;
        }
        quotas[c] = quotas[c].min(size.saturating_sub(1));
    }
    quotas
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn labels(counts: &[usize]) -> Vec<usize> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect()
    }

    #[test]
    fn balanced_ten_in_five_folds() {
        let y = labels(&[5, 5]);
        let splits = stratified_folds_for_labels(&y, 2, 5, 3).unwrap();
        assert_eq!(splits.len(), 5);
        for s in &splits {
            assert_eq!(s.test_idx.len(), 2);
            let classes: HashSet<usize> = s.test_idx.iter().map(|&i| y[i]).collect();
            assert_eq!(classes.len(), 2);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let y = labels(&[30, 17, 9]);
        let a = stratified_folds_for_labels(&y, 3, 4, 11).unwrap();
        let b = stratified_folds_for_labels(&y, 3, 4, 11).unwrap();
        assert_eq!(a, b);
        let c = stratified_folds_for_labels(&y, 3, 4, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn configuration_errors() {
        let y = labels(&[5, 5]);
        assert!(matches!(stratified_folds_for_labels(&y, 2, 1, 0), Err(Error::Config(_))));
        let y = labels(&[5, 2]);
        assert!(matches!(stratified_folds_for_labels(&y, 2, 3, 0), Err(Error::Config(_))));
    }

    #[test]
    fn partitions_and_proportions() {
        // MUTAG-like class sizes.
        let y = labels(&[63, 125]);
        let splits = stratified_folds_for_labels(&y, 2, 10, 0).unwrap();
        let mut seen = vec![0usize; y.len()];
        for s in &splits {
            for &i in &s.test_idx {
                seen[i] += 1;
            }
            let mut all: Vec<usize> = s
                .train_idx
                .iter()
                .chain(&s.val_idx)
                .chain(&s.test_idx)
                .copied()
                .collect();
            all.sort_unstable();
            assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
            let non_test = y.len() - s.test_idx.len();
            assert_eq!(s.val_idx.len(), (0.1 * non_test as f64).ceil() as usize);
            for c in 0..2 {
                let n_c = y.iter().filter(|&&l| l == c).count() as f64;
                let t_c = s.test_idx.iter().filter(|&&i| y[i] == c).count() as f64;
                let expected = n_c * s.test_idx.len() as f64 / y.len() as f64;
                assert!((t_c - expected).abs() <= 1.0, "class {c}: {t_c} vs {expected}");
                assert!(s.val_idx.iter().any(|&i| y[i] == c));
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }
}
