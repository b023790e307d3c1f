use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seeds;

/// Fold index per example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.k as u64).to_le_bytes());
        for &f in &self.fold_of {
            h.update((f as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Seeded per-class shuffle followed by round-robin dealing. The dealing
/// position carries over from one class to the next so that overall fold
/// sizes stay within one of each other as well.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::invalid("folds", "k must be >= 2"));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if let Some((c, v)) = by_class.iter().find(|(_, v)| v.len() < k) {
        return Err(Error::invalid(
            "folds",
            format!("class {c} has {} members, fewer than k = {k}", v.len()),
        ));
    }
    let mut rng = seeds::rng(seeds::derive(seed, "folds"));
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_per_class_per_fold() {
        let labels: Vec<usize> = (0..100).map(|i| i % 10).collect();
        let f = stratified_folds(&labels, 10, 3).unwrap();
        for fold in 0..10 {
            let mut classes: Vec<usize> = f.test_indices(fold).iter().map(|&i| labels[i]).collect();
            classes.sort_unstable();
            assert_eq!(classes, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn pigeonhole_sizes() {
        let f = stratified_folds(&[0; 105], 10, 1).unwrap();
        for fold in 0..10 {
            let n = f.test_indices(fold).len();
            assert!(n == 10 || n == 11);
        }
        assert_eq!(f, stratified_folds(&[0; 105], 10, 1).unwrap());
        assert_ne!(f.digest(), stratified_folds(&[0; 105], 10, 2).unwrap().digest());
    }

    #[test]
    fn small_class_rejected() {
        let mut labels = vec![0; 20];
        labels.extend([1; 9]);
        assert!(stratified_folds(&labels, 10, 0).is_err());
    }
}
