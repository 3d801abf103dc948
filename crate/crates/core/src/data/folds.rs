use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use crate::error::{invalid, Result};

/// Assignment of every case to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Case indices held out in fold `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Stratified `k`-fold partition. Each class's cases are shuffled and dealt
/// round-robin; the dealing position carries over between classes so fold
/// sizes stay balanced overall.
pub fn stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return invalid(format!("fold count must be at least 2, got {k}"));
    }
    if k > ds.len() {
        return invalid(format!("fold count {k} exceeds case count {}", ds.len()));
    }
    let mut by_class = vec![Vec::new(); ds.schema().class_arity()];
    for l in 0..ds.len() {
        match ds.class_of(l) {
            Some(c) => by_class[c].push(l),
            None => return invalid(format!("case {} has a missing class value", l + 1)),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; ds.len()];
    let mut next = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &l in members.iter() {
            assignments[l] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan { k, assignments, seed })
}
