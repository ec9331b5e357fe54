use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Repeated k-fold assignment: `assignments[iter][row]` is the test fold of
/// `row` in iteration `iter`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub n_iterations: usize,
    pub seed: u64,
    pub assignments: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.assignments.first().map_or(0, Vec::len)
    }

    pub fn test_rows(&self, iteration: usize, fold: usize) -> Vec<usize> {
        self.assignments[iteration]
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(r, _)| r)
            .collect()
    }

    pub fn train_rows(&self, iteration: usize, fold: usize) -> Vec<usize> {
        self.assignments[iteration]
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(r, _)| r)
            .collect()
    }

    pub fn fold_sizes(&self, iteration: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.assignments[iteration] {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded repeated k-fold plan. Each iteration shuffles the rows
/// independently and deals them round-robin into `n_folds` folds, so fold
/// sizes differ by at most one and the first folds take the remainder.
pub fn make_folds(n_rows: usize, n_folds: usize, n_iterations: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {n_folds}")));
    }
    if n_rows < n_folds {
        return Err(Error::invalid(format!(
            "{n_rows} rows cannot fill {n_folds} folds"
        )));
    }
    let assignments = (0..n_iterations)
        .map(|it| {
            let mut rng = rng::seeded(rng::derive_seed(seed, it as u64));
            let mut order: Vec<usize> = (0..n_rows).collect();
            order.shuffle(&mut rng);
            let mut assign = vec![0; n_rows];
            for (pos, &row) in order.iter().enumerate() {
                assign[row] = pos % n_folds;
            }
            assign
        })
        .collect();
    Ok(FoldPlan {
        n_folds,
        n_iterations,
        seed,
        assignments,
    })
}
