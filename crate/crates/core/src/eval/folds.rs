use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub permutation: Vec<usize>,
    /// Test indices of each fold.
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Every index outside fold `f`, in permutation order.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        self.folds.iter().enumerate().filter(|(i, _)| *i != f).flat_map(|(_, v)| v.iter().copied()).collect()
    }
}

/// Seeded shuffle of `0..n` cut into `k` contiguous chunks; the first
/// `n % k` chunks get one extra element.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 || n < k {
        return Err(EvalError::InvalidFolds { n, k });
    }
    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(permutation[start..start + len].to_vec());
        start += len;
    }
    Ok(FoldPlan { k, seed, permutation, folds })
}
