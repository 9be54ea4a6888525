use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, alpha_schedule, cost_and_gradients, AdamParams, AdamState, MlpModel, NnError};
use crate::sampling::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Mini-batch size `m₁`; the remainder of each shuffled epoch is skipped.
    pub batch_size: usize,
    /// Consecutive Adam updates on the same batch before moving on.
    pub inner_iters: usize,
    /// Step-size decay constant `γ` in `α = 1/(γ n_e)`.
    pub gamma: f64,
    pub lambdas: [f64; 3],
    #[serde(default)]
    pub adam: AdamParams,
    pub seed: u64,
    /// Test RMSE is logged every this many updates (0: only after training).
    #[serde(default)]
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 1000,
            inner_iters: 10,
            gamma: 50.0,
            lambdas: [0.1; 3],
            adam: AdamParams::default(),
            seed: 0,
            eval_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.epochs == 0 || self.batch_size == 0 || self.inner_iters == 0 {
            return Err(NnError::InvalidConfig("epochs, batch_size and inner_iters must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(NnError::InvalidConfig(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(NnError::InvalidConfig(format!("lambdas must be non-negative: {:?}", self.lambdas)));
        }
        self.adam.validate()
    }
}

/// Network inputs and targets, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl TrainingData {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let m = ds.samples.len();
        let x = DMatrix::from_fn(3 * ds.n_obs(), m, |r, c| {
            let f = ds.observation_free[r / 3];
            ds.samples[c].u_all[3 * f + r % 3]
        });
        let y = DMatrix::from_fn(3 * ds.n_free, m, |r, c| ds.samples[c].u_all[r]);
        Self { x, y }
    }

    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.x.ncols() == 0
    }

    pub fn select(&self, idx: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.x.select_columns(idx), self.y.select_columns(idx))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    /// `J` of each update, evaluated before the step.
    pub cost: Vec<f64>,
    pub epoch_mean_cost: Vec<f64>,
    /// `(update count, test RMSE in simulation units)`.
    pub test_curve: Vec<(u64, f64)>,
    pub updates: u64,
    pub initial_train_rmse: f64,
    pub final_train_rmse: f64,
}

/// Component RMS of `pred - target`.
pub(crate) fn rms(pred: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    ((pred - target).norm_squared() / pred.len() as f64).sqrt()
}

fn rms_on(model: &MlpModel, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, NnError> {
    Ok(rms(&model.forward(x)?.a_k, y))
}

/// Trains a fresh network of hidden sizes `hidden` on the `train_idx`
/// columns of `data`. `test_idx` (possibly empty) only feeds the log.
pub fn train(
    data: &TrainingData,
    train_idx: &[usize],
    test_idx: &[usize],
    hidden: [usize; 2],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainingLog), NnError> {
    cfg.validate()?;
    let m = train_idx.len();
    let b = cfg.batch_size;
    if m < b {
        return Err(NnError::EmptyPartition { m, batch: b });
    }
    if let Some(&bad) = train_idx.iter().chain(test_idx).find(|&&i| i >= data.len()) {
        return Err(NnError::shape("sample index", format!("< {}", data.len()), bad));
    }
    let sizes = [data.x.nrows(), hidden[0], hidden[1], data.y.nrows()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::random(sizes, &mut rng)?;
    let mut state = AdamState::new(&model);

    let (x_train, y_train) = data.select(train_idx);
    let (x_test, y_test) = data.select(test_idx);
    let test_rmse = |model: &MlpModel| -> Result<Option<f64>, NnError> {
        if test_idx.is_empty() {
            Ok(None)
        } else {
            rms_on(model, &x_test, &y_test).map(Some)
        }
    };

    let mut log = TrainingLog { initial_train_rmse: rms_on(&model, &x_train, &y_train)?, ..Default::default() };
    let mut order: Vec<usize> = (0..m).collect();
    for epoch in 1..=cfg.epochs {
        let alpha = alpha_schedule(epoch, cfg.gamma)?;
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        let first = log.cost.len();
        for chunk in order.chunks_exact(b) {
            let xb = x_train.select_columns(chunk);
            let yb = y_train.select_columns(chunk);
            for _ in 0..cfg.inner_iters {
                let (j, g) = cost_and_gradients(&model, &xb, &yb, &cfg.lambdas)?;
                if !j.is_finite() {
                    return Err(NnError::NonFinite(format!("cost at update {}", log.updates + 1)));
                }
                adam_step(&mut state, &mut model, &g, alpha, &cfg.adam)?;
                log.cost.push(j);
                epoch_sum += j;
                log.updates += 1;
                if cfg.eval_every > 0 && log.updates % cfg.eval_every as u64 == 0 {
                    if let Some(r) = test_rmse(&model)? {
                        log.test_curve.push((log.updates, r));
                    }
                }
            }
        }
        log.epoch_mean_cost.push(epoch_sum / (log.cost.len() - first) as f64);
        log::debug!("epoch {epoch}: alpha {alpha:.3e}, mean J {:.6e}", log.epoch_mean_cost[epoch - 1]);
    }
    if log.test_curve.last().map(|p| p.0) != Some(log.updates) {
        if let Some(r) = test_rmse(&model)? {
            log.test_curve.push((log.updates, r));
        }
    }
    log.final_train_rmse = rms_on(&model, &x_train, &y_train)?;
    if model.weights().iter().any(|w| w.iter().any(|v| !v.is_finite())) {
        return Err(NnError::NonFinite("trained weights".into()));
    }
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(m: usize) -> TrainingData {
        let x = DMatrix::from_fn(3, m, |r, c| ((r * 7 + c * 3) % 11) as f64 / 11.0 - 0.5);
        let y = DMatrix::from_fn(4, m, |r, c| x[(r % 3, c)] * (r as f64 + 1.0) - 0.1 * x[((r + 1) % 3, c)]);
        TrainingData { x, y }
    }

    fn cfg() -> TrainConfig {
        TrainConfig { epochs: 1, batch_size: 4, inner_iters: 1, seed: 5, ..Default::default() }
    }

    #[test]
    fn minimal_schedule_is_one_update() {
        let data = toy(4);
        let idx: Vec<usize> = (0..4).collect();
        let (_, log) = train(&data, &idx, &[], [3, 3], &cfg()).unwrap();
        assert_eq!(log.updates, 1);
        assert_eq!(log.cost.len(), 1);
        assert!(log.test_curve.is_empty());
    }

    #[test]
    fn remainder_is_dropped() {
        let data = toy(11);
        let idx: Vec<usize> = (0..11).collect();
        let c = TrainConfig { epochs: 3, inner_iters: 10, ..cfg() };
        let (_, log) = train(&data, &idx, &[0], [3, 3], &c).unwrap();
        // ⌊11/4⌋ = 2 batches × 10 inner iterations × 3 epochs
        assert_eq!(log.updates, 60);
        assert_eq!(log.epoch_mean_cost.len(), 3);
        assert_eq!(log.test_curve.len(), 1);
    }

    #[test]
    fn same_seed_same_weights() {
        let data = toy(12);
        let idx: Vec<usize> = (0..12).collect();
        let c = TrainConfig { epochs: 4, eval_every: 3, ..cfg() };
        let a = train(&data, &idx, &[1, 2], [5, 4], &c).unwrap();
        let b = train(&data, &idx, &[1, 2], [5, 4], &c).unwrap();
        assert_eq!(a, b);
        let d = train(&data, &idx, &[1, 2], [5, 4], &TrainConfig { seed: 6, ..c }).unwrap();
        assert_ne!(a.0, d.0);
    }

    #[test]
    fn rejects_small_training_set_and_bad_config() {
        let data = toy(3);
        assert!(matches!(
            train(&data, &[0, 1, 2], &[], [2, 2], &cfg()),
            Err(NnError::EmptyPartition { m: 3, batch: 4 })
        ));
        let c = TrainConfig { gamma: 0.0, ..cfg() };
        assert!(train(&toy(8), &[0, 1, 2, 3], &[], [2, 2], &c).is_err());
        assert!(train(&toy(8), &[0, 1, 2, 9], &[], [2, 2], &cfg()).is_err());
    }

    #[test]
    fn cost_drops_on_a_learnable_map() {
        let data = toy(40);
        let idx: Vec<usize> = (0..40).collect();
        let c = TrainConfig { epochs: 30, batch_size: 10, inner_iters: 5, lambdas: [0.0; 3], ..cfg() };
        let (_, log) = train(&data, &idx, &[], [16, 16], &c).unwrap();
        assert!(log.epoch_mean_cost.last().unwrap() < &log.epoch_mean_cost[0]);
        assert!(log.final_train_rmse < 0.2 * log.initial_train_rmse);
    }
}
