use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kfold, local_positional_error, rmse, EvalError, RmseMode};
use crate::nn::{train, TrainConfig, TrainingData};
use crate::sampling::Dataset;

/// Published metrics a run can be compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMetrics {
    pub label: String,
    pub rmse_mm: f64,
    pub rmse_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub k: usize,
    pub repeats: usize,
    /// Repeat `r` splits with seed `seed + r`.
    pub seed: u64,
    pub hidden: [usize; 2],
    /// `train.seed` is replaced by a per-trial seed derived from the split seed and fold.
    pub train: TrainConfig,
    #[serde(default)]
    pub rmse_mode: RmseMode,
    #[serde(default)]
    pub keep_predictions: bool,
    #[serde(default)]
    pub reference: Option<ReferenceMetrics>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            k: 5,
            repeats: 1,
            seed: 0,
            hidden: [90, 90],
            train: TrainConfig::default(),
            rmse_mode: RmseMode::Component,
            keep_predictions: false,
            reference: None,
        }
    }
}

impl SessionConfig {
    pub fn trial_seed(&self, repeat: usize, fold: usize) -> u64 {
        self.seed.wrapping_add(repeat as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(fold as u64 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub repeat: usize,
    pub fold: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub rmse_mm: f64,
    pub rmse_pct: f64,
    pub mean_lpe_mm: f64,
    pub mean_max_lpe_mm: f64,
    pub mean_max_lpe_pct: f64,
    pub updates: u64,
    pub final_cost: f64,
    pub initial_train_rmse_mm: f64,
    pub final_train_rmse_mm: f64,
    /// `(update count, test RMSE in mm)`.
    pub curve: Vec<(u64, f64)>,
}

/// Local positional error of one test sample in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLpe {
    pub repeat: usize,
    pub fold: usize,
    pub sample: usize,
    pub mean_mm: f64,
    pub max_mm: f64,
    pub max_vertex: usize,
    pub max_vertex_displacement_mm: f64,
}

/// Test-set predictions of one trial, sample-major, each sample `3N` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPredictions {
    pub repeat: usize,
    pub fold: usize,
    pub test_idx: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub mesh_hash: String,
    pub n_samples: usize,
    pub n_free: usize,
    pub n_obs: usize,
    pub observation_pct: f64,
    pub mm_per_unit: f64,
    pub max_displacement_mm: f64,
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub hidden: [usize; 2],
    pub rmse_mode: RmseMode,
    pub mean_rmse_mm: f64,
    pub mean_rmse_pct: f64,
    pub mean_lpe_mm: f64,
    pub mean_max_lpe_mm: f64,
    pub mean_max_lpe_pct: f64,
    /// Test RMSE (mm) averaged over trials at update counts shared by all trials.
    pub mean_curve: Vec<(u64, f64)>,
    pub trials: Vec<TrialReport>,
    pub samples: Vec<SampleLpe>,
    pub reference: Option<ReferenceMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<Vec<TrialPredictions>>,
}

/// Percentage of `mm` relative to `max_mm`; zero when `max_mm` is zero.
fn pct(mm: f64, max_mm: f64) -> f64 {
    if max_mm > 0.0 {
        mm / max_mm * 100.0
    } else {
        0.0
    }
}

fn mean(v: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = v.len();
    v.sum::<f64>() / n as f64
}

/// Repeated k-fold cross-validation. Trials run on the current rayon pool
/// and are reported in (repeat, fold) order.
pub fn run_session(ds: &Dataset, cfg: &SessionConfig) -> Result<SessionReport, EvalError> {
    if cfg.repeats == 0 {
        return Err(EvalError::InvalidConfig("repeats must be at least 1".into()));
    }
    if cfg.hidden.contains(&0) {
        return Err(EvalError::InvalidConfig(format!("hidden sizes must be positive: {:?}", cfg.hidden)));
    }
    ds.validate().map_err(|e| EvalError::InvalidConfig(e.to_string()))?;
    let data = TrainingData::from_dataset(ds);
    let scale = ds.scale;
    let max_mm = scale.to_mm(ds.max_target_displacement());
    let n3 = 3 * ds.n_free;

    let mut jobs = Vec::new();
    for r in 0..cfg.repeats {
        let plan = kfold(ds.len(), cfg.k, cfg.seed.wrapping_add(r as u64))?;
        for f in 0..cfg.k {
            jobs.push((r, f, plan.train_indices(f), plan.folds[f].clone()));
        }
    }

    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|(r, f, train_idx, test_idx)| {
            let (r, f) = (*r, *f);
            let seed = cfg.trial_seed(r, f);
            let tc = TrainConfig { seed, ..cfg.train.clone() };
            let (model, log) = train(&data, train_idx, test_idx, cfg.hidden, &tc)
                .map_err(|source| EvalError::Training { repeat: r, fold: f, source })?;
            let (x, y) = data.select(test_idx);
            let pred = model.forward(&x).map_err(|source| EvalError::Training { repeat: r, fold: f, source })?.a_k;
            let rmse_mm = rmse(pred.as_slice(), y.as_slice(), &scale, cfg.rmse_mode)?;
            let mut samples = Vec::with_capacity(test_idx.len());
            for (c, &sample) in test_idx.iter().enumerate() {
                let l = local_positional_error(
                    &pred.as_slice()[c * n3..(c + 1) * n3],
                    &y.as_slice()[c * n3..(c + 1) * n3],
                    &scale,
                )?;
                samples.push(SampleLpe {
                    repeat: r,
                    fold: f,
                    sample,
                    mean_mm: l.mean,
                    max_mm: l.max,
                    max_vertex: l.argmax,
                    max_vertex_displacement_mm: l.argmax_displacement,
                });
            }
            let mean_max = mean(samples.iter().map(|s| s.max_mm));
            let trial = TrialReport {
                repeat: r,
                fold: f,
                seed,
                n_train: train_idx.len(),
                n_test: test_idx.len(),
                rmse_mm,
                rmse_pct: pct(rmse_mm, max_mm),
                mean_lpe_mm: mean(samples.iter().map(|s| s.mean_mm)),
                mean_max_lpe_mm: mean_max,
                mean_max_lpe_pct: pct(mean_max, max_mm),
                updates: log.updates,
                final_cost: log.cost.last().copied().unwrap_or(f64::NAN),
                initial_train_rmse_mm: scale.to_mm(log.initial_train_rmse),
                final_train_rmse_mm: scale.to_mm(log.final_train_rmse),
                curve: log.test_curve.iter().map(|&(i, v)| (i, scale.to_mm(v))).collect(),
            };
            let kept = cfg.keep_predictions.then(|| TrialPredictions {
                repeat: r,
                fold: f,
                test_idx: test_idx.clone(),
                values: pred.as_slice().to_vec(),
            });
            log::info!("repeat {r} fold {f}: test RMSE {rmse_mm:.4} mm ({:.3}%)", trial.rmse_pct);
            Ok((trial, samples, kept))
        })
        .collect::<Result<_, EvalError>>()?;

    let mut trials = Vec::with_capacity(outcomes.len());
    let mut samples = Vec::new();
    let mut predictions = Vec::new();
    for (t, s, p) in outcomes {
        trials.push(t);
        samples.extend(s);
        predictions.extend(p);
    }

    let mut curve: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for t in &trials {
        for &(i, v) in &t.curve {
            let e = curve.entry(i).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    let mean_curve =
        curve.into_iter().filter(|(_, (_, c))| *c == trials.len()).map(|(i, (s, c))| (i, s / c as f64)).collect();

    let mean_rmse_mm = mean(trials.iter().map(|t| t.rmse_mm));
    let mean_max_lpe_mm = mean(samples.iter().map(|s| s.max_mm));
    Ok(SessionReport {
        mesh_hash: ds.mesh_hash.clone(),
        n_samples: ds.len(),
        n_free: ds.n_free,
        n_obs: ds.n_obs(),
        observation_pct: ds.n_obs() as f64 / ds.n_free as f64 * 100.0,
        mm_per_unit: scale.mm_per_unit,
        max_displacement_mm: max_mm,
        k: cfg.k,
        repeats: cfg.repeats,
        seed: cfg.seed,
        hidden: cfg.hidden,
        rmse_mode: cfg.rmse_mode,
        mean_rmse_mm,
        mean_rmse_pct: pct(mean_rmse_mm, max_mm),
        mean_lpe_mm: mean(samples.iter().map(|s| s.mean_mm)),
        mean_max_lpe_mm,
        mean_max_lpe_pct: pct(mean_max_lpe_mm, max_mm),
        mean_curve,
        trials,
        samples,
        reference: cfg.reference.clone(),
        predictions: cfg.keep_predictions.then_some(predictions),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ScaleConvention;
    use crate::sampling::{DeformationSample, RegionInfo};
    use crate::Vec3;

    fn toy(m: usize) -> Dataset {
        let samples = (0..m)
            .map(|i| {
                let t = Vec3::new((i % 5) as f64 * 0.01, (i / 5) as f64 * 0.01, 0.002 * i as f64);
                let u_all = (0..4).flat_map(|v| (0..3).map(move |a| t[a] * (1.0 + 0.3 * v as f64))).collect();
                DeformationSample { region: 0, target_disp: t, u_all, f_c: None }
            })
            .collect();
        Dataset {
            mesh_hash: "h".into(),
            observation_ids: vec![7],
            observation_free: vec![3],
            n_free: 4,
            scale: ScaleConvention::default(),
            n_steps: 1,
            regions: vec![RegionInfo { name: "r".into(), n_vertices: 1 }],
            samples,
            failures: vec![],
        }
    }

    fn cfg() -> SessionConfig {
        SessionConfig {
            k: 2,
            repeats: 1,
            seed: 3,
            hidden: [6, 6],
            train: TrainConfig { epochs: 3, batch_size: 4, inner_iters: 2, eval_every: 2, ..Default::default() },
            keep_predictions: true,
            ..Default::default()
        }
    }

    #[test]
    fn minimal_session_trains_two_models() {
        let ds = toy(12);
        let rep = run_session(&ds, &cfg()).unwrap();
        assert_eq!(rep.trials.len(), 2);
        assert_eq!(rep.samples.len(), 12);
        assert!(rep.mean_rmse_mm.is_finite() && rep.mean_rmse_mm > 0.0);
        assert_eq!(rep.observation_pct, 25.0);
        for t in &rep.trials {
            assert_eq!(t.rmse_pct, t.rmse_mm / rep.max_displacement_mm * 100.0);
            assert_eq!(t.updates, 6);
        }
        for s in &rep.samples {
            assert!(s.mean_mm <= s.max_mm);
        }
        assert!(!rep.mean_curve.is_empty());
    }

    #[test]
    fn mean_rmse_recomputes_from_predictions() {
        let ds = toy(15);
        let c = SessionConfig { k: 3, repeats: 2, ..cfg() };
        let rep = run_session(&ds, &c).unwrap();
        let preds = rep.predictions.as_ref().unwrap();
        assert_eq!(preds.len(), 6);
        let mut sum = 0.0;
        for p in preds {
            let target: Vec<f64> = p.test_idx.iter().flat_map(|&i| ds.samples[i].u_all.iter().copied()).collect();
            sum += rmse(&p.values, &target, &ds.scale, RmseMode::Component).unwrap();
        }
        assert!((sum / 6.0 - rep.mean_rmse_mm).abs() <= 1e-12 * rep.mean_rmse_mm);
    }

    #[test]
    fn deterministic_and_errors() {
        let ds = toy(12);
        assert_eq!(run_session(&ds, &cfg()).unwrap(), run_session(&ds, &cfg()).unwrap());
        let big_batch = SessionConfig { train: TrainConfig { batch_size: 50, ..cfg().train }, ..cfg() };
        assert!(matches!(run_session(&ds, &big_batch), Err(EvalError::Training { repeat: 0, fold: 0, .. })));
        assert!(run_session(&ds, &SessionConfig { k: 20, ..cfg() }).is_err());
    }
}
