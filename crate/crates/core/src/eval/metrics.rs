use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::mesh::ScaleConvention;

/// What the RMSE averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RmseMode {
    /// Every scalar component (`3N` values per sample).
    #[default]
    Component,
    /// Per-vertex Euclidean error (`N` values per sample).
    VertexNorm,
}

fn check(pred: &[f64], target: &[f64]) -> Result<(), EvalError> {
    if pred.len() != target.len() || pred.len() % 3 != 0 || pred.is_empty() {
        return Err(EvalError::ShapeMismatch(format!(
            "prediction has {} values, target {} (both must be equal non-zero multiples of 3)",
            pred.len(),
            target.len()
        )));
    }
    Ok(())
}

/// RMSE in millimetres over flattened fields (any number of samples
/// concatenated vertex-major).
pub fn rmse(pred: &[f64], target: &[f64], scale: &ScaleConvention, mode: RmseMode) -> Result<f64, EvalError> {
    check(pred, target)?;
    let sq: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    let count = match mode {
        RmseMode::Component => pred.len(),
        RmseMode::VertexNorm => pred.len() / 3,
    };
    Ok(scale.to_mm((sq / count as f64).sqrt()))
}

/// Per-vertex positional error of one sample, millimetres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpeSummary {
    pub per_vertex: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    pub argmax: usize,
    /// True displacement magnitude of the `argmax` vertex, millimetres.
    pub argmax_displacement: f64,
}

pub fn local_positional_error(pred: &[f64], target: &[f64], scale: &ScaleConvention) -> Result<LpeSummary, EvalError> {
    check(pred, target)?;
    let per_vertex: Vec<f64> = pred
        .chunks_exact(3)
        .zip(target.chunks_exact(3))
        .map(|(p, t)| scale.to_mm(((p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2) + (p[2] - t[2]).powi(2)).sqrt()))
        .collect();
    let mut argmax = 0;
    for (i, &e) in per_vertex.iter().enumerate() {
        if e > per_vertex[argmax] {
            argmax = i;
        }
    }
    let t = &target[3 * argmax..3 * argmax + 3];
    Ok(LpeSummary {
        mean: per_vertex.iter().sum::<f64>() / per_vertex.len() as f64,
        max: per_vertex[argmax],
        argmax,
        argmax_displacement: scale.to_mm((t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt()),
        per_vertex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_hand_values() {
        let s = ScaleConvention::default();
        let t = [0.0; 3];
        assert_eq!(rmse(&t, &t, &s, RmseMode::Component).unwrap(), 0.0);
        let p = [3.0 / 256.0, 4.0 / 256.0, 0.0];
        let r = rmse(&p, &t, &s, RmseMode::Component).unwrap();
        assert!((r - (25.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((r - 2.8868).abs() < 1e-4);
        assert!((rmse(&p, &t, &s, RmseMode::VertexNorm).unwrap() - 5.0).abs() < 1e-12);
        let s2 = ScaleConvention::new(512.0).unwrap();
        assert!((rmse(&p, &t, &s2, RmseMode::Component).unwrap() - 2.0 * r).abs() < 1e-12);
        assert!(rmse(&p, &t[..2], &s, RmseMode::Component).is_err());
    }

    #[test]
    fn lpe_single_vertex_offset() {
        let s = ScaleConvention::default();
        let target = vec![0.0; 9];
        let mut pred = target.clone();
        pred[3] = 0.01;
        let l = local_positional_error(&pred, &target, &s).unwrap();
        assert_eq!(l.per_vertex, vec![0.0, 2.56, 0.0]);
        assert_eq!((l.max, l.argmax), (2.56, 1));
        assert!((l.mean - 2.56 / 3.0).abs() < 1e-15);
        let same = local_positional_error(&target, &target, &s).unwrap();
        assert!(same.per_vertex.iter().all(|&e| e == 0.0));
    }
}
