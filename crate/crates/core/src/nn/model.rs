use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NnError;

/// Weights `W_ih` (M2×(M1+1)), `W_ji` (M3×(M2+1)) and `W_kj` (M4×(M3+1)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct MlpModel {
    sizes: [usize; 4],
    weights: [DMatrix<f64>; 3],
}

/// Row-major on-disk form.
#[derive(Serialize, Deserialize)]
struct RawModel {
    layer_sizes: [usize; 4],
    w_ih: Vec<f64>,
    w_ji: Vec<f64>,
    w_kj: Vec<f64>,
}

impl From<MlpModel> for RawModel {
    fn from(m: MlpModel) -> Self {
        let rows = |w: &DMatrix<f64>| w.transpose().as_slice().to_vec();
        RawModel {
            layer_sizes: m.sizes,
            w_ih: rows(&m.weights[0]),
            w_ji: rows(&m.weights[1]),
            w_kj: rows(&m.weights[2]),
        }
    }
}

impl TryFrom<RawModel> for MlpModel {
    type Error = NnError;

    fn try_from(r: RawModel) -> Result<Self, NnError> {
        let s = r.layer_sizes;
        let mat = |l: usize, data: Vec<f64>| {
            let (rows, cols) = (s[l + 1], s[l] + 1);
            if data.len() != rows * cols {
                return Err(NnError::shape(&format!("weight matrix {}", l + 1), rows * cols, data.len()));
            }
            Ok(DMatrix::from_row_slice(rows, cols, &data))
        };
        MlpModel::from_weights([mat(0, r.w_ih)?, mat(1, r.w_ji)?, mat(2, r.w_kj)?])
    }
}

/// Intermediate values of a batch forward pass; one column per sample.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub z_i: DMatrix<f64>,
    pub a_i: DMatrix<f64>,
    pub z_j: DMatrix<f64>,
    pub a_j: DMatrix<f64>,
    pub a_k: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub [DMatrix<f64>; 3]);

fn relu(z: &DMatrix<f64>) -> DMatrix<f64> {
    z.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// `W · [1; a]` for every column of `a`.
fn affine(w: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = w.columns(1, w.ncols() - 1) * a;
    let bias = w.column(0);
    for mut col in z.column_iter_mut() {
        col += bias;
    }
    z
}

/// Column 0 gets the row sums of `delta`, the rest `delta · aᵀ`.
fn outer(delta: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(delta.nrows(), a.nrows() + 1);
    g.set_column(0, &delta.column_sum());
    g.columns_mut(1, a.nrows()).copy_from(&(delta * a.transpose()));
    g
}

impl MlpModel {
    pub fn zeros(sizes: [usize; 4]) -> Result<Self, NnError> {
        Self::from_weights(std::array::from_fn(|l| DMatrix::zeros(sizes[l + 1], sizes[l] + 1)))
    }

    /// Uniform weights in `±1/√fan_in`, where `fan_in` is the width of the
    /// previous layer. Biases use the same range.
    pub fn random(sizes: [usize; 4], rng: &mut impl Rng) -> Result<Self, NnError> {
        check_sizes(&sizes)?;
        let weights = std::array::from_fn(|l| {
            let r = 1.0 / (sizes[l] as f64).sqrt();
            DMatrix::from_fn(sizes[l + 1], sizes[l] + 1, |_, _| rng.random_range(-r..=r))
        });
        Self::from_weights(weights)
    }

    pub fn from_weights(weights: [DMatrix<f64>; 3]) -> Result<Self, NnError> {
        let sizes = [weights[0].ncols().saturating_sub(1), weights[0].nrows(), weights[1].nrows(), weights[2].nrows()];
        check_sizes(&sizes)?;
        for l in 0..3 {
            let expected = (sizes[l + 1], sizes[l] + 1);
            if weights[l].shape() != expected {
                return Err(NnError::shape(
                    &format!("weight matrix {}", l + 1),
                    format!("{expected:?}"),
                    format!("{:?}", weights[l].shape()),
                ));
            }
            if weights[l].iter().any(|w| !w.is_finite()) {
                return Err(NnError::NonFinite(format!("weight matrix {}", l + 1)));
            }
        }
        Ok(Self { sizes, weights })
    }

    /// `(M1, M2, M3, M4)`.
    pub fn layer_sizes(&self) -> [usize; 4] {
        self.sizes
    }

    pub fn weights(&self) -> &[DMatrix<f64>; 3] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [DMatrix<f64>; 3] {
        &mut self.weights
    }

    /// Forward pass over a batch `x` of shape `M1 × B`.
    pub fn forward(&self, x: &DMatrix<f64>) -> Result<ForwardCache, NnError> {
        if x.nrows() != self.sizes[0] {
            return Err(NnError::shape("input", self.sizes[0], x.nrows()));
        }
        let z_i = affine(&self.weights[0], x);
        let a_i = relu(&z_i);
        let z_j = affine(&self.weights[1], &a_i);
        let a_j = relu(&z_j);
        let a_k = affine(&self.weights[2], &a_j);
        Ok(ForwardCache { z_i, a_i, z_j, a_j, a_k })
    }

    /// Output for a single flattened input vector.
    pub fn predict_flat(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        let x = DMatrix::from_column_slice(x.len(), 1, x);
        Ok(self.forward(&x)?.a_k.as_slice().to_vec())
    }

    /// Maps observation displacements (in observation order) to the
    /// displacement of every free vertex.
    pub fn predict(&self, observations: &[crate::Vec3]) -> Result<Vec<crate::Vec3>, NnError> {
        let flat: Vec<f64> = observations.iter().flat_map(|v| v.iter().copied()).collect();
        let out = self.predict_flat(&flat)?;
        Ok(out.chunks_exact(3).map(crate::Vec3::from_column_slice).collect())
    }

    /// Non-bias weight count of each layer.
    pub fn reg_counts(&self) -> [usize; 3] {
        std::array::from_fn(|l| self.sizes[l + 1] * self.sizes[l])
    }
}

fn check_sizes(sizes: &[usize; 4]) -> Result<(), NnError> {
    if sizes.contains(&0) {
        return Err(NnError::InvalidConfig(format!("layer sizes must be positive: {sizes:?}")));
    }
    Ok(())
}

fn check_batch(model: &MlpModel, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(), NnError> {
    if x.ncols() == 0 {
        return Err(NnError::shape("batch", "at least one sample", 0));
    }
    if y.nrows() != model.sizes[3] {
        return Err(NnError::shape("target", model.sizes[3], y.nrows()));
    }
    if y.ncols() != x.ncols() {
        return Err(NnError::shape("target columns", x.ncols(), y.ncols()));
    }
    Ok(())
}

fn penalty(model: &MlpModel, lambdas: &[f64; 3]) -> f64 {
    let n = model.reg_counts();
    (0..3)
        .map(|l| {
            let w = &model.weights[l];
            lambdas[l] / (2.0 * n[l] as f64) * w.columns(1, w.ncols() - 1).norm_squared()
        })
        .sum()
}

/// Regularized cost `J` of a batch (`x`: `M1 × m`, `y`: `M4 × m`).
pub fn cost(model: &MlpModel, x: &DMatrix<f64>, y: &DMatrix<f64>, lambdas: &[f64; 3]) -> Result<f64, NnError> {
    check_batch(model, x, y)?;
    let a_k = model.forward(x)?.a_k;
    Ok(0.5 * (a_k - y).norm_squared() / x.ncols() as f64 + penalty(model, lambdas))
}

/// `J` and its exact gradient with respect to all three weight matrices.
pub fn cost_and_gradients(
    model: &MlpModel,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambdas: &[f64; 3],
) -> Result<(f64, Gradients), NnError> {
    check_batch(model, x, y)?;
    let m = x.ncols() as f64;
    let c = model.forward(x)?;
    let [w1, w2, w3] = &model.weights;

    let delta_k = &c.a_k - y;
    let j = 0.5 * delta_k.norm_squared() / m + penalty(model, lambdas);

    let step = |z: &DMatrix<f64>| z.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let delta_j = (w3.columns(1, w3.ncols() - 1).transpose() * &delta_k).component_mul(&step(&c.z_j));
    let delta_i = (w2.columns(1, w2.ncols() - 1).transpose() * &delta_j).component_mul(&step(&c.z_i));

    let mut grads = [outer(&delta_i, x), outer(&delta_j, &c.a_i), outer(&delta_k, &c.a_j)];
    let n = model.reg_counts();
    for (l, (g, w)) in grads.iter_mut().zip([w1, w2, w3]).enumerate() {
        *g /= m;
        let k = lambdas[l] / n[l] as f64;
        let cols = w.ncols() - 1;
        g.columns_mut(1, cols).zip_apply(&w.columns(1, cols), |gv, wv| *gv += k * wv);
    }
    Ok((j, Gradients(grads)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_outputs_zero() {
        let m = MlpModel::zeros([3, 4, 5, 6]).unwrap();
        assert_eq!(m.predict_flat(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn hand_evaluated_chain() {
        let ones = |r, c| DMatrix::from_element(r, c, 1.0);
        let m = MlpModel::from_weights([ones(1, 2), ones(1, 2), ones(1, 2)]).unwrap();
        let c = m.forward(&DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert_eq!((c.a_i[0], c.a_j[0], c.a_k[0]), (3.0, 4.0, 5.0));
    }

    #[test]
    fn relu_clamps_negative_preactivations() {
        let w1 = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -2.0]);
        let m = MlpModel::from_weights([w1, DMatrix::zeros(1, 3), DMatrix::zeros(1, 2)]).unwrap();
        let c = m.forward(&DMatrix::from_element(1, 1, 0.5)).unwrap();
        assert_eq!(c.a_i.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn cost_hand_example() {
        let mut w3 = DMatrix::zeros(2, 2);
        w3[(0, 0)] = 1.0;
        w3[(1, 0)] = 2.0;
        let m = MlpModel::from_weights([DMatrix::zeros(1, 2), DMatrix::zeros(1, 2), w3]).unwrap();
        let x = DMatrix::from_element(1, 1, 0.3);
        let y = DMatrix::zeros(2, 1);
        assert_eq!(cost(&m, &x, &y, &[0.0; 3]).unwrap(), 2.5);
        // bias-only weights are never penalized
        assert_eq!(cost(&m, &x, &y, &[1.0; 3]).unwrap(), 2.5);
    }

    #[test]
    fn penalty_only_term() {
        let mut w1 = DMatrix::zeros(2, 3);
        w1[(1, 2)] = 0.7;
        let m = MlpModel::from_weights([w1, DMatrix::zeros(1, 3), DMatrix::zeros(1, 2)]).unwrap();
        let x = DMatrix::zeros(2, 1);
        let y = DMatrix::zeros(1, 1);
        let j = cost(&m, &x, &y, &[0.3, 0.0, 0.0]).unwrap();
        assert!((j - 0.3 * 0.49 / (2.0 * 4.0)).abs() < 1e-15);
    }

    #[test]
    fn output_delta_matches_residual() {
        let mut w3 = DMatrix::zeros(1, 2);
        w3[(0, 0)] = 3.0;
        let m = MlpModel::from_weights([DMatrix::zeros(1, 2), DMatrix::zeros(1, 2), w3]).unwrap();
        let (_, g) =
            cost_and_gradients(&m, &DMatrix::zeros(1, 1), &DMatrix::from_element(1, 1, 1.0), &[0.0; 3]).unwrap();
        // dJ/d(bias of output) = δ_k · 1
        assert_eq!(g.0[2][(0, 0)], 2.0);
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = MlpModel::random([3, 5, 4, 2], &mut rng).unwrap();
        let x = DMatrix::from_fn(3, 4, |i, j| (i + 2 * j) as f64 * 0.1 - 0.3);
        let y = m.forward(&x).unwrap().a_k;
        let (j, g) = cost_and_gradients(&m, &x, &y, &[0.0; 3]).unwrap();
        assert_eq!(j, 0.0);
        assert!(g.0.iter().all(|g| g.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn shape_errors() {
        let m = MlpModel::zeros([2, 3, 3, 4]).unwrap();
        assert!(m.forward(&DMatrix::zeros(3, 1)).is_err());
        assert!(cost(&m, &DMatrix::zeros(2, 2), &DMatrix::zeros(4, 1), &[0.0; 3]).is_err());
        assert!(cost(&m, &DMatrix::zeros(2, 0), &DMatrix::zeros(4, 0), &[0.0; 3]).is_err());
        assert!(MlpModel::zeros([0, 1, 1, 1]).is_err());
    }

    #[test]
    fn json_is_row_major_and_round_trips() {
        let w1 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let m = MlpModel::from_weights([w1, DMatrix::zeros(1, 3), DMatrix::from_element(1, 2, 0.1)]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"w_ih\":[1.0,2.0,3.0,4.0]"), "{json}");
        let back: MlpModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        let broken = json.replace("[1.0,2.0,3.0,4.0]", "[1.0,2.0,3.0]");
        assert!(serde_json::from_str::<MlpModel>(&broken).is_err());
    }

    #[test]
    fn predict_reshapes_vertex_major() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = MlpModel::random([6, 4, 4, 9], &mut rng).unwrap();
        let obs = [crate::Vec3::new(0.1, 0.2, 0.3), crate::Vec3::new(-0.1, 0.0, 0.5)];
        let field = m.predict(&obs).unwrap();
        let raw = m.predict_flat(&[0.1, 0.2, 0.3, -0.1, 0.0, 0.5]).unwrap();
        let back: Vec<f64> = field.iter().flat_map(|v| v.iter().copied()).collect();
        assert_eq!(back, raw);
        assert_eq!(field.len(), 3);
    }
}
