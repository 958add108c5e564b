//! Two-layer perceptrons used as classifier and self-supervised heads.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::error::{Error, Result};

/// Hidden width of every head.
pub const HIDDEN_WIDTH: usize = 32;

/// `relu(x W1 + b1) W2 + b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub w1: Array2<f64>,
    pub b1: Array2<f64>,
    pub w2: Array2<f64>,
    pub b2: Array2<f64>,
}

/// `φ`: encodings to the space where InfoNCE similarities are taken.
pub type ProjectionHead = Mlp;
/// `ψ`: encodings to the space where the non-contrastive cosine is taken.
pub type PredictionHead = Mlp;
/// Graph classifier on top of the encoder.
pub type Predictor = Mlp;

fn uniform_matrix(rows: usize, cols: usize, fan_in: usize, rng: &mut impl Rng) -> Array2<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bounds");
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

impl Mlp {
    /// Weights and biases uniform in `±1/sqrt(fan_in)`.
    pub fn init(input: usize, hidden: usize, output: usize, rng: &mut impl Rng) -> Self {
        Self {
            w1: uniform_matrix(input, hidden, input, rng),
            b1: uniform_matrix(1, hidden, input, rng),
            w2: uniform_matrix(hidden, output, hidden, rng),
            b2: uniform_matrix(1, output, hidden, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.ncols()
    }

    pub fn arrays(&self) -> Vec<&Array2<f64>> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut Array2<f64>> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> MlpVars {
        let vars: Vec<Var> = self
            .arrays()
            .into_iter()
            .map(|a| if trainable { tape.param(a.clone()) } else { tape.constant(a.clone()) })
            .collect();
        MlpVars::from_slice(&vars)
    }

    /// Inference without a tape.
    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::contract(
                "mlp",
                format!("input has {} columns, head expects {}", x.ncols(), self.input_dim()),
            ));
        }
        let h = (x.dot(&self.w1) + &self.b1).mapv(|v| v.max(0.0));
        Ok(h.dot(&self.w2) + &self.b2)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MlpVars {
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

impl MlpVars {
    /// From four vars in the order of [`Mlp::arrays`].
    pub fn from_slice(v: &[Var]) -> Self {
        Self {
            w1: v[0],
            b1: v[1],
            w2: v[2],
            b2: v[3],
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        vec![self.w1, self.b1, self.w2, self.b2]
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let z = tape.matmul(x, self.w1)?;
        let z = tape.add(z, self.b1)?;
        let h = tape.relu(z);
        let out = tape.matmul(h, self.w2)?;
        tape.add(out, self.b2)
    }
}

/// Mean softmax cross-entropy of `logits` (batch x classes) against `labels`.
pub fn cross_entropy(tape: &mut Tape, logits: Var, labels: &[usize]) -> Result<Var> {
    let (rows, classes) = tape.shape(logits);
    if rows != labels.len() {
        return Err(Error::contract(
            "cross_entropy",
            format!("{rows} logit rows for {} labels", labels.len()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::contract("cross_entropy", format!("label {bad} with {classes} classes")));
    }
    let mut onehot = Array2::zeros((rows, classes));
    for (i, &y) in labels.iter().enumerate() {
        onehot[[i, y]] = -1.0;
    }
    let logp = tape.log_softmax_rows(logits);
    let target = tape.constant(onehot);
    let picked = tape.mul(logp, target)?;
    let total = tape.sum(picked);
    Ok(tape.scale(total, 1.0 / rows.max(1) as f64))
}

/// Standardizes each column of `x` with the batch's own mean and population
/// std. Gradients flow through the statistics. Constant columns map to zero.
pub fn batch_standardize(tape: &mut Tape, x: Var) -> Var {
    let b = tape.shape(x).0;
    if b == 0 {
        return x;
    }
    let bf = b as f64;
    let center = tape.constant(Array2::from_shape_fn((b, b), |(i, j)| {
        if i == j { 1.0 - 1.0 / bf } else { -1.0 / bf }
    }));
    let centered = tape.matmul(center, x).expect("centering matrix matches the batch");
    let cols = tape.transpose(centered);
    let cols = tape.l2_normalize_rows(cols);
    let out = tape.transpose(cols);
    tape.scale(out, bf.sqrt())
}

/// Column mean and population std of `x`, used to standardize at evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl ColumnStats {
    pub fn of(x: &Array2<f64>) -> Self {
        let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()));
        let std = x.std_axis(Axis(0), 0.0);
        Self { mean, std }
    }

    /// Applies the stored statistics the way [`batch_standardize`] applies batch ones.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x - &self.mean;
        for (mut col, &s) in out.columns_mut().into_iter().zip(&self.std) {
            if s > 0.0 {
                col.mapv_inplace(|v| v / s);
            } else {
                col.fill(0.0);
            }
        }
        out
    }
}

/// Row-wise argmax; ties go to the lowest index.
pub fn argmax_rows(x: &Array2<f64>) -> Vec<usize> {
    x.rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::finite_diff_check;
    use ndarray::array;

    #[test]
    fn tape_forward_matches_apply() {
        let mlp = Mlp::init(3, HIDDEN_WIDTH, 2, &mut crate::rng::stream(1, &[]));
        let x = array![[1.0, -2.0, 0.5], [0.0, 0.3, 0.1]];
        let mut tape = Tape::new();
        let vars = mlp.bind(&mut tape, false);
        let xv = tape.constant(x.clone());
        let out = vars.forward(&mut tape, xv).unwrap();
        let direct = mlp.apply(&x).unwrap();
        assert_eq!(tape.value(out), &direct);
        assert_eq!(mlp.output_dim(), 2);
    }

    #[test]
    fn cross_entropy_of_uniform_logits_is_log_classes() {
        let mut tape = Tape::new();
        let logits = tape.constant(Array2::zeros((4, 3)));
        let loss = cross_entropy(&mut tape, logits, &[0, 1, 2, 0]).unwrap();
        assert!((tape.scalar(loss) - 3f64.ln()).abs() < 1e-15);
        let logits = tape.constant(Array2::zeros((2, 3)));
        assert!(cross_entropy(&mut tape, logits, &[0, 3]).is_err());
        assert!(cross_entropy(&mut tape, logits, &[0]).is_err());
    }

    #[test]
    fn batch_standardize_matches_column_stats() {
        let x = array![[1.0, 5.0, 2.0], [3.0, 5.0, -1.0], [8.0, 5.0, 0.5], [0.0, 5.0, 4.0]];
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let out = batch_standardize(&mut tape, xv);
        let expect = ColumnStats::of(&x).apply(&x);
        for (a, b) in tape.value(out).iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        // Independent check of one entry: (1 - 3) / popstd(1, 3, 8, 0).
        let sd = ((4.0 + 0.0 + 25.0 + 9.0) / 4.0f64).sqrt();
        assert!((expect[[0, 0]] - (-2.0 / sd)).abs() < 1e-12);
        assert!(expect.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_standardize_gradients_match_finite_differences() {
        let x = array![[1.0, -2.0], [0.7, 0.3], [-1.0, 0.4], [2.0, 1.5]];
        let w = array![[0.3, -1.2], [0.8, 0.1], [-0.5, 0.9], [1.1, 0.2]];
        let err = finite_diff_check(
            |t, v| {
                let s = batch_standardize(t, v[0]);
                let w = t.constant(w.clone());
                let p = t.mul(s, w)?;
                Ok(t.sum(p))
            },
            &[x],
            1e-6,
        )
        .unwrap();
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn cross_entropy_value() {
        let mut tape = Tape::new();
        let logits = tape.constant(array![[2.0, 0.0]]);
        let loss = cross_entropy(&mut tape, logits, &[0]).unwrap();
        assert!((tape.scalar(loss) - (1.0 + (-2f64).exp()).ln()).abs() < 1e-15);
    }

    #[test]
    fn classifier_gradients_match_finite_differences() {
        let mlp = Mlp::init(3, 5, 2, &mut crate::rng::stream(4, &[]));
        let x = array![[1.0, -2.0, 0.5], [0.7, 0.3, 0.1], [-1.0, 0.4, 2.0]];
        let theta: Vec<Array2<f64>> = mlp.arrays().into_iter().cloned().collect();
        let err = finite_diff_check(
            |t, v| {
                let xv = t.constant(x.clone());
                let logits = MlpVars::from_slice(v).forward(t, xv)?;
                cross_entropy(t, logits, &[0, 1, 1])
            },
            &theta,
            1e-6,
        )
        .unwrap();
        assert!(err <= 1e-4, "{err}");
    }

    #[test]
    fn argmax_ties_pick_first() {
        assert_eq!(argmax_rows(&array![[1.0, 1.0], [0.0, 2.0], [3.0, -1.0]]), vec![0, 1, 0]);
    }
}
