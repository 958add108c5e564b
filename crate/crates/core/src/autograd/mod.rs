//! Tape-based reverse-mode differentiation over dense `f64` matrices.
//!
//! Every value is a row-major 2-D array; scalars are `1 x 1` and vectors are
//! single rows. A [`Tape`] records each primitive in execution order and
//! [`Tape::backward`] walks that record once in reverse, accumulating
//! vector-Jacobian products into the leaves created with [`Tape::param`].
//!
//! ```
//! use kgnn::autograd::Tape;
//! use ndarray::array;
//!
//! let mut tape = Tape::new();
//! let x = tape.param(array![[1.0, 2.0, 3.0]]);
//! let y = tape.sum(x);
//! let grads = tape.backward(y).unwrap();
//! assert_eq!(grads.wrt(x), array![[1.0, 1.0, 1.0]]);
//! ```

mod adam;
mod check;

use std::sync::Arc;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

pub use adam::Adam;
pub use check::{finite_diff_check, relative_error};

use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConcatAxis {
    Rows,
    Cols,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    /// `a` is `r x c`, `b` is `1 x c`, added to every row.
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Relu(Var),
    Transpose(Var),
    Concat(Vec<Var>, ConcatAxis),
    TraceProduct(Var, Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    Log(Var),
    Sum(Var),
    Mean(Var),
    RowSums(Var),
    L2NormalizeRows(Var),
    StopGradient,
    /// Row block `i` of the input is left-multiplied by constant `blocks[i]`.
    BlockDiagMatMul(Arc<[Arc<Array2<f64>>]>, Var),
    /// Output row `i` sums the input rows of segment `i`.
    SegmentSumRows(Arc<[usize]>, Var),
}

#[derive(Debug)]
struct Node {
    value: Array2<f64>,
    op: Op,
    requires_grad: bool,
}

/// Gradients produced by one [`Tape::backward`] call, indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of `v`, or zeros of its shape if nothing flowed into it.
    pub fn wrt(&self, v: Var) -> Array2<f64> {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Array2::zeros(self.shapes[v.0]))
    }
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

fn shape_error(op: &'static str, detail: String) -> Error {
    Error::contract(op, detail)
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Clears the record so the tape can be reused for a fresh computation.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.consumed = false;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// Value of a `1 x 1` var.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Array2<f64>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// A trainable leaf.
    pub fn param(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.0 {
            return Err(shape_error("matmul", format!("{sa:?} x {sb:?}")));
        }
        let value = self.value(a).dot(self.value(b));
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// Elementwise sum of equal shapes, or a `1 x c` row broadcast over an `r x c` matrix.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let rg = self.rg(&[a, b]);
        if sa == sb {
            let value = self.value(a) + self.value(b);
            Ok(self.push(value, Op::Add(a, b), rg))
        } else if sb.0 == 1 && sb.1 == sa.1 {
            let value = self.value(a) + self.value(b);
            Ok(self.push(value, Op::AddRow(a, b), rg))
        } else {
            Err(shape_error("add", format!("{sa:?} + {sb:?}")))
        }
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_error("sub", format!("{sa:?} - {sb:?}")));
        }
        let value = self.value(a) - self.value(b);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_error("mul", format!("{sa:?} * {sb:?}")));
        }
        let value = self.value(a) * self.value(b);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a) * c;
        let rg = self.rg(&[a]);
        self.push(value, Op::Scale(a, c), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(sigmoid);
        let rg = self.rg(&[a]);
        self.push(value, Op::Sigmoid(a), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x.max(0.0));
        let rg = self.rg(&[a]);
        self.push(value, Op::Relu(a), rg)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).t().to_owned();
        let rg = self.rg(&[a]);
        self.push(value, Op::Transpose(a), rg)
    }

    pub fn concat(&mut self, parts: &[Var], axis: ConcatAxis) -> Result<Var> {
        if parts.is_empty() {
            return Err(shape_error("concat", "no inputs".into()));
        }
        let views: Vec<ArrayView2<f64>> = parts.iter().map(|&v| self.value(v).view()).collect();
        let ax = match axis {
            ConcatAxis::Rows => Axis(0),
            ConcatAxis::Cols => Axis(1),
        };
        let value = concatenate(ax, &views).map_err(|e| shape_error("concat", e.to_string()))?;
        let rg = self.rg(parts);
        Ok(self.push(value, Op::Concat(parts.to_vec(), axis), rg))
    }

    /// `trace(a · b)` for `a: r x c`, `b: c x r`, as a `1 x 1` value.
    pub fn trace_of_product(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.0 != sb.1 || sa.1 != sb.0 {
            return Err(shape_error("trace_of_product", format!("{sa:?} . {sb:?}")));
        }
        let t: f64 = (self.value(a) * &self.value(b).t()).sum();
        let rg = self.rg(&[a, b]);
        Ok(self.push(Array2::from_elem((1, 1), t), Op::TraceProduct(a, b), rg))
    }

    /// Row-wise softmax, shifted by each row's max before exponentiation.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for mut row in value.rows_mut() {
            let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            row.mapv_inplace(|x| (x - max).exp());
            let z = row.sum();
            row.mapv_inplace(|x| x / z);
        }
        let rg = self.rg(&[a]);
        self.push(value, Op::SoftmaxRows(a), rg)
    }

    /// Row-wise log-softmax (max-shifted log-sum-exp).
    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for mut row in value.rows_mut() {
            let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
            row.mapv_inplace(|x| x - lse);
        }
        let rg = self.rg(&[a]);
        self.push(value, Op::LogSoftmaxRows(a), rg)
    }

    pub fn log(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(f64::ln);
        let rg = self.rg(&[a]);
        self.push(value, Op::Log(a), rg)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Array2::from_elem((1, 1), self.value(a).sum());
        let rg = self.rg(&[a]);
        self.push(value, Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let len = self.value(a).len();
        if len == 0 {
            return Err(shape_error("mean", "empty input".into()));
        }
        let value = Array2::from_elem((1, 1), self.value(a).sum() / len as f64);
        let rg = self.rg(&[a]);
        Ok(self.push(value, Op::Mean(a), rg))
    }

    /// `r x c -> r x 1`.
    pub fn row_sums(&mut self, a: Var) -> Var {
        let value = self.value(a).sum_axis(Axis(1)).insert_axis(Axis(1));
        let rg = self.rg(&[a]);
        self.push(value, Op::RowSums(a), rg)
    }

    /// Scales each row to unit Euclidean norm; an all-zero row stays zero.
    pub fn l2_normalize_rows(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for mut row in value.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|x| x / norm);
            }
        }
        let rg = self.rg(&[a]);
        self.push(value, Op::L2NormalizeRows(a), rg)
    }

    /// Forwards `a` unchanged; no gradient flows back through it.
    pub fn stop_gradient(&mut self, a: Var) -> Var {
        let value = self.value(a).clone();
        self.push(value, Op::StopGradient, false)
    }

    /// Multiplies consecutive row blocks of `x` by constant square blocks:
    /// rows `[o_i, o_i + n_i)` become `blocks[i] · x[o_i..o_i + n_i, :]`.
    pub fn block_diag_matmul(&mut self, blocks: Arc<[Arc<Array2<f64>>]>, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let total: usize = blocks.iter().map(|b| b.nrows()).sum();
        if total != xv.nrows() || blocks.iter().any(|b| b.nrows() != b.ncols()) {
            return Err(shape_error(
                "block_diag_matmul",
                format!("blocks cover {total} rows, input has {}", xv.nrows()),
            ));
        }
        let mut value = Array2::zeros(xv.dim());
        let mut offset = 0;
        for b in blocks.iter() {
            let n = b.nrows();
            let out = b.dot(&xv.slice(s![offset..offset + n, ..]));
            value.slice_mut(s![offset..offset + n, ..]).assign(&out);
            offset += n;
        }
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::BlockDiagMatMul(blocks, x), rg))
    }

    /// Sums consecutive row segments of lengths `segments` into one row each.
    pub fn segment_sum_rows(&mut self, segments: Arc<[usize]>, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let total: usize = segments.iter().sum();
        if total != xv.nrows() {
            return Err(shape_error(
                "segment_sum_rows",
                format!("segments cover {total} rows, input has {}", xv.nrows()),
            ));
        }
        let mut value = Array2::zeros((segments.len(), xv.ncols()));
        let mut offset = 0;
        for (i, &len) in segments.iter().enumerate() {
            let part = xv.slice(s![offset..offset + len, ..]).sum_axis(Axis(0));
            value.row_mut(i).assign(&part);
            offset += len;
        }
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::SegmentSumRows(segments, x), rg))
    }

    /// Accumulates d`loss`/d`v` for every recorded var. A tape can be
    /// differentiated once; call [`Tape::reset`] before reusing it.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::contract("backward", "tape already differentiated; reset it first"));
        }
        if loss.0 >= self.nodes.len() {
            return Err(Error::contract("backward", "loss is not recorded on this tape"));
        }
        if self.shape(loss) != (1, 1) {
            return Err(Error::contract(
                "backward",
                format!("loss must be scalar, got shape {:?}", self.shape(loss)),
            ));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::ones((1, 1)));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let val = |v: Var| &self.nodes[v.0].value;
            let mut acc = |v: Var, contrib: Array2<f64>| {
                if !self.nodes[v.0].requires_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(existing) => *existing += &contrib,
                    slot @ None => *slot = Some(contrib),
                }
            };
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    acc(*a, g.dot(&val(*b).t()));
                    acc(*b, val(*a).t().dot(&g));
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g);
                }
                Op::AddRow(a, b) => {
                    acc(*b, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(*a, g);
                }
                Op::Sub(a, b) => {
                    acc(*b, -&g);
                    acc(*a, g);
                }
                Op::Mul(a, b) => {
                    acc(*a, &g * val(*b));
                    acc(*b, &g * val(*a));
                }
                Op::Scale(a, c) => acc(*a, g * *c),
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    acc(*a, &g * &y.mapv(|s| s * (1.0 - s)));
                }
                Op::Relu(a) => {
                    let mask = val(*a).mapv(|x| if x > 0.0 { 1.0 } else { 0.0 });
                    acc(*a, g * mask);
                }
                Op::Transpose(a) => acc(*a, g.t().to_owned()),
                Op::Concat(parts, axis) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (r, c) = val(p).dim();
                        let piece = match axis {
                            ConcatAxis::Rows => {
                                offset += r;
                                g.slice(s![offset - r..offset, ..]).to_owned()
                            }
                            ConcatAxis::Cols => {
                                offset += c;
                                g.slice(s![.., offset - c..offset]).to_owned()
                            }
                        };
                        acc(p, piece);
                    }
                }
                Op::TraceProduct(a, b) => {
                    let gs = g[[0, 0]];
                    acc(*a, val(*b).t().to_owned() * gs);
                    acc(*b, val(*a).t().to_owned() * gs);
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let dot = (&g * y).sum_axis(Axis(1)).insert_axis(Axis(1));
                    acc(*a, y * &(&g - &dot));
                }
                Op::LogSoftmaxRows(a) => {
                    let soft = node.value.mapv(f64::exp);
                    let total = g.sum_axis(Axis(1)).insert_axis(Axis(1));
                    acc(*a, &g - &(soft * &total));
                }
                Op::Log(a) => acc(*a, &g / val(*a)),
                Op::Sum(a) => acc(*a, Array2::from_elem(val(*a).dim(), g[[0, 0]])),
                Op::Mean(a) => {
                    let x = val(*a);
                    acc(*a, Array2::from_elem(x.dim(), g[[0, 0]] / x.len() as f64));
                }
                Op::RowSums(a) => {
                    let (r, c) = val(*a).dim();
                    acc(*a, Array2::from_shape_fn((r, c), |(i, _)| g[[i, 0]]));
                }
                Op::L2NormalizeRows(a) => {
                    let x = val(*a);
                    let y = &node.value;
                    let mut dx = Array2::zeros(x.dim());
                    for i in 0..x.nrows() {
                        let norm = x.row(i).dot(&x.row(i)).sqrt();
                        if norm > 0.0 {
                            let yg = y.row(i).dot(&g.row(i));
                            let row = (&g.row(i) - &(&y.row(i) * yg)) / norm;
                            dx.row_mut(i).assign(&row);
                        }
                    }
                    acc(*a, dx);
                }
                Op::StopGradient => {}
                Op::BlockDiagMatMul(blocks, x) => {
                    let mut dx = Array2::zeros(g.dim());
                    let mut offset = 0;
                    for b in blocks.iter() {
                        let n = b.nrows();
                        let part = b.t().dot(&g.slice(s![offset..offset + n, ..]));
                        dx.slice_mut(s![offset..offset + n, ..]).assign(&part);
                        offset += n;
                    }
                    acc(*x, dx);
                }
                Op::SegmentSumRows(segments, x) => {
                    let mut dx = Array2::zeros(val(*x).dim());
                    let mut offset = 0;
                    for (i, &len) in segments.iter().enumerate() {
                        for r in offset..offset + len {
                            dx.row_mut(r).assign(&g.row(i));
                        }
                        offset += len;
                    }
                    acc(*x, dx);
                }
            }
        }

        let shapes = self.nodes.iter().map(|n| n.value.dim()).collect();
        Ok(Gradients { grads, shapes })
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
