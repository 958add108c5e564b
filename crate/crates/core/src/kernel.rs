//! Hidden graphs, random-walk kernels and the smoothed-walk encoder.
//!
//! An input graph is summarized by its diffusion matrix `B` and mapped node
//! features `Xm`. For every hidden graph `H` (soft adjacency `B'`, node
//! features `X'`) and walk length `p`, the encoder emits
//!
//! ```text
//! K_p(G, H) = sum_{i,j in G} sum_{k,l in H} <Xm_i, X'_k> (B^p)_ij (B'^p)_kl <Xm_j, X'_l>
//!           = trace(B^p S B'^p S^T),   S = Xm X'^T
//! ```
//!
//! and the encoding concatenates `K_p(G, H_m)` hidden-graph-major, walk-minor:
//! column `m * P + (p - 1)`.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::autograd::{ConcatAxis, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{diffuse, DiffusionConfig, Graph};

/// Encoder shape: `num_hidden` hidden graphs of `hidden_nodes` nodes with
/// `hidden_dim`-dimensional features, walks of length `1..=max_walk`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub num_hidden: usize,
    pub max_walk: usize,
    pub hidden_nodes: usize,
    pub hidden_dim: usize,
    pub diffusion: DiffusionConfig,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            num_hidden: 16,
            max_walk: 3,
            hidden_nodes: 10,
            hidden_dim: 32,
            diffusion: DiffusionConfig::default(),
        }
    }
}

impl KernelConfig {
    pub fn output_dim(&self) -> usize {
        self.num_hidden * self.max_walk
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_hidden < 1 {
            return Err(Error::Config("need at least one hidden graph".into()));
        }
        if self.max_walk < 1 {
            return Err(Error::Config("walk length must be at least 1".into()));
        }
        if self.hidden_nodes < 2 {
            return Err(Error::Config("hidden graphs need at least 2 nodes".into()));
        }
        if self.hidden_dim < 1 {
            return Err(Error::Config("hidden feature dimension must be positive".into()));
        }
        self.diffusion.validate()
    }
}

/// A trainable hidden graph. The effective adjacency is
/// [`hidden_adjacency`]; `raw_weights` itself is unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenGraph {
    pub raw_weights: Array2<f64>,
    pub hidden_features: Array2<f64>,
}

impl HiddenGraph {
    /// Hidden graph whose effective adjacency is exactly the given 0/1 matrix:
    /// raw weights of ±800 saturate the sigmoid to 0.0 and 1.0 in f64.
    pub fn saturated(adjacency: &Array2<f64>, hidden_features: Array2<f64>) -> Self {
        Self {
            raw_weights: adjacency.mapv(|a| if a > 0.0 { 800.0 } else { -800.0 }),
            hidden_features,
        }
    }

    pub fn nodes(&self) -> usize {
        self.raw_weights.nrows()
    }
}

/// Affine map from input features (`d`) to hidden feature space (`d_h`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    /// `d x d_h`.
    pub weight: Array2<f64>,
    /// `1 x d_h`.
    pub bias: Array2<f64>,
}

impl FeatureMap {
    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.weight.nrows() {
            return Err(Error::contract(
                "feature_map",
                format!("input has {} features, map expects {}", x.ncols(), self.weight.nrows()),
            ));
        }
        Ok(x.dot(&self.weight) + &self.bias)
    }

    /// Identity map on `d` features (used by kernel cross-checks).
    pub fn identity(d: usize) -> Self {
        Self {
            weight: Array2::eye(d),
            bias: Array2::zeros((1, d)),
        }
    }
}

/// All encoder parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwagParams {
    pub hidden_graphs: Vec<HiddenGraph>,
    pub feature_map: FeatureMap,
}

impl SwagParams {
    /// Feature map uniform in `±1/sqrt(d)`, raw hidden weights standard normal,
    /// hidden features normal with standard deviation `1/sqrt(d_h)`.
    pub fn init(cfg: &KernelConfig, input_dim: usize, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        if input_dim == 0 {
            return Err(Error::Config("input feature dimension must be positive".into()));
        }
        let bound = 1.0 / (input_dim as f64).sqrt();
        let uniform = Uniform::new_inclusive(-bound, bound).expect("finite bounds");
        let weight = Array2::from_shape_fn((input_dim, cfg.hidden_dim), |_| uniform.sample(rng));
        let bias = Array2::from_shape_fn((1, cfg.hidden_dim), |_| uniform.sample(rng));
        let raw = Normal::new(0.0, 1.0).expect("valid normal");
        let feat = Normal::new(0.0, 1.0 / (cfg.hidden_dim as f64).sqrt()).expect("valid normal");
        let hidden_graphs = (0..cfg.num_hidden)
            .map(|_| HiddenGraph {
                raw_weights: Array2::from_shape_fn((cfg.hidden_nodes, cfg.hidden_nodes), |_| {
                    raw.sample(rng)
                }),
                hidden_features: Array2::from_shape_fn((cfg.hidden_nodes, cfg.hidden_dim), |_| {
                    feat.sample(rng)
                }),
            })
            .collect();
        Ok(Self {
            hidden_graphs,
            feature_map: FeatureMap { weight, bias },
        })
    }

    /// Checks that the parameters fit `cfg` and `input_dim`.
    pub fn check(&self, cfg: &KernelConfig, input_dim: usize) -> Result<()> {
        let fm = &self.feature_map;
        if fm.weight.dim() != (input_dim, cfg.hidden_dim) || fm.bias.dim() != (1, cfg.hidden_dim) {
            return Err(Error::contract(
                "swag_encode",
                format!(
                    "feature map {:?} does not map {input_dim} -> {}",
                    fm.weight.dim(),
                    cfg.hidden_dim
                ),
            ));
        }
        if self.hidden_graphs.len() != cfg.num_hidden {
            return Err(Error::contract(
                "swag_encode",
                format!("{} hidden graphs, config says {}", self.hidden_graphs.len(), cfg.num_hidden),
            ));
        }
        for h in &self.hidden_graphs {
            if h.raw_weights.dim() != (cfg.hidden_nodes, cfg.hidden_nodes)
                || h.hidden_features.dim() != (cfg.hidden_nodes, cfg.hidden_dim)
            {
                return Err(Error::contract("swag_encode", "hidden graph shape does not match config"));
            }
        }
        Ok(())
    }

    /// Parameter arrays in binding order: feature weight, feature bias, then
    /// `(raw_weights, hidden_features)` per hidden graph.
    pub fn arrays(&self) -> Vec<&Array2<f64>> {
        let mut out = vec![&self.feature_map.weight, &self.feature_map.bias];
        for h in &self.hidden_graphs {
            out.push(&h.raw_weights);
            out.push(&h.hidden_features);
        }
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = vec![&mut self.feature_map.weight, &mut self.feature_map.bias];
        for h in &mut self.hidden_graphs {
            out.push(&mut h.raw_weights);
            out.push(&mut h.hidden_features);
        }
        out
    }

    /// Records the parameters on `tape`, as trainable leaves or as constants.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> SwagVars {
        let mut leaf = |a: &Array2<f64>| {
            if trainable {
                tape.param(a.clone())
            } else {
                tape.constant(a.clone())
            }
        };
        let weight = leaf(&self.feature_map.weight);
        let bias = leaf(&self.feature_map.bias);
        let hidden = self
            .hidden_graphs
            .iter()
            .map(|h| (leaf(&h.raw_weights), leaf(&h.hidden_features)))
            .collect();
        SwagVars {
            weight,
            bias,
            hidden,
        }
    }
}

/// [`SwagParams`] recorded on a tape.
#[derive(Debug, Clone)]
pub struct SwagVars {
    pub weight: Var,
    pub bias: Var,
    pub hidden: Vec<(Var, Var)>,
}

impl SwagVars {
    /// Same order as [`SwagParams::arrays`].
    pub fn vars(&self) -> Vec<Var> {
        let mut out = vec![self.weight, self.bias];
        for &(r, f) in &self.hidden {
            out.push(r);
            out.push(f);
        }
        out
    }
}

/// `sigmoid((raw + raw^T) / 2)` with a zero diagonal: symmetric, entries in (0, 1).
pub fn hidden_adjacency(h: &HiddenGraph) -> Array2<f64> {
    let raw = &h.raw_weights;
    let m = raw.nrows();
    Array2::from_shape_fn((m, m), |(i, j)| {
        if i == j {
            0.0
        } else {
            crate::autograd::sigmoid(0.5 * (raw[[i, j]] + raw[[j, i]]))
        }
    })
}

/// Tape version of [`hidden_adjacency`].
pub fn hidden_adjacency_var(tape: &mut Tape, raw: Var) -> Result<Var> {
    let m = tape.shape(raw).0;
    let rt = tape.transpose(raw);
    let sum = tape.add(raw, rt)?;
    let avg = tape.scale(sum, 0.5);
    let sig = tape.sigmoid(avg);
    let mask = tape.constant(Array2::from_shape_fn((m, m), |(i, j)| if i == j { 0.0 } else { 1.0 }));
    tape.mul(sig, mask)
}

fn matrix_power(a: &Array2<f64>, p: usize) -> Array2<f64> {
    let mut out = Array2::eye(a.nrows());
    for _ in 0..p {
        out = out.dot(a);
    }
    out
}

/// Length-`p` random-walk kernel with feature weighting, evaluated literally
/// as the quadruple sum over node pairs of both graphs.
pub fn exact_rw_kernel(g: &Graph, g2: &Graph, p: usize) -> Result<f64> {
    if g.feature_dim() != g2.feature_dim() {
        return Err(Error::contract(
            "exact_rw_kernel",
            format!("feature dimensions {} and {} differ", g.feature_dim(), g2.feature_dim()),
        ));
    }
    if p < 1 {
        return Err(Error::contract("exact_rw_kernel", "walk length must be >= 1"));
    }
    let ap = matrix_power(g.adjacency(), p);
    let ap2 = matrix_power(g2.adjacency(), p);
    let (x, x2) = (g.features(), g2.features());
    let mut total = 0.0;
    for k in 0..g2.n() {
        for l in 0..g2.n() {
            if ap2[[k, l]] == 0.0 {
                continue;
            }
            for i in 0..g.n() {
                let sik = x.row(i).dot(&x2.row(k));
                for j in 0..g.n() {
                    total += sik * ap[[i, j]] * ap2[[k, l]] * x.row(j).dot(&x2.row(l));
                }
            }
        }
    }
    Ok(total)
}

fn check_kernel_inputs(b: &Array2<f64>, xm: &Array2<f64>, h: &HiddenGraph) -> Result<()> {
    if b.nrows() != b.ncols() || b.nrows() != xm.nrows() {
        return Err(Error::contract(
            "smoothed_kernel",
            format!("B is {:?} but features have {} rows", b.dim(), xm.nrows()),
        ));
    }
    if xm.ncols() != h.hidden_features.ncols() {
        return Err(Error::contract(
            "smoothed_kernel",
            format!(
                "mapped features have dimension {}, hidden features {}",
                xm.ncols(),
                h.hidden_features.ncols()
            ),
        ));
    }
    if h.raw_weights.nrows() != h.raw_weights.ncols() || h.raw_weights.nrows() != h.hidden_features.nrows() {
        return Err(Error::contract("smoothed_kernel", "malformed hidden graph"));
    }
    Ok(())
}

/// `[K_1, ..., K_max_walk]` between characteristic `b` with mapped features `xm`
/// and hidden graph `h`. Powers are carried forward: `U_p = B U_{p-1}`,
/// `V_p = V_{p-1} B'`, `K_p = sum(U_p ∘ V_p)` with `U_0 = V_0 = S`.
pub fn smoothed_kernel_walks(
    b: &Array2<f64>,
    xm: &Array2<f64>,
    h: &HiddenGraph,
    max_walk: usize,
) -> Result<Vec<f64>> {
    check_kernel_inputs(b, xm, h)?;
    let bh = hidden_adjacency(h);
    let s = xm.dot(&h.hidden_features.t());
    let mut u = s.clone();
    let mut v = s;
    let mut out = Vec::with_capacity(max_walk);
    for _ in 0..max_walk {
        u = b.dot(&u);
        v = v.dot(&bh);
        out.push((&u * &v).sum());
    }
    Ok(out)
}

/// `trace(B^p S B'^p S^T)` with `S = xm · hidden_features^T` and `B' = hidden_adjacency(h)`.
pub fn smoothed_kernel(b: &Array2<f64>, xm: &Array2<f64>, h: &HiddenGraph, p: usize) -> Result<f64> {
    if p < 1 {
        return Err(Error::contract("smoothed_kernel", "walk length must be >= 1"));
    }
    Ok(smoothed_kernel_walks(b, xm, h, p)?[p - 1])
}

/// A graph with its diffusion powers `B^1 ..= B^P` precomputed.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub features: Array2<f64>,
    pub powers: Vec<Arc<Array2<f64>>>,
}

impl PreparedGraph {
    pub fn new(g: &Graph, diffusion: &DiffusionConfig, max_walk: usize) -> Self {
        let b = diffuse(g, diffusion);
        let mut powers = Vec::with_capacity(max_walk);
        let mut cur = b.clone();
        for p in 0..max_walk {
            if p > 0 {
                cur = cur.dot(&b);
            }
            powers.push(Arc::new(cur.clone()));
        }
        Self {
            features: g.features().clone(),
            powers,
        }
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }
}

pub fn prepare_all(graphs: &[Graph], cfg: &KernelConfig) -> Vec<PreparedGraph> {
    graphs
        .iter()
        .map(|g| PreparedGraph::new(g, &cfg.diffusion, cfg.max_walk))
        .collect()
}

/// Encodes a batch on the tape; returns a `batch x (M·P)` var.
///
/// Node rows of all graphs are stacked, so the feature map and the hidden
/// feature products run once per batch. Diffusion powers act per graph
/// through a block-diagonal product, and per-graph kernel sums are segment
/// sums over the stacked rows.
pub fn encode_batch(
    tape: &mut Tape,
    vars: &SwagVars,
    graphs: &[&PreparedGraph],
    cfg: &KernelConfig,
) -> Result<Var> {
    if graphs.is_empty() {
        return Err(Error::contract("swag_encode", "empty batch"));
    }
    if vars.hidden.len() != cfg.num_hidden {
        return Err(Error::contract("swag_encode", "hidden graph count differs from config"));
    }
    let d = tape.shape(vars.weight).0;
    for g in graphs {
        if g.features.ncols() != d {
            return Err(Error::contract(
                "swag_encode",
                format!("graph has {} features, encoder expects {d}", g.features.ncols()),
            ));
        }
        if g.powers.len() < cfg.max_walk {
            return Err(Error::contract("swag_encode", "graph prepared with too few walk powers"));
        }
    }
    let views: Vec<_> = graphs.iter().map(|g| g.features.view()).collect();
    let stacked = ndarray::concatenate(ndarray::Axis(0), &views)
        .map_err(|e| Error::contract("swag_encode", e.to_string()))?;
    let segments: Arc<[usize]> = graphs.iter().map(|g| g.n()).collect();
    let blocks: Vec<Arc<[Arc<Array2<f64>>]>> = (0..cfg.max_walk)
        .map(|p| graphs.iter().map(|g| Arc::clone(&g.powers[p])).collect())
        .collect();

    let x = tape.constant(stacked);
    let xw = tape.matmul(x, vars.weight)?;
    let xm = tape.add(xw, vars.bias)?;

    let mut columns = Vec::with_capacity(cfg.output_dim());
    for &(raw, feats) in &vars.hidden {
        let adj = hidden_adjacency_var(tape, raw)?;
        let ft = tape.transpose(feats);
        let s = tape.matmul(xm, ft)?;
        let mut v = s;
        for block in &blocks {
            let u = tape.block_diag_matmul(Arc::clone(block), s)?;
            v = tape.matmul(v, adj)?;
            let uv = tape.mul(u, v)?;
            let per_graph = tape.segment_sum_rows(Arc::clone(&segments), uv)?;
            columns.push(tape.row_sums(per_graph));
        }
    }
    tape.concat(&columns, ConcatAxis::Cols)
}

/// Encodes one graph; entry `m * P + (p - 1)` is `K_p(g, H_m)`.
pub fn swag_encode(g: &Graph, params: &SwagParams, cfg: &KernelConfig) -> Result<Array1<f64>> {
    params.check(cfg, g.feature_dim())?;
    let prepared = PreparedGraph::new(g, &cfg.diffusion, cfg.max_walk);
    let mut tape = Tape::new();
    let vars = params.bind(&mut tape, false);
    let out = encode_batch(&mut tape, &vars, &[&prepared], cfg)?;
    Ok(tape.value(out).row(0).to_owned())
}

/// Encodes many prepared graphs without tracking gradients; one row per graph.
pub fn encode_all(params: &SwagParams, graphs: &[&PreparedGraph], cfg: &KernelConfig) -> Result<Array2<f64>> {
    const CHUNK: usize = 256;
    let mut rows = Vec::with_capacity(graphs.len());
    for chunk in graphs.chunks(CHUNK) {
        let mut tape = Tape::new();
        let vars = params.bind(&mut tape, false);
        let out = encode_batch(&mut tape, &vars, chunk, cfg)?;
        rows.push(tape.value(out).clone());
    }
    let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
    ndarray::concatenate(ndarray::Axis(0), &views).map_err(|e| Error::contract("encode_all", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::transition_matrix;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Direct four-index sum of the smoothed kernel; independent of the trace route.
    fn brute_force_smoothed(b: &Array2<f64>, xm: &Array2<f64>, h: &HiddenGraph, p: usize) -> f64 {
        let bp = matrix_power(b, p);
        let bh = matrix_power(&hidden_adjacency(h), p);
        let xh = &h.hidden_features;
        let mut total = 0.0;
        for k in 0..xh.nrows() {
            for l in 0..xh.nrows() {
                for i in 0..xm.nrows() {
                    for j in 0..xm.nrows() {
                        total += xm.row(i).dot(&xh.row(k)) * bp[[i, j]] * bh[[k, l]] * xm.row(j).dot(&xh.row(l));
                    }
                }
            }
        }
        total
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    fn saturated(adjacency: &Array2<f64>, features: Array2<f64>) -> HiddenGraph {
        HiddenGraph::saturated(adjacency, features)
    }

    #[test]
    fn hidden_adjacency_examples() {
        let zeros = HiddenGraph {
            raw_weights: Array2::zeros((3, 3)),
            hidden_features: Array2::zeros((3, 1)),
        };
        let a = hidden_adjacency(&zeros);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[[i, j]], if i == j { 0.0 } else { 0.5 });
            }
        }
        let mut raw = Array2::zeros((3, 3));
        raw[[1, 2]] = 20.0;
        raw[[2, 1]] = -20.0;
        let a = hidden_adjacency(&HiddenGraph {
            raw_weights: raw,
            hidden_features: Array2::zeros((3, 1)),
        });
        assert!((a[[1, 2]] - 0.5).abs() < 1e-12);
        let a = hidden_adjacency(&HiddenGraph {
            raw_weights: Array2::from_elem((3, 3), 20.0),
            hidden_features: Array2::zeros((3, 1)),
        });
        assert!((a[[0, 1]] - 1.0).abs() < 1e-8);
        assert_eq!(a[[1, 1]], 0.0);
    }

    #[test]
    fn hidden_adjacency_tape_matches_plain() {
        let mut rng = crate::rng::stream(5, &[]);
        let raw = Array2::from_shape_fn((4, 4), |_| StandardNormal.sample(&mut rng));
        let h = HiddenGraph {
            raw_weights: raw.clone(),
            hidden_features: Array2::zeros((4, 1)),
        };
        let mut tape = Tape::new();
        let r = tape.param(raw);
        let a = hidden_adjacency_var(&mut tape, r).unwrap();
        let plain = hidden_adjacency(&h);
        for (x, y) in tape.value(a).iter().zip(plain.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_kernel_on_k2() {
        let k2 = Graph::complete(2).with_features(Array2::ones((2, 1))).unwrap();
        assert_eq!(exact_rw_kernel(&k2, &k2, 1).unwrap(), 4.0);
        assert_eq!(exact_rw_kernel(&k2, &k2, 2).unwrap(), 4.0);
        let zero = Graph::complete(3).with_features(Array2::zeros((3, 1))).unwrap();
        assert_eq!(exact_rw_kernel(&zero, &k2, 2).unwrap(), 0.0);
        let wide = Graph::complete(2).with_features(Array2::ones((2, 2))).unwrap();
        assert!(exact_rw_kernel(&wide, &k2, 1).is_err());
    }

    #[test]
    fn smoothed_kernel_on_k2_matches_exact() {
        let k2 = Graph::complete(2).with_features(Array2::ones((2, 1))).unwrap();
        let h = saturated(k2.adjacency(), Array2::ones((2, 1)));
        let k = smoothed_kernel(k2.adjacency(), k2.features(), &h, 1).unwrap();
        assert_eq!(k, 4.0);
        assert_eq!(hidden_adjacency(&h), *k2.adjacency());
    }

    #[test]
    fn smoothed_kernel_of_zero_features_is_zero() {
        let b = array![[0.2, 0.1], [0.1, 0.2]];
        let h = saturated(&array![[0.0, 1.0], [1.0, 0.0]], array![[1.0, 2.0], [3.0, 4.0]]);
        for p in 1..=3 {
            assert_eq!(smoothed_kernel(&b, &Array2::zeros((2, 2)), &h, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn smoothed_kernel_dimension_mismatch() {
        let h = saturated(&array![[0.0, 1.0], [1.0, 0.0]], Array2::zeros((2, 3)));
        assert!(smoothed_kernel(&Array2::eye(2), &Array2::zeros((2, 2)), &h, 1).is_err());
        assert!(smoothed_kernel(&Array2::eye(3), &Array2::zeros((2, 3)), &h, 1).is_err());
    }

    #[test]
    fn random_four_node_inputs_match_brute_force() {
        let mut rng = crate::rng::stream(77, &[]);
        for _ in 0..20 {
            let b = {
                let m: Array2<f64> = Array2::from_shape_fn((4, 4), |_| rng.random_range(0.0..1.0));
                (&m + &m.t()) / 2.0
            };
            let xm = Array2::from_shape_fn((4, 3), |_| StandardNormal.sample(&mut rng));
            let h = HiddenGraph {
                raw_weights: Array2::from_shape_fn((3, 3), |_| StandardNormal.sample(&mut rng)),
                hidden_features: Array2::from_shape_fn((3, 3), |_| StandardNormal.sample(&mut rng)),
            };
            for p in 1..=3 {
                let fast = smoothed_kernel(&b, &xm, &h, p).unwrap();
                let slow = brute_force_smoothed(&b, &xm, &h, p);
                assert!(rel(fast, slow) <= 1e-10, "p={p}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn kernel_is_symmetric_in_its_arguments() {
        // Swapping (B, Xm) with (B', X') leaves the value unchanged when both
        // characteristics are expressed as hidden graphs with binary adjacency.
        let g1 = Graph::cycle(4).with_features(array![[1.0, 0.0], [0.5, 1.0], [0.0, 2.0], [1.0, 1.0]]).unwrap();
        let g2 = Graph::path(3).with_features(array![[0.3, 0.7], [1.0, -1.0], [2.0, 0.0]]).unwrap();
        let h1 = saturated(g1.adjacency(), g1.features().clone());
        let h2 = saturated(g2.adjacency(), g2.features().clone());
        for p in 1..=3 {
            let ab = smoothed_kernel(g1.adjacency(), g1.features(), &h2, p).unwrap();
            let ba = smoothed_kernel(g2.adjacency(), g2.features(), &h1, p).unwrap();
            assert!(rel(ab, ba) <= 1e-10, "{ab} vs {ba}");
        }
    }

    fn small_cfg() -> KernelConfig {
        KernelConfig {
            num_hidden: 3,
            max_walk: 3,
            hidden_nodes: 4,
            hidden_dim: 5,
            diffusion: DiffusionConfig::new(0.15, 3).unwrap(),
        }
    }

    #[test]
    fn encoding_cost_is_at_most_quadratic_on_paths() {
        let cfg = KernelConfig::default();
        let params = SwagParams::init(&cfg, 1, &mut crate::rng::stream(5, &[])).unwrap();
        // Minimum over repeats, so a busy machine only inflates the estimate.
        let time = |n: usize| {
            let g = Graph::path(n);
            (0..7)
                .map(|_| {
                    let start = std::time::Instant::now();
                    swag_encode(&g, &params, &cfg).unwrap();
                    start.elapsed().as_secs_f64()
                })
                .fold(f64::INFINITY, f64::min)
        };
        let (small, large) = (time(64), time(128));
        assert!(large <= 4.0 * 4.0 * small, "n=64 {small:.2e}s, n=128 {large:.2e}s");
    }

    #[test]
    fn encode_layout_matches_per_kernel_evaluation() {
        let cfg = small_cfg();
        let g = Graph::cycle(5);
        let params = SwagParams::init(&cfg, 1, &mut crate::rng::stream(1, &[])).unwrap();
        let enc = swag_encode(&g, &params, &cfg).unwrap();
        assert_eq!(enc.len(), cfg.output_dim());
        let b = diffuse(&g, &cfg.diffusion);
        let xm = params.feature_map.apply(g.features()).unwrap();
        for (m, h) in params.hidden_graphs.iter().enumerate() {
            for p in 1..=cfg.max_walk {
                let k = smoothed_kernel(&b, &xm, h, p).unwrap();
                let got = enc[m * cfg.max_walk + p - 1];
                assert!(rel(got, k) <= 1e-12, "m={m} p={p}: {got} vs {k}");
            }
        }
    }

    #[test]
    fn batch_encoding_equals_single_encoding() {
        let cfg = small_cfg();
        let params = SwagParams::init(&cfg, 1, &mut crate::rng::stream(2, &[])).unwrap();
        let graphs = [Graph::cycle(5), Graph::star(4), Graph::complete(3), Graph::path(6)];
        let prepared = prepare_all(&graphs, &cfg);
        let refs: Vec<_> = prepared.iter().collect();
        let all = encode_all(&params, &refs, &cfg).unwrap();
        for (i, g) in graphs.iter().enumerate() {
            let single = swag_encode(g, &params, &cfg).unwrap();
            for (a, b) in all.row(i).iter().zip(single.iter()) {
                assert!(rel(*a, *b) <= 1e-12);
            }
        }
    }

    #[test]
    fn output_length_is_m_times_p() {
        let cfg = KernelConfig {
            num_hidden: 8,
            max_walk: 3,
            ..small_cfg()
        };
        let params = SwagParams::init(&cfg, 1, &mut crate::rng::stream(3, &[])).unwrap();
        assert_eq!(swag_encode(&Graph::path(4), &params, &cfg).unwrap().len(), 24);
    }

    #[test]
    fn single_node_with_zero_features_and_zero_map_encodes_to_zero() {
        let cfg = small_cfg();
        let mut params = SwagParams::init(&cfg, 1, &mut crate::rng::stream(4, &[])).unwrap();
        params.feature_map.bias.fill(0.0);
        let g = Graph::from_edges(1, &[], None).unwrap().with_features(array![[0.0]]).unwrap();
        let enc = swag_encode(&g, &params, &cfg).unwrap();
        assert!(enc.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mismatched_params_are_rejected() {
        let cfg = small_cfg();
        let params = SwagParams::init(&cfg, 2, &mut crate::rng::stream(4, &[])).unwrap();
        assert!(swag_encode(&Graph::path(3), &params, &cfg).is_err());
    }

    #[test]
    fn encoder_gradients_match_finite_differences() {
        let cfg = KernelConfig {
            num_hidden: 2,
            max_walk: 3,
            hidden_nodes: 3,
            hidden_dim: 2,
            diffusion: DiffusionConfig::new(0.15, 2).unwrap(),
        };
        let params = SwagParams::init(&cfg, 1, &mut crate::rng::stream(8, &[])).unwrap();
        let graphs = [Graph::cycle(4), Graph::star(5)];
        let prepared = prepare_all(&graphs, &cfg);
        let theta: Vec<Array2<f64>> = params.arrays().into_iter().cloned().collect();
        let err = crate::autograd::finite_diff_check(
            |t, v| {
                let vars = SwagVars {
                    weight: v[0],
                    bias: v[1],
                    hidden: v[2..].chunks(2).map(|c| (c[0], c[1])).collect(),
                };
                let refs: Vec<_> = prepared.iter().collect();
                let enc = encode_batch(t, &vars, &refs, &cfg)?;
                let sq = t.mul(enc, enc)?;
                t.mean(sq)
            },
            &theta,
            1e-5,
        )
        .unwrap();
        assert!(err <= 1e-4, "{err}");
    }

    #[test]
    fn transition_used_by_diffusion_is_normalized() {
        // Sanity link between graph-core and the encoder input.
        let g = Graph::star(4);
        let t = transition_matrix(&g);
        assert!((t[[0, 1]] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn encoding_is_permutation_invariant(n in 1usize..8, edge_seed in any::<u64>(), perm_seed in any::<u64>()) {
            let mut rng = crate::rng::stream(edge_seed, &[]);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(0.4) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::from_edges(n, &edges, None).unwrap();
            let cfg = small_cfg();
            let params = SwagParams::init(&cfg, 1, &mut crate::rng::stream(0, &[])).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut crate::rng::stream(perm_seed, &[]));
            let a = swag_encode(&g, &params, &cfg).unwrap();
            let b = swag_encode(&g.permuted(&perm), &params, &cfg).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() <= 1e-8 * (1.0 + x.abs()));
            }
        }
    }
}
