//! Graphs, datasets and graph diffusion.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected simple graph with a dense 0/1 adjacency and node features.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Array2<f64>,
    features: Array2<f64>,
    pub label: Option<usize>,
}

impl Graph {
    /// Validates symmetry, zero diagonal, binary entries and the feature row count.
    pub fn new(adjacency: Array2<f64>, features: Array2<f64>, label: Option<usize>) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 || adjacency.ncols() != n {
            return Err(Error::contract(
                "Graph::new",
                format!("adjacency must be square and non-empty, got {:?}", adjacency.dim()),
            ));
        }
        if features.nrows() != n {
            return Err(Error::contract(
                "Graph::new",
                format!("features have {} rows for {} nodes", features.nrows(), n),
            ));
        }
        for u in 0..n {
            if adjacency[[u, u]] != 0.0 {
                return Err(Error::contract("Graph::new", format!("self-loop at node {u}")));
            }
            for v in 0..n {
                let a = adjacency[[u, v]];
                if a != 0.0 && a != 1.0 {
                    return Err(Error::contract(
                        "Graph::new",
                        format!("adjacency entry ({u},{v}) = {a} is not binary"),
                    ));
                }
                if a != adjacency[[v, u]] {
                    return Err(Error::contract(
                        "Graph::new",
                        format!("adjacency is not symmetric at ({u},{v})"),
                    ));
                }
            }
        }
        Ok(Self {
            adjacency,
            features,
            label,
        })
    }

    /// Builds a graph from 0-based undirected edges; duplicates and self-loops are dropped.
    /// Nodes get degree features.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], label: Option<usize>) -> Result<Self> {
        let adjacency = adjacency_from_edges(n, edges)?;
        let features = degrees_of(&adjacency);
        Graph::new(adjacency, features, label)
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::from_edges(n, &edges, None).expect("complete graph is valid")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Graph::from_edges(n, &edges, None).expect("path graph is valid")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Graph::from_edges(n, &edges, None).expect("cycle graph is valid")
    }

    pub fn star(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (0, v)).collect();
        Graph::from_edges(n, &edges, None).expect("star graph is valid")
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    /// Replaces node features. Row count must match the node count.
    pub fn with_features(self, features: Array2<f64>) -> Result<Self> {
        Graph::new(self.adjacency, features, self.label)
    }

    /// Same structure and features with a new adjacency (features kept verbatim).
    pub fn with_adjacency(&self, adjacency: Array2<f64>) -> Result<Self> {
        Graph::new(adjacency, self.features.clone(), self.label)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Edges `(u, v)` with `u < v`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if self.adjacency[[u, v]] != 0.0 {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Relabels nodes: node `i` of the result is node `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        assert_eq!(perm.len(), n, "permutation length must equal node count");
        let adjacency = Array2::from_shape_fn((n, n), |(i, j)| self.adjacency[[perm[i], perm[j]]]);
        let features = self.features.select(Axis(0), perm);
        Self {
            adjacency,
            features,
            label: self.label,
        }
    }
}

pub(crate) fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Array2<f64>> {
    let mut adjacency = Array2::zeros((n, n));
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::contract(
                "adjacency_from_edges",
                format!("edge ({u},{v}) outside node range 0..{n}"),
            ));
        }
        if u != v {
            adjacency[[u, v]] = 1.0;
            adjacency[[v, u]] = 1.0;
        }
    }
    Ok(adjacency)
}

fn degrees_of(adjacency: &Array2<f64>) -> Array2<f64> {
    adjacency.sum_axis(Axis(1)).insert_axis(Axis(1))
}

/// Node degrees as an `n x 1` feature matrix (raw counts, unnormalized).
pub fn degree_features(g: &Graph) -> Array2<f64> {
    degrees_of(g.adjacency())
}

/// Symmetric normalized transition matrix `D^{-1/2} A D^{-1/2}`.
///
/// Isolated nodes get a zero `D^{-1/2}` entry, so their rows and columns vanish.
pub fn transition_matrix(g: &Graph) -> Array2<f64> {
    let a = g.adjacency();
    let inv_sqrt: Vec<f64> = a
        .sum_axis(Axis(1))
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    Array2::from_shape_fn(a.dim(), |(u, v)| a[[u, v]] * inv_sqrt[u] * inv_sqrt[v])
}

/// Truncated personalized-PageRank diffusion: `beta_j = alpha (1 - alpha)^j`, `j = 0..=depth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffusionConfig {
    pub alpha: f64,
    pub depth: usize,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.15,
            depth: 3,
        }
    }
}

impl DiffusionConfig {
    pub fn new(alpha: f64, depth: usize) -> Result<Self> {
        let cfg = Self { alpha, depth };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "teleport probability must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// `beta_0 ..= beta_depth`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.depth + 1);
        let mut beta = self.alpha;
        for _ in 0..=self.depth {
            out.push(beta);
            beta *= 1.0 - self.alpha;
        }
        out
    }
}

/// `B = sum_{j=0}^{depth} beta_j T^j`, with powers of `T` materialized one by one.
pub fn diffuse(g: &Graph, cfg: &DiffusionConfig) -> Array2<f64> {
    let t = transition_matrix(g);
    let n = g.n();
    let mut power = Array2::<f64>::eye(n);
    let mut out = Array2::<f64>::zeros((n, n));
    for (j, beta) in cfg.coefficients().into_iter().enumerate() {
        if j > 0 {
            power = power.dot(&t);
        }
        out.scaled_add(beta, &power);
    }
    // Products of symmetric matrices drift by an ulp; keep B exactly symmetric.
    symmetrize(&mut out);
    out
}

pub(crate) fn symmetrize(m: &mut Array2<f64>) {
    let n = m.nrows();
    for u in 0..n {
        for v in u + 1..n {
            let avg = 0.5 * (m[[u, v]] + m[[v, u]]);
            m[[u, v]] = avg;
            m[[v, u]] = avg;
        }
    }
}

/// A labeled collection of graphs with a shared feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Original label value for each class index.
    pub class_values: Vec<i64>,
    /// Original node-label value for each one-hot column, when node labels were one-hot encoded.
    pub node_label_values: Option<Vec<i64>>,
    /// Number of trailing feature columns that came from a node-attribute file.
    pub attribute_dim: usize,
}

impl Dataset {
    /// Wraps already-labeled graphs; labels must be `0..num_classes`.
    pub fn from_graphs(name: impl Into<String>, graphs: Vec<Graph>) -> Result<Self> {
        let feature_dim = graphs
            .first()
            .map(|g| g.feature_dim())
            .ok_or_else(|| Error::Config("dataset has no graphs".into()))?;
        let mut num_classes = 0;
        for (i, g) in graphs.iter().enumerate() {
            if g.feature_dim() != feature_dim {
                return Err(Error::Config(format!(
                    "graph {i} has feature dimension {} instead of {feature_dim}",
                    g.feature_dim()
                )));
            }
            let label = g
                .label
                .ok_or_else(|| Error::Config(format!("graph {i} has no label")))?;
            num_classes = num_classes.max(label + 1);
        }
        Ok(Self {
            name: name.into(),
            graphs,
            num_classes,
            feature_dim,
            class_values: (0..num_classes as i64).collect(),
            node_label_values: None,
            attribute_dim: feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.label.unwrap_or(0)).collect()
    }

    /// Four triangles (class 0) and four 3-node paths (class 1), degree features.
    pub fn toy() -> Self {
        let mut graphs = Vec::new();
        for _ in 0..4 {
            graphs.push(Graph::complete(3).with_label(0));
        }
        for _ in 0..4 {
            graphs.push(Graph::path(3).with_label(1));
        }
        Dataset::from_graphs("toy", graphs).expect("toy dataset is valid")
    }
}
