//! Latent graph augmentation.
//!
//! A graph's edge-probability matrix is estimated by universal singular value
//! thresholding (USVT) and a positive view is resampled from it, keeping the
//! node features. Also holds the stochastic block model generator used to
//! test recovery and an edge-drop perturbation for comparison.

mod eig;

pub use eig::{symmetric_eig, SpectralDecomposition};

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{degree_features, symmetrize, Graph};
use crate::rng;

/// Seeded USVT resampling settings. Node features are always kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmenterConfig {
    pub tau: f64,
    pub seed: u64,
}

impl AugmenterConfig {
    pub fn new(tau: f64, seed: u64) -> Result<Self> {
        let cfg = Self { tau, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("USVT threshold must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Estimated probability matrix and the number of spectral components kept.
#[derive(Debug, Clone, PartialEq)]
pub struct UsvtEstimate {
    pub theta: Array2<f64>,
    pub kept: usize,
}

/// Keeps eigenpairs with `|λ| ≥ tau·sqrt(m)`, reconstructs `Σ λ u uᵀ`,
/// clips entrywise to `[0, 1]` and symmetrizes.
pub fn usvt_estimate(a: &Array2<f64>, tau: f64) -> Result<UsvtEstimate> {
    let m = a.nrows();
    let spectrum = symmetric_eig(a)?;
    // A few ulps of slack so eigenvalues that equal the threshold in exact
    // arithmetic are kept despite rounding in the eigensolver.
    let threshold = tau * (m as f64).sqrt() * (1.0 - 1e-12);
    let kept = spectrum
        .eigenvalues
        .iter()
        .take_while(|l| l.abs() >= threshold)
        .count();
    let mut theta = Array2::<f64>::zeros((m, m));
    for k in 0..kept {
        let u = spectrum.eigenvectors.column(k);
        let lambda = spectrum.eigenvalues[k];
        for i in 0..m {
            let li = lambda * u[i];
            for j in 0..m {
                theta[[i, j]] += li * u[j];
            }
        }
    }
    theta.mapv_inplace(|x| x.clamp(0.0, 1.0));
    symmetrize(&mut theta);
    Ok(UsvtEstimate { theta, kept })
}

/// Samples each pair `u < v` from `Bernoulli(theta[u][v])` in row-major order,
/// mirrors it and leaves the diagonal empty.
pub fn sample_augmentation(theta: &Array2<f64>, seed: u64) -> Result<Array2<f64>> {
    let m = theta.nrows();
    if theta.ncols() != m {
        return Err(Error::contract("sample_augmentation", format!("matrix is {:?}, not square", theta.dim())));
    }
    if let Some(bad) = theta.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::contract(
            "sample_augmentation",
            format!("probability {bad} outside [0, 1]"),
        ));
    }
    let mut rng = rng::stream(seed, &[rng::tag::AUGMENT]);
    let mut out = Array2::zeros((m, m));
    for u in 0..m {
        for v in u + 1..m {
            if rng.random::<f64>() < theta[[u, v]] {
                out[[u, v]] = 1.0;
                out[[v, u]] = 1.0;
            }
        }
    }
    Ok(out)
}

/// Block-constant probability matrix with a zero diagonal.
pub fn sbm_probability_matrix(block_sizes: &[usize], intra: f64, inter: f64) -> Array2<f64> {
    let block: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = block.len();
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else if block[i] == block[j] {
            intra
        } else {
            inter
        }
    })
}

fn check_probability(op: &'static str, name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::contract(op, format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// Stochastic block model sample with degree features. Nodes are numbered
/// block by block.
pub fn generate_sbm(block_sizes: &[usize], intra: f64, inter: f64, seed: u64) -> Result<Graph> {
    check_probability("generate_sbm", "intra", intra)?;
    check_probability("generate_sbm", "inter", inter)?;
    let theta = sbm_probability_matrix(block_sizes, intra, inter);
    if theta.nrows() == 0 {
        return Err(Error::contract("generate_sbm", "no nodes"));
    }
    let adjacency = sample_augmentation(&theta, seed)?;
    let features = Array2::zeros((adjacency.nrows(), 1));
    let g = Graph::new(adjacency, features, None)?;
    let deg = degree_features(&g);
    g.with_features(deg)
}

/// Removes each edge independently with probability `rate`; features kept.
pub fn edge_drop_baseline(g: &Graph, rate: f64, seed: u64) -> Result<Graph> {
    check_probability("edge_drop_baseline", "rate", rate)?;
    let mut rng = rng::stream(seed, &[rng::tag::AUGMENT]);
    let mut a = g.adjacency().clone();
    for (u, v) in g.edges() {
        if rng.random::<f64>() < rate {
            a[[u, v]] = 0.0;
            a[[v, u]] = 0.0;
        }
    }
    g.with_adjacency(a)
}

/// How positive views are produced during pretraining.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AugmenterKind {
    Identity,
    Lga { tau: f64 },
    EdgeDrop { rate: f64 },
}

impl AugmenterKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AugmenterKind::Identity => Ok(()),
            AugmenterKind::Lga { tau } => AugmenterConfig { tau, seed: 0 }.validate(),
            AugmenterKind::EdgeDrop { rate } => {
                if (0.0..=1.0).contains(&rate) {
                    Ok(())
                } else {
                    Err(Error::Config(format!("edge-drop rate {rate} outside [0, 1]")))
                }
            }
        }
    }
}

/// Produces a fresh positive view of graph `index` each epoch. USVT estimates
/// are computed on first use and cached for the lifetime of the augmenter.
#[derive(Debug, Clone)]
pub struct Augmenter {
    kind: AugmenterKind,
    seed: u64,
    cache: Vec<Option<UsvtEstimate>>,
}

impl Augmenter {
    pub fn new(kind: AugmenterKind, seed: u64) -> Result<Self> {
        kind.validate()?;
        Ok(Self {
            kind,
            seed,
            cache: Vec::new(),
        })
    }

    pub fn kind(&self) -> AugmenterKind {
        self.kind
    }

    /// Seed of the sample drawn for `(index, epoch)`.
    pub fn sample_seed(&self, index: usize, epoch: usize) -> u64 {
        rng::derive_seed(self.seed, &[rng::tag::AUGMENT, index as u64, epoch as u64])
    }

    /// Cached USVT estimate for graph `index` (LGA only).
    pub fn estimate(&mut self, index: usize, g: &Graph) -> Result<Option<&UsvtEstimate>> {
        let AugmenterKind::Lga { tau } = self.kind else {
            return Ok(None);
        };
        if self.cache.len() <= index {
            self.cache.resize(index + 1, None);
        }
        if self.cache[index].is_none() {
            self.cache[index] = Some(usvt_estimate(g.adjacency(), tau)?);
        }
        Ok(self.cache[index].as_ref())
    }

    pub fn augment(&mut self, index: usize, g: &Graph, epoch: usize) -> Result<Graph> {
        let seed = self.sample_seed(index, epoch);
        match self.kind {
            AugmenterKind::Identity => Ok(g.clone()),
            AugmenterKind::EdgeDrop { rate } => edge_drop_baseline(g, rate, seed),
            AugmenterKind::Lga { .. } => {
                let est = self.estimate(index, g)?.expect("LGA always estimates");
                let a = sample_augmentation(&est.theta, seed)?;
                g.with_adjacency(a)
            }
        }
    }
}

/// Mean absolute error over off-diagonal entries.
pub fn off_diagonal_mae(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let n = a.nrows();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += (a[[i, j]] - b[[i, j]]).abs();
            }
        }
    }
    total / (n * (n - 1)) as f64
}
