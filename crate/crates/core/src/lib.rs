//! Kernel graph neural networks built on smoothed random-walk kernels.
//!
//! The encoder compares an input graph against a set of trainable hidden
//! graphs. Each comparison is a walk-length-`p` kernel evaluated between the
//! diffusion matrix of the input graph and a soft adjacency of the hidden
//! graph. Self-supervised pretraining pairs every graph with a resample drawn
//! from its low-rank (USVT) edge-probability estimate.
//!
//! Module map:
//! - [`graph`], [`tu`], [`folds`]: data model, TU-format IO, diffusion, CV splits
//! - [`autograd`]: tape-based reverse-mode gradients, Adam, finite differences
//! - [`kernel`]: hidden graphs, exact and smoothed kernels, the encoder
//! - [`lga`]: Jacobi eigensolver, USVT estimation, augmentation samplers
//! - [`mlp`], [`ssl`]: MLP heads and the two pretraining objectives
//! - [`harness`]: cross-validated training, ablations, exports and reports

pub mod autograd;
pub mod error;
pub mod folds;
pub mod graph;
pub mod harness;
pub mod kernel;
pub mod lga;
pub mod mlp;
pub mod rng;
pub mod ssl;
pub mod tu;

pub use error::{Error, Result};
pub use graph::{Dataset, DiffusionConfig, Graph};
pub use kernel::{KernelConfig, SwagParams};
