//! Conditional invertible flows for 3D point clouds.
//!
//! A point cloud is modelled as a density over 3D space. A point-level flow
//! `f` maps points to a standard normal latent space and is conditioned on a
//! per-cloud embedding `e`; an embedding-level flow `g` maps an observable
//! shape descriptor `w` (classical MDS over pairwise Chamfer distances) to
//! `e`, so that embeddings follow a standard normal prior as well.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature only
//! enables runtime CPU feature detection in the matrix-multiply kernels.
//!
//! Module map:
//!
//! - [`tensor`] and [`graph`]: float64 tensors and a reverse-mode
//!   differentiable computation graph.
//! - [`flow`]: affine coupling blocks, permutations, and the composite flows.
//! - [`cloud`], [`chamfer`], [`eigen`], [`mds`]: shape descriptors.
//! - [`train`]: joint likelihood, Adam, step-decay schedule, the training loop.
//! - [`inference`]: sampling, decoding, embedding reconstruction, interpolation.
//! - [`metrics`]: MMD and coverage under Chamfer distance.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod chamfer;
pub mod cloud;
pub mod eigen;
mod error;
pub mod flow;
pub mod graph;
pub mod inference;
pub(crate) mod math;
pub mod mds;
pub mod metrics;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};

/// Width of the embedding `e` and of the descriptor `w`.
pub const EMBEDDING_DIM: usize = 64;

/// Dimension of a point.
pub const POINT_DIM: usize = 3;
