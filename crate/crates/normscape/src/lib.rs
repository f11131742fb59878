//! Partition-indexed tensor unfoldings and certified operator-norm
//! landscapes.
//!
//! An order-k tensor can be unfolded into a lower-order tensor by merging
//! groups of modes; the possible unfoldings are indexed by the set
//! partitions of `{1, .., k}`. This crate provides:
//!
//! - [`partitions`]: canonical set partitions, lattice enumeration,
//!   refinement order, meets, cover edges, and upper cones;
//! - [`tensor`]: dense tensors with a fixed linear layout, the general
//!   unfolding operator and its inverse, and multilinear products;
//! - [`norms`]: lp operator-norm estimation (exact for vectors and for
//!   matrices at p = 2, multistart alternating ascent otherwise) with
//!   certificates that make every reported value a guaranteed lower bound,
//!   plus warm-start lifting and whole-lattice norm landscapes;
//! - [`bounds`]: the combinatorial overlap factors relating unfolding norms
//!   and audit routines that check every norm inequality on concrete
//!   tensors;
//! - [`odeco`]: blockwise orthogonally decomposable tensors, their
//!   construction and verification, and the norm-equality checks they
//!   satisfy on upper cones of the lattice.
//!
//! Core math is generic over the scalar type via [`scalar::Scalar`]
//! (f32 or f64); the aliases below pin the common instantiations.

pub mod bounds;
pub mod norms;
pub mod odeco;
pub mod partitions;
pub mod scalar;
pub mod tensor;

pub use partitions::{
    bell, cover_edges, enumerate_level, enumerate_partitions, stirling2, Partition,
    PartitionError,
};
pub use scalar::Scalar;
pub use tensor::{outer_rank1, unfold_index, unfolded_dims, MultiIndex, Tensor, TensorError};

/// Double-precision tensor, the default working type.
pub type Tensor64 = Tensor<f64>;
/// Single-precision tensor.
pub type Tensor32 = Tensor<f32>;
/// Double-precision norm estimate.
pub type NormEstimate64 = norms::NormEstimate<f64>;
/// Double-precision blockwise-orthogonal factor bundle.
pub type OdecoFactors64 = odeco::OdecoFactors<f64>;
