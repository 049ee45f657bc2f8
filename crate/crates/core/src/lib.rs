//! Dense bit-vector representations for categorical data.
//!
//! One-hot encoding of a column with `M` distinct values costs `M` dimensions,
//! which becomes prohibitive for high-cardinality columns. Plain binary coding
//! costs only `ceil(log2 M)` dimensions but is not total: for `M` that is not a
//! power of two, some bit patterns decode to integers outside `[0, M)` (the
//! *out-of-index* problem). The residual bit codec implemented here decomposes
//! `M - 1` greedily into terms `2^b - 1` and encodes an index as the
//! concatenation of per-block binary values. Every bit pattern of the resulting
//! width decodes to a valid index, and the width grows logarithmically in `M`.
//!
//! The crate bundles:
//!
//! - [`encoding`] — the three codecs over integer class indices, the
//!   block-length solver, and an exact dynamic-programming width oracle;
//! - [`pipeline`] — a fit/transform/inverse pipeline for mixed tabular data:
//!   rare-category masking, per-column encoding, the log-clamp bit transform,
//!   and a rank-based quantile-to-normal map, with full inversion back to
//!   labels;
//! - [`collapse`] — the categorical diffusion forward process and its
//!   posterior, used to demonstrate numerically that the posterior collapses
//!   onto the clean sample as the class count grows;
//! - [`ooi`] — a seeded simulation harness measuring out-of-index and
//!   malformed-code rates of each codec under synthetic corruption.
//!
//! Real-valued computations are generic over the scalar type through the
//! [`Real`] trait (`f32` or `f64`); the concrete `f64` aliases below are what
//! the command-line tools use.
//!
//! ```
//! use resbit_core::encoding::{block_lengths, dims, CategorySpace, Scheme};
//!
//! let blocks = block_lengths(50).unwrap();
//! assert_eq!(blocks, vec![5, 4, 2]);
//! assert_eq!(dims(50, Scheme::ResBit).unwrap(), 11);
//!
//! let space = CategorySpace::with_anonymous_labels(50).unwrap();
//! let code = space.encode_resbit(39).unwrap();
//! assert_eq!(code.bits(), &[1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
//! assert_eq!(space.decode_resbit(&code).unwrap(), 39);
//! ```

#![forbid(unsafe_code)]

pub mod collapse;
pub mod encoding;
pub mod normal;
pub mod ooi;
pub mod pipeline;
mod real;

pub use real::Real;

/// `f64` matrix, the default for the command-line tools.
pub type Matrix64 = pipeline::Matrix<f64>;
/// `f32` matrix.
pub type Matrix32 = pipeline::Matrix<f32>;
/// `f64` fitted pipeline.
pub type Pipeline64 = pipeline::FittedPipeline<f64>;
/// `f32` fitted pipeline.
pub type Pipeline32 = pipeline::FittedPipeline<f32>;
/// `f64` diffusion schedule.
pub type Schedule64 = collapse::DiffusionSchedule<f64>;
/// `f32` diffusion schedule.
pub type Schedule32 = collapse::DiffusionSchedule<f32>;
