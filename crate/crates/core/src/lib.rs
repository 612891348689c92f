//! Without-replacement SGD with structured data orderings.
//!
//! The crate is organised bottom-up:
//!
//! * [`rngcore`]: a bit-exact, platform independent random stream.
//! * [`shuffling`]: permutations and the per-epoch ordering schemes
//!   (incremental gradient, shuffle-once, random reshuffling, block
//!   reshuffling, paired reversal and the adaptive APR controller).
//! * [`problems`]: finite-sum objectives with analytic gradients and,
//!   where available, Hessians.
//! * [`data`]: LIBSVM / CSV ingestion and standardization.
//! * [`optimize`]: the epoch engine (SGD, Adam) and full training trials.
//! * [`analysis`]: gradient-variance statistics, exact epoch-map algebra and
//!   the brute-force oracles used to check scaling laws.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The
//! experiment tooling works in `f64`; the aliases below name the common
//! concrete instantiations.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod data;
mod error;
pub mod linalg;
pub mod optimize;
pub mod problems;
pub mod rngcore;
mod scalar;
pub mod shuffling;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use problems::FiniteSum;
pub use rngcore::SeededGenerator;
pub use shuffling::Permutation;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;

pub type QuadLin64 = problems::QuadLin<f64>;
pub type QuadLin32 = problems::QuadLin<f32>;
pub type QuadraticEnsemble64 = problems::QuadraticEnsemble<f64>;
pub type QuadraticEnsemble32 = problems::QuadraticEnsemble<f32>;
pub type LogisticRegression64 = problems::LogisticRegression<f64>;
pub type LinearRegression64 = problems::LinearRegression<f64>;
pub type Mlp64 = problems::Mlp<f64>;
pub type Mlp32 = problems::Mlp<f32>;

pub type SmoothnessConstants64 = problems::SmoothnessConstants<f64>;
pub type VarianceReport64 = analysis::VarianceReport<f64>;
pub type EpochMapReport64 = analysis::EpochMapReport<f64>;
pub type OptimizerConfig64 = optimize::OptimizerConfig<f64>;
pub type AdamState64 = optimize::AdamState<f64>;

/// A dynamically dispatched `f64` problem, as produced by [`problems::make_problem`].
pub type DynProblem = Box<dyn FiniteSum<f64>>;
