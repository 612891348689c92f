//! Per-epoch data orderings.

mod apr;
mod permutation;
mod scheme;

pub use apr::{AprParams, AprState, AprStep, Regime, Transform};
pub use permutation::{
    block_shuffle, block_shuffle_with_order, even_odd_interleave, reverse, seed_for_epoch,
    uniform_permutation, Permutation,
};
pub use scheme::{BlockSize, SchemeKind, Shuffler};
