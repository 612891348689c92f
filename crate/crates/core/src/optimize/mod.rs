//! The epoch engine: SGD and Adam over a permuted sample order, and full
//! training trials driven by a [`Shuffler`](crate::shuffling::Shuffler).

mod config;
mod epoch;
mod trial;

pub use config::{AdamParams, OptimizerConfig, OptimizerKind, Schedule};
pub use epoch::{run_adam_epoch, run_epoch, run_paired_reversal_epoch, AdamState, DIVERGENCE_NORM};
pub use trial::{run_trial, DivergencePoint, Provenance, TrialRecord};
