//! Quasi-stationary and quasi-ergodic measures of absorbed Markov chains.
//!
//! The pipeline discretizes a transition kernel ([`kernel`]), extracts the
//! peripheral spectrum of the resulting matrix ([`spectral`]), and derives the
//! conditioned limit laws and their convergence rates ([`qsd`]). Two
//! independent checks sit beside it: exact dense algebra on small finite
//! chains ([`oracle`]) and direct simulation of the absorbed process ([`mc`]).

// `!(a < b)` is used on purpose so that NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod exec;
pub mod kernel;
pub mod mc;
pub mod measure;
pub mod oracle;
pub mod qsd;
pub mod spectral;

pub use exec::Execution;
