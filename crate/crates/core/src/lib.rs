//! Matrix-analytic moments and exact simulation for nondecreasing multi-type
//! Markov additive processes and the self-similar fragmentations they drive.
//!
//! Types are 0-based throughout the library.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod fragmentation;
pub mod malthus;
pub mod map_model;
pub mod map_sim;
pub mod matrix;
pub mod moments;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
