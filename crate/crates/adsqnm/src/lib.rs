//! Quasinormal frequencies of Klein–Gordon fields on Kerr–AdS black holes.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy;
pub mod geometry;
pub mod numerics;
pub mod operator;
pub mod quasimodes;
pub mod spectra;
pub mod symbol_flow;
