//! Numerical laboratory for second-order L-infinity variational problems.

// `!(a > b)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aronsson;
pub mod checks;
pub mod error;
pub mod function_space;
pub mod implicit_dsolution;
pub mod linalg;
pub mod lp_solver;
pub mod oracle_1d;
pub mod supremand;
pub mod young;

pub use error::{Error, Result};
