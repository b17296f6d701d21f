#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![doc = include_str!("../README.md")]

extern crate alloc;

pub mod analysis;
pub mod calendar;
pub mod error;
pub mod factor;
pub mod gibbs;
pub mod instrument;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod random;
pub mod serde_matrix;
pub mod special;
pub mod stats;
pub mod svar;

pub use error::{Error, ErrorKind, Result};
