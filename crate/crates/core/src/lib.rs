//! Constraint families, canonical form and calibration test for trifocal tensors.
//!
//! The book in `book/` walks through the concepts with runnable examples.

// NaN inputs must fail threshold checks, so comparisons are written negated on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod catalog;
pub mod canonical;
pub mod constraints;
pub mod error;
pub mod essential;
pub mod estimate;
pub mod io;
pub mod linalg;
pub mod rows;
pub mod sampling;
pub mod scene;
pub mod tensor;
pub mod tolerance;
pub mod two_view;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/essential.md")]
    mod essential {}
    #[doc = include_str!("../../../book/src/constraints.md")]
    mod constraints {}
    #[doc = include_str!("../../../book/src/canonical.md")]
    mod canonical {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
}
