//! Exponential sums over boxes for graded polynomial systems, with the
//! auxiliary machinery needed to test the Weyl-type dichotomy numerically:
//! differencing varieties, linear-form invariants, simultaneous Diophantine
//! approximation, exponent thresholds and singular integrals.

pub mod dioph;
pub mod error;
pub mod expsum;
pub mod extended;
pub mod numeric;
pub mod polysys;
pub mod singint;
pub mod thresholds;
pub mod linforms;
pub mod variety;
pub mod weyl;

pub use error::{Error, Result};
pub use expsum::{eval_s, AlphaVector, BoxSpec, SumEvaluator, SumOptions};
pub use extended::XRat;
pub use polysys::{GradedSystem, Polynomial};
