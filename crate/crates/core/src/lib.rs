//! Traces of Frobenius and Frobenius fields of elliptic curves over ℚ, with
//! density statistics for isogeny and complex-multiplication detection.

pub mod arith;
pub mod curve;
pub mod frobenius;
pub mod groupgl2;
pub mod stats;
pub mod store;
