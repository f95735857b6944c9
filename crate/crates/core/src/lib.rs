//! Discrete Hodge theory on surfaces fibred over graphs.
//!
//! A closed surface is cut along circles into vertex pieces (caps, tubes,
//! pants) arranged along a finite graph. Stretching every circle into a
//! cylinder of length `2r` gives `X(r)`. The crate builds discrete models of
//! `X(r)`, computes harmonic forms and small eigenvalues of the
//! Gauss–Bonnet operator `D = d + δ`, splices matching sets of extended
//! harmonic forms on half-infinite stars, and compares the result with an
//! exact graph cohomology predictor.

pub mod cech;
pub mod complex;
pub mod cross_section;
pub mod error;
pub mod exact;
pub mod graph;
pub mod modes;
pub mod runner;
pub mod scene;
pub mod spectral;
pub mod splicing;

pub use error::{Error, Result};
