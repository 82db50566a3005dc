//! Hypergraph product codes built from biregular expanders, with a small-set
//! envelope decoder for erasure-style correction.

pub mod classical;
pub mod erasure;
pub mod gf2;
pub mod graph;
pub mod harness;
pub mod hgp;
pub mod io;
pub mod reduction;
pub mod ssfind;

/// Exact rational arithmetic used for scores, norms and expansion parameters.
pub type Rational = num_rational::Rational64;
