//! Exact spherical Hecke algebra calculus for unitary groups over an
//! unramified quadratic extension of `Q_p`, together with brute-force
//! verification of the n = 1 fundamental lemma and its arithmetic analogue.
//!
//! All arithmetic is exact. Truncation modulo `p^N` only appears when a norm
//! equation has to be solved, see [`localfield::solve_norm`].

pub mod afl;
pub mod error;
pub mod hecke;
pub mod intersection;
pub mod lattice;
pub mod localfield;
pub mod orbital;
pub mod symfun;

pub use error::{Error, Result};
pub use localfield::{FieldElement, PrimeConfig, Rational, TruncatedElement, Valuation};

/// Serializes a rational as `"num/den"`, the format used in every JSON report.
pub fn rational_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub(crate) fn serialize_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rational_string(r))
}
