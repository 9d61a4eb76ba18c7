//! Desk-scale Borel dynamics on adic sequence spaces.
//!
//! The crate models a standard Borel space by an adic sequence space and its
//! automorphisms by prefix-rewrite bijections with finitely many exceptional
//! eventually-periodic points. On top of that sit exact-rational measures,
//! ordered Bratteli diagrams with Vershik maps, Kakutani-Rokhlin towers and
//! marker sequences, periodic and odometer approximation, and evaluators for
//! the uniform/weak topology neighborhoods and metrics of Borel dynamics.
//!
//! All measure values, distances, and certificates are exact rationals;
//! floating point never enters a computation.

pub mod bratteli;
pub mod cylmap;
pub mod measure;
pub mod odometer;
pub mod sampling;
pub mod space;
pub mod textio;
pub mod topology;
pub mod towers;
pub mod vershik;

pub use num_bigint::BigUint;
pub use num_rational::BigRational;

/// Shortcut for building an exact rational from two machine integers.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}
