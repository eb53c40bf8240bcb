//! Cantor families with vanishing deletion proportions, the sieving dynamics
//! whose surviving set realizes them, and estimators for their dimension:
//! certified lower bounds via regular measures and empirical box counting.
//!
//! All constructions are generic over the [`Scalar`] type. Use `f64` for
//! simulation throughput and [`Exact`] (arbitrary-precision rationals) when
//! an identity has to hold exactly.

pub mod birkhoff;
pub mod cantor;
pub mod dimension;
pub mod dynamics;
pub mod error;
pub mod regularity;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact rational scalar backing the crate's exact mode.
pub type Exact = num_rational::BigRational;

/// Exact rational from a finite f64 (every finite f64 is dyadic).
pub fn exact_from_f64(v: f64) -> Option<Exact> {
    num_traits::FromPrimitive::from_f64(v)
}

/// Deletion sequence over exact rationals.
pub type ExactSequence = cantor::DeletionSequence<Exact>;
/// Deletion sequence over `f64`.
pub type FloatSequence = cantor::DeletionSequence<f64>;
/// Rank interval over exact rationals.
pub type ExactInterval = cantor::RankInterval<Exact>;
/// Rank interval over `f64`.
pub type FloatInterval = cantor::RankInterval<f64>;
/// Square-map state over `f64`.
pub type FloatSieveState = dynamics::SieveState<f64>;
/// Cube-map state over `f64`.
pub type FloatReturnState = dynamics::ReturnState<f64>;
