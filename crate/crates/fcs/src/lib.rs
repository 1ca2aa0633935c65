//! Translationally invariant finitely correlated states (FCS) of an infinite
//! qubit chain.
//!
//! A chain state is encoded by a pair of `b x b` Kraus matrices `(v1, v2)`
//! defining a completely positive unital map, together with the auxiliary
//! density matrix fixed under translation. From that triple the library
//! produces exact reduced density matrices for finite windows of the chain,
//! computes two-qubit entanglement measures (Wootters concurrence and
//! concurrence of assistance), and maximizes the nearest-neighbour
//! concurrence over an unconstrained angle parametrization via simulated
//! annealing followed by quasi-Newton refinement.
//!
//! Core numerics ([`chain`], [`params`], [`entanglement`]) are generic over
//! the real scalar type; the optimizer and CLI work in `f64`. Concrete
//! `f64` aliases are exported at the crate root.

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, NumCast};

pub mod chain;
pub mod entanglement;
pub mod error;
mod linalg;
pub mod optimizer;
pub mod params;
pub mod report;
pub mod verify;

pub use chain::{AuxiliaryState, KrausPair, ReducedState};
pub use entanglement::ConcurrenceSpectrum;
pub use error::FcsError;
pub use optimizer::{AnnealingConfig, OptimizationResult};
pub use params::{BlochVector, ParameterVector};
pub use report::StateReport;

/// Real scalar usable by the core numerics (`f32` or `f64` in practice).
pub trait Real: RealField + FromPrimitive + NumCast + Copy {}
impl<T: RealField + FromPrimitive + NumCast + Copy> Real for T {}

/// Converts an `f64` literal into the working scalar type.
pub(crate) fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 literal must be representable")
}

pub(crate) fn as_f64<R: Real>(x: R) -> f64 {
    NumCast::from(x).unwrap_or(f64::NAN)
}

/// Complex matrix over the scalar `R`.
pub type CMatrix<R> = DMatrix<Complex<R>>;

/// Default working scalar.
pub type Scalar = f64;
pub type CMatrix64 = CMatrix<f64>;
pub type KrausPair64 = KrausPair<f64>;
pub type AuxiliaryState64 = AuxiliaryState<f64>;
pub type ReducedState64 = ReducedState<f64>;
pub type ParameterVector64 = ParameterVector<f64>;

/// Conjectured maximal nearest-neighbour concurrence for translationally
/// invariant qubit chains (Wootters' bound).
pub const WOOTTERS_BOUND: f64 = 0.434467;
