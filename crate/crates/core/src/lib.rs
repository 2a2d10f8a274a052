//! Renormalized asymptotic valuations, devil's staircases over IFS fractals,
//! local fractional calculus in staircase variables, and spectral solvers for
//! deformed wave equations.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom fix `f64`.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod fractal;
pub mod output;
pub mod quadrature;
pub mod scalar;
pub mod valuation;
pub mod waves;

pub use calculus::*;
pub use error::{Error, Result};
pub use fractal::*;
pub use scalar::Scalar;
pub use valuation::*;
pub use waves::*;

pub type Scale64 = valuation::Scale<f64>;
pub type SequenceSpec64 = valuation::SequenceSpec<f64>;
pub type DualityParams64 = valuation::DualityParams<f64>;
pub type IfsSpec64 = fractal::IfsSpec<f64>;
pub type FractalCurve64 = fractal::FractalCurve<f64>;
pub type CantorSeed64 = fractal::CantorSeed<f64>;
pub type Staircase64 = fractal::Staircase<f64>;
pub type StaircaseCoordinate64 = calculus::StaircaseCoordinate<f64>;
pub type WaveProblem1D64 = waves::WaveProblem1D<f64>;
pub type WaveProblem2D64 = waves::WaveProblem2D<f64>;
