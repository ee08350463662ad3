//! Outlier-robust nonlinear filtering and smoothing for state-space models
//! whose measurement noise covariance is fully populated.
//!
//! The estimators model every measurement dimension with a binary outlier
//! indicator taking the values `ε` or `1`. An EM loop alternates a Gaussian
//! (unscented) state update with a coordinate-wise indicator sweep, so a
//! corrupted dimension is variance-inflated and decorrelated from the rest
//! instead of contaminating the whole update.
//!
//! * [`emorf`]: the robust filter and the shared predict/update primitives.
//! * [`emors`]: the robust RTS smoother.
//! * [`outlier`]: indicator-dependent covariance algebra and the `τ` statistic.
//! * [`bcrb`]: Bayesian Cramér–Rao bounds for a perfect outlier rejector.
//! * [`simlab`]: the TDOA tracking benchmark and Monte Carlo harness.
//!
//! All numerical code is generic over [`Scalar`]; the aliases at the crate
//! root fix it to `f64`, which is what the experiment harness uses.

// `!(x > 0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod bcrb;
pub mod belief;
pub mod emorf;
pub mod emors;
pub mod error;
pub mod linalg;
pub mod outlier;
pub mod sigma;
pub mod simlab;
pub mod ssm;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub use error::{Error, Result};

/// Real scalar the estimators are generic over (`f32` or `f64`).
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive {}

impl<T> Scalar for T where T: RealField + Copy + FromPrimitive + ToPrimitive {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("scalar type cannot represent literal")
}

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
pub type GaussianBelief = belief::GaussianBelief<f64>;
pub type IndicatorVector = outlier::IndicatorVector<f64>;
pub type OutlierPrior = outlier::OutlierPrior<f64>;
pub type NoiseSpec = ssm::NoiseSpec<f64>;
pub type TrackingParams = ssm::TrackingParams<f64>;
pub type TrackingModel = ssm::TrackingModel<f64>;
pub type LinearModel = ssm::LinearModel<f64>;
pub type UtParams = sigma::UtParams<f64>;
pub type EmConfig = emorf::EmConfig<f64>;
pub type SmootherConfig = emors::SmootherConfig<f64>;
pub type FilterStepResult = emorf::FilterStepResult<f64>;
pub type SmootherState = emors::SmootherState<f64>;
pub type FimSequence = bcrb::FimSequence<f64>;
