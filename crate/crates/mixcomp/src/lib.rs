//! Continuous cluster counting for finite Gaussian mixtures.
//!
//! The central quantity is the *mixture complexity* (MC) of a mixture model
//! with respect to a dataset: an empirical estimate of the mutual information
//! between the latent component index and the observed variable. Its
//! exponential behaves as a continuous cluster count: two well-separated,
//! balanced components count as 2.0 clusters, two heavily overlapping or
//! heavily imbalanced components count as something between 1.0 and 2.0.
//!
//! On top of the estimator the crate provides:
//!
//! * [`em`]: multi-restart EM fitting of Gaussian mixtures plus
//!   AIC/BIC model-selection scores over observed and complete likelihoods,
//! * [`sdms`]: sequential selection of the per-window mixture size over a
//!   stream of datasets, and MC tracking along the selected models,
//! * [`decomp`]: exact decomposition of MC along a two-level hierarchy of
//!   components, with weighted fuzzy c-means to build the hierarchy,
//! * [`detect`]: a median-window alert rule over MC or mixture-size
//!   sequences, and delay / false-alarm-rate evaluation of the alerts,
//! * [`data`]: synthetic drifting-cluster stream generators and CSV
//!   ingestion with trailing-window aggregation.
//!
//! All numeric code is generic over the floating-point type through the
//! [`Scalar`] trait; `f64` is the intended default and the concrete aliases
//! at the crate root ([`MixtureModel64`], [`Dataset64`], ...) refer to it.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub mod data;
pub mod decomp;
pub mod detect;
pub mod em;
pub mod error;
pub mod linalg;
pub mod math;
pub mod mixture;
pub mod rng;
pub mod sdms;

pub use crate::error::{Error, Result};

/// Floating-point scalar the library is generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum<T>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

pub type GaussianComponent64 = mixture::GaussianComponent<f64>;
pub type MixtureModel64 = mixture::MixtureModel<f64>;
pub type Dataset64 = mixture::WeightedDataset<f64>;
pub type FittedModel64 = em::FittedModel<f64>;
pub type TrackResult64 = sdms::TrackResult<f64>;

pub type GaussianComponent32 = mixture::GaussianComponent<f32>;
pub type MixtureModel32 = mixture::MixtureModel<f32>;
pub type Dataset32 = mixture::WeightedDataset<f32>;
