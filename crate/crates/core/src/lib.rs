//! Dynamic correlation estimation for pairs of Brownian and geometric
//! Brownian motions sampled on the integer grid `t = 1..T`.
//!
//! * [`profile`] and [`paths`] build target correlation profiles and
//!   simulate path pairs with exactly that cross-covariance.
//! * [`bm`] and [`gbm`] hold the weighted-difference estimators and the
//!   exact expectations they are tested against.
//! * [`vg`] and [`bessel`] provide the variance-gamma law of a product of
//!   correlated normals.
//! * [`harness`] runs seeded Monte Carlo experiments and [`report`] writes
//!   them to disk.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod bm;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod gbm;
pub mod harness;
pub mod numeric;
pub mod paths;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod stats;
pub mod vg;

pub use bm::{BmEstimate, BmEstimatorParams, EstimateSeries};
pub use config::{EstimatorParams, ExperimentConfig, ExperimentKind};
pub use error::{Error, Result};
pub use gbm::{GbmEstimate, GbmEstimatorParams, GbmVariant};
pub use harness::{run_experiment, McReport};
pub use paths::{simulate_bm_pair, simulate_gbm_pair, BmPathPair, GbmPathPair};
pub use profile::{CorrelationProfile, ProfileSpec, TimeGrid};
pub use vg::VgParams;
