//! Hierarchical Bayesian expected-goals modelling with expert-informed
//! priors and counterfactual player-substitution analysis.
//!
//! The pipeline: ingest shot events and expert ratings ([`ingest`]), build
//! the standardized 17-feature design matrix ([`features`]), map z-scored
//! ratings onto prior means ([`priors`]), fit the baseline or hierarchical
//! logistic model with NUTS ([`model`], [`nuts`]), check convergence
//! ([`diagnostics`]), and answer substitution "what if" queries with full
//! posterior uncertainty ([`counterfactual`]).
//!
//! The numerical core is generic over the scalar type through [`num::Real`]
//! (`f32` or `f64`); the aliases below fix the `f64` instantiations used by
//! the CLI and most callers.

pub mod counterfactual;
pub mod diagnostics;
pub mod features;
pub mod ingest;
pub mod model;
pub mod num;
pub mod nuts;
pub mod priors;

/// `f64` scaler for the geometric feature columns.
pub type Scaler64 = features::Scaler<f64>;
/// `f64` design matrix.
pub type FeatureMatrix64 = features::FeatureMatrix<f64>;
/// `f64` prior mean matrix.
pub type PriorMeanMatrix64 = priors::PriorMeanMatrix<f64>;
/// `f64` model specification.
pub type ModelSpec64 = model::ModelSpec<f64>;
/// `f64` posterior draws.
pub type PosteriorDraws64 = nuts::PosteriorDraws<f64>;
/// `f64` counterfactual shot set.
pub type ShotSet64 = counterfactual::ShotSet<f64>;
/// `f64` counterfactual delta summary.
pub type DeltaSummary64 = counterfactual::DeltaSummary<f64>;
