//! Online convex optimization with meta-learning over families of mirror
//! descent learners.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix `f64`, which the experiment runner uses throughout.

pub mod bench;
pub mod error;
pub mod experts;
pub mod geometry;
pub mod ledger;
pub mod meta;
pub mod optimizers;
pub mod regularizers;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Domain64 = geometry::Domain<f64>;
pub type Regularizer64 = regularizers::Regularizer<f64>;
pub type Optimizer64 = optimizers::Optimizer<f64>;
pub type ExpertState64 = experts::ExpertState<f64>;
pub type MetaLearner64 = meta::MetaLearner<f64>;
pub type RegretLedger64 = ledger::RegretLedger<f64>;
pub type RegressionStream64 = bench::RegressionStream<f64>;

pub type Domain32 = geometry::Domain<f32>;
pub type Optimizer32 = optimizers::Optimizer<f32>;
pub type MetaLearner32 = meta::MetaLearner<f32>;

/// Library version string recorded in every run directory.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
