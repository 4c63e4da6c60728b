//! Taylor-derived squared surrogates of the softmax ranking loss (RG² and
//! RG×), weighted alternating least squares for matrix factorization, SGD
//! baselines, top-K ranking metrics and numeric checks of the consistency
//! theory behind the surrogates.

pub mod als;
pub mod data;
pub mod epoch;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod sgd;
pub mod synthetic;
pub mod theory;

pub use epoch::EpochLog;
pub use error::{Error, Result, Side};
pub use model::{FactorModel, Init};
