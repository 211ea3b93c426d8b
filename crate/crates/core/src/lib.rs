//! Bayesian estimators of the Kullback-Leibler divergence and of the squared
//! Hellinger divergence between two categorical distributions observed
//! through finite count samples.
//!
//! The estimators place a symmetric Dirichlet prior on each distribution and
//! either fix the two concentration parameters at their maximum-likelihood
//! values ([`estimators::estimate_dkl_dp`]) or average over them under a
//! hyper-prior that makes the a-priori divergence log-uniform
//! ([`estimators::estimate_dkl_dpm`], [`estimators::estimate_hellinger_dpm`]).
//!
//! All quantities are in nats.
//!
//! ```
//! use dirmix::counts::MultiplicityTable;
//! use dirmix::estimators::estimate_dkl_dpm;
//!
//! let table = MultiplicityTable::from_counts(&[5, 3, 0, 1], &[2, 4, 1, 0], 6).unwrap();
//! let report = estimate_dkl_dpm(&table).unwrap();
//! assert!(report.value.is_finite());
//! assert!(report.posterior_std.unwrap() >= 0.0);
//! ```

pub mod cli;
pub mod counts;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod hyperprior;
pub mod posterior;
pub mod specfun;
pub mod synth;

pub use error::{Error, Result};
