//! Linear-Gaussian bandit simulation and verification toolkit.
//!
//! Implements ensemble sampling and exact Thompson sampling on finite-action
//! linear bandits with Gaussian prior and noise, exact conjugate posterior
//! maintenance, discrete information metrics, every computable constant and
//! formula of the associated Bayesian regret bounds, and a seeded experiment
//! harness with Monte Carlo verification suites.

pub mod agents;
pub mod bandit;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod infometrics;
pub mod posterior;
pub mod rng;

pub use bandit::{LinearBanditInstance, Trajectory};
pub use bounds::{BoundReport, MismatchSample};
pub use error::{Error, Result};
pub use infometrics::DiscreteDistribution;
pub use posterior::GaussianBelief;
