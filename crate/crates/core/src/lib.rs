//! Infinite-server queues fed by Poisson batch arrivals with heavy-tailed
//! batch sizes and sojourn times.
//!
//! - [`dist`]: the discrete fractional power law and the exponential sojourn law
//! - [`series`]: truncated power series, the carrier of every pgf computation
//! - [`analytic`]: stationary and transient queue-length distributions
//! - [`stability`]: stability verdicts and the expected maximum sojourn of a batch
//! - [`sim`]: discrete-event Monte Carlo of the queue

pub mod analytic;
pub mod dist;
mod error;
pub mod numerics;
pub mod series;
pub mod sim;
pub mod stability;

pub use analytic::{ArrivalSpec, QueueDistribution, SojournModel};
pub use dist::{BatchLaw, ExpSojourn, FracPowerLaw, MomentQuery};
pub use error::{DivergenceEvidence, Error, Result};
pub use series::TruncatedSeries;
pub use sim::{SimConfig, SimOutput};
pub use stability::{Criterion, StabilityVerdict, Verdict};
