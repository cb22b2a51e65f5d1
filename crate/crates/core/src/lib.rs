//! Cache-enabled device-to-device offloading under a per-helper battery budget.
//!
//! The crate has two independent halves that are meant to be checked against
//! each other:
//!
//! * an analytical model built on Poisson point process arguments:
//!   [`popularity`] (Zipf demand and the optimal probabilistic caching policy),
//!   [`fullreuse`] and [`tdma`] (offloading probability, offloading ratio and
//!   per-transmitter energy cost for the two scheduling extremes) and
//!   [`power`] (transmit power optimisation);
//! * a Monte Carlo simulator in [`sim`] that drops users in a square cell,
//!   draws caches, requests and Rayleigh fading, and accounts for the battery
//!   budget link by link.
//!
//! All quantities are SI: metres, watts, joules, bits, hertz.

pub mod config;
pub mod error;
pub mod fullreuse;
pub mod metrics;
pub mod popularity;
pub mod power;
pub mod sim;
pub mod specfun;
pub mod tdma;

pub use config::{DerivedQuantities, ParamSet, SystemConfig};
pub use error::{Error, Result};
pub use fullreuse::{DtDensities, FullReuseModel, OperatingPoint};
pub use metrics::{AnalyticMetrics, Scheme};
pub use popularity::{CachingDistribution, CachingPolicy, Popularity};
pub use power::{PowerMethod, PowerResult};
pub use tdma::{TdmaContext, TdmaModel};
