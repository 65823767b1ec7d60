//! Capacity regions, outer bounds and generally-strong-interference
//! certificates for two-user vector Gaussian interference channels.
//!
//! All rates are in nats.

pub mod channel;
pub mod gsi;
pub mod linalg;
pub mod miso;
pub mod rates;
pub mod scenarios;
pub mod search;
pub mod solver;
