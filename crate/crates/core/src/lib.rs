//! Gas and fiat cost models for bulk token transfers (airdrops) on an
//! EVM-style fee schedule.
//!
//! - [`gas_model`]: fee schedule and primitive cost functions.
//! - [`strategies`]: distributor/recipient cost models, calibration,
//!   feasibility and discounting.
//! - [`merkle`]: pooled payments committed to a Merkle root.
//! - [`scenario`]: the reference scenario set and recipient sweeps.
//! - [`fiat`]: gas to USD conversion over daily price series.

pub mod fiat;
pub mod gas_model;
pub mod merkle;
pub mod scenario;
pub mod strategies;
