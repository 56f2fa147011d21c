//! Core algorithms for establishment-level production networks.
//!
//! The crate is `no_std` (it needs `alloc`) and carries everything that is
//! pure computation:
//!
//! * [`domain`]: identifiers, economies and the directed [`ProductionNetwork`].
//! * [`netgen`]: synthetic economies with power-law trade links.
//! * [`recipe`]: inference of per-product input sets from firm-level links.
//! * [`cover`]: set cover with groups and priorities.
//! * [`builder`]: the end-to-end establishment network construction.
//! * [`cascade`]: the probabilistic disruption cascade and its exact oracle.
//!
//! File formats, the Monte Carlo driver and the CLI live in the `estnet` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod builder;
pub mod cascade;
pub mod cover;
pub mod domain;
mod error;
pub mod netgen;
pub mod recipe;

pub use domain::{
    Economy, EntityKind, Establishment, EstablishmentId, Firm, FirmId, FirmProductRule, IndustryId, NodeAttrs,
    ProductId, ProductionNetwork, RegionId,
};
pub use error::{Error, Result};
