//! Node selection for data regeneration in regenerating-coded storage systems.
//!
//! A failed node's blocks are rebuilt on a *newcomer* from `d` *providers*.
//! This crate picks the newcomer and providers so the regeneration time is
//! small, and evaluates that time under two network models:
//!
//! * an overlay model where every provider/newcomer pair has a dedicated
//!   end-to-end bandwidth ([`overlay_select`], [`traffic`]);
//! * a three-tier fat-tree where flows share physical links and receive
//!   max-min fair rates ([`fattree`]).
//!
//! [`experiment`] drives seeded parameter sweeps over both models.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod fattree;
pub mod model;
pub mod overlay_select;
pub mod seed;
pub mod topology_file;
pub mod traffic;

pub use error::{Error, Result};
pub use model::{BandwidthDistribution, CodeParams, FatTreeNetwork, NodeId, OverlayNetwork};
pub use overlay_select::{RepairPlan, Scheme};
pub use traffic::{BetaMode, TrafficVector};
