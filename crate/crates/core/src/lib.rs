//! Firm-level collaboration networks reconstructed from commit history.
//!
//! The pipeline runs in stages, one module each:
//!
//! - [`ingest`]: parse and clean the canonical NDJSON commit log
//! - [`identity`]: fold email aliases and attach a firm to each developer
//! - [`slicing`]: cut the commit stream into release windows
//! - [`graph`]: build one co-modification graph per window
//! - [`metrics`]: cohesion and homophily measures
//! - [`coopetition`]: competing vs non-competing firm cohesion
//! - [`backbone`]: Simmelian backbones and sub-communities
//! - [`report`]: the end-to-end run and its file exports

pub mod backbone;
pub mod coopetition;
pub mod graph;
pub mod identity;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod slicing;

pub use backbone::{BackboneParams, SubCommunity};
pub use graph::{CollaborationGraph, Developer, FirmFilter};
pub use identity::{AffiliationMap, DeveloperIdentity, Identities};
pub use ingest::{CommitRecord, TimeField, ValidationReport};
pub use metrics::Exact;
pub use report::{run_pipeline, RunConfig};
pub use slicing::ReleaseWindow;
