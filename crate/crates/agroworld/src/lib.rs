//! AgroWorld: an executable agricultural world engine.
//!
//! The crate is organized around a `World → Tools → Protocol` stack:
//!
//! - [`model`] defines the typed state space (parcels, raster time series,
//!   grid fields, weather streams, management logs) and the immutable
//!   world bundle on disk.
//! - [`units`] and [`geometry`] provide dimension-checked quantities and
//!   desk-scale planar geometry (shoelace areas, ray-cast containment).
//! - [`align`] implements the canonical alignment operator: equirectangular
//!   reprojection plus daily temporal resampling, and the CRS-mismatch check
//!   that turns silent spatial bugs into machine-readable diagnostics.
//! - [`toolkit`] is the tool registry. Every call returns a value plus a
//!   provenance-hashed [`toolkit::Artifact`], so analyses are auditable and
//!   bit-reproducible.
//! - [`sim`] is a deterministic daily water-balance simulator with
//!   counterfactual interventions and closed-form predictors.
//! - [`protocol`] holds task instances, output schemas, and the hierarchical
//!   executable checker that grades answers into a [`protocol::DiagnosticReport`].
//! - [`agent`] runs the execute–observe–refine loop: plan programs, sandboxed
//!   execution, rule-based reflection, and pluggable policies (scripted,
//!   fault-injecting, remote LLM).
//! - [`bench`] generates synthetic worlds and four task families with sealed
//!   references, runs benchmarks and ablations, and backs the `agro` CLI.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod align;
pub mod agent;
pub mod bench;
pub mod canonical;
pub mod geometry;
pub mod model;
pub mod protocol;
pub mod sim;
pub mod toolkit;
pub mod units;
