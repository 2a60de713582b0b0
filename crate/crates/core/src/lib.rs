//! Metapopulation simulation of vector-borne epidemics on patch networks.
//!
//! Each patch hosts a stage-structured mosquito population and resident
//! humans. Humans travel along a sparse origin/destination table and return
//! home daily; mosquitoes interact with humans on nearby patches through a
//! linearly decreasing distance kernel.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: the isolated patch model, its thresholds and equilibria.
//! * [`network`]: patch geometry, Voronoi surfaces, carrying capacities,
//!   mosquito kernel edges and graph metrics.
//! * [`mobility`]: synthetic human travel tables and the disease-free
//!   equilibrium they induce.
//! * [`geo`]: ingestion of intersections and population grids, and
//!   synthetic islands.
//! * [`engine`]: the network dynamics, fixed-step integration and events.
//! * [`experiments`]: scenario drivers and numerical property checks.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod experiments;
pub mod geo;
pub mod mobility;
pub mod model;
pub mod network;
pub mod state;

pub use engine::{AquaticMode, EventSpec, Mutation, Quarantine, Simulation, Trajectory};
pub use error::{Error, Result};
pub use mobility::{MobilityGenConfig, TravelMatrices};
pub use model::{ModelParams, PatchState, VectorEquilibrium};
pub use network::{GraphMetrics, KernelEdge, PatchNetwork, PatchNode};
pub use state::NetworkState;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
