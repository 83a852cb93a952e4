//! Finite element solver for linear fluid-structure interaction with a
//! Robin-based loosely coupled time splitting.
//!
//! The fluid is a linear incompressible Stokes-like flow in a channel,
//! discretized with equal-order P1/P1 elements and Brezzi-Pitkäranta pressure
//! stabilization; the solid is a linear-elastic wall with P1 displacements
//! and a midpoint time rule. Per time step the solid and fluid are solved
//! once each, exchanging Robin data, and the interface traction is updated
//! nodewise. A strongly coupled scheme with the same per-field discretizations
//! serves as reference.

pub mod assembly;
pub mod bench;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod mesh;
pub mod monolithic;
pub mod output;
pub mod problem;
pub mod run;
pub mod sparse;
pub mod splitting;

pub use assembly::PhysicalParams;
pub use config::{load_config, RunConfig};
pub use error::{AssemblyError, BenchError, ConfigError, MeshError, SolverError, SparseError};
pub use mesh::ChannelGeometry;
pub use problem::{CoupledState, Problem};
pub use run::Scheme;
