//! Feature-based hierarchical topological maps (FHT-Maps) on a deterministic
//! 2D grid simulator.
//!
//! A robot explores a grid world by frontier-driven next-best-view selection
//! and builds a sparse graph of *main* nodes (place descriptor + local scan)
//! and lightweight *support* nodes (position + free rectangle). Another robot
//! can later relocalize against the map by descriptor matching, global scan
//! alignment and robust transform averaging, then plan over the graph.

pub mod error;
pub mod exploration;
pub mod fht;
pub mod geometry;
pub mod grid;
pub mod gridpath;
pub mod harness;
pub mod planning;
pub mod relocalization;
pub mod world_sim;

pub use error::{Error, Result};
