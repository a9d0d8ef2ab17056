//! Topology-aware construction, routing and verification of MOD_p hashing
//! and QFT circuits on nearest-neighbour coupling graphs.

pub mod angle;
pub mod circuit;
pub mod hash;
pub mod qasm;
pub mod qft;
pub mod report;
pub mod rewrite;
pub mod sim;
pub mod topology;

pub use angle::Angle;
pub use circuit::{Circuit, Gate, Layout, Space};
pub use topology::{CouplingGraph, Device, TopologySpec};
