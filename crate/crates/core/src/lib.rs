//! Degrees-of-freedom analysis for locally connected interference networks
//! when transmitters know only the topology.
//!
//! The crate builds connectivity patterns, searches TDMA and interference
//! avoidance schemes, bounds the sum DoF with an LP over acyclic subsets of
//! the demand graph, and evaluates random linear schemes numerically.

pub mod cli;
pub mod demand_graph;
pub mod error;
pub mod linear_sim;
pub mod lp;
pub mod rational;
pub mod schemes;
pub mod topology;

pub use demand_graph::{best_assignment_upper_bound, build_demand_graph, DemandGraph, DofBound};
pub use error::{Error, Result};
pub use rational::Rational;
pub use schemes::{
    canonical_tdma, is_schedulable, optimal_tdma, schedule_dof, Budget, DofResult, MessageAssignment, Method,
    ServedSet, TdmaSchedule,
};
pub use topology::{Chordality, Mode, Topology};
