//! Traffic-engineered flow assignment over capacitated ISP topologies, and
//! its realization as MPLS segment-routing label stacks.
//!
//! The pipeline runs [`te`] (admission plus delay-driven re-routing), maps
//! every engineered path onto a minimal segment list with [`sr`], encodes
//! segment lists into labels with [`mpls`], and checks the result against
//! the forwarding model in [`sim`]. [`eval`] wraps the stages as file-level
//! commands and runs the prefix-subset experiment.

pub mod demand;
pub mod eval;
pub mod mpls;
pub mod registry;
pub mod sim;
pub mod sr;
pub mod te;
pub mod topo;
