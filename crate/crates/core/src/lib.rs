//! Planning toolkit for rearranging labeled uniform discs in a rectangular
//! workspace with the fewest pick-and-place actions.
//!
//! The pipeline decomposes the configuration space into regions of uniform
//! interference ([`region_graph`]), solves monotone instances with a
//! memoized depth-first search over the `2^n` goal subsets ([`monotone`]),
//! extends it with a single buffer visit and drives it from an informed
//! search over perturbations ([`nonmonotone`]).

pub mod cli;
pub mod geometry;
pub mod instance;
pub mod labels;
pub mod monotone;
pub mod nonmonotone;
pub mod oracles;
pub mod region_graph;
pub mod replay;
pub mod solution;
pub mod svg;

pub use geometry::{Position, Workspace};
pub use instance::{Arrangement, Instance, PoseLabel};
pub use region_graph::{GraphOptions, RegionGraph, Walk};
pub use solution::{Action, ActionKind, Solution};
