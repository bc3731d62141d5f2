//! Multi-agent pathfinding on strongly connected directed graphs.
//!
//! Every vertex of the graph carries exactly one agent: a *pebble* (an agent
//! whose goal position matters) or a *hole* (a labelled unit of free space).
//! A move `u -> v` slides the occupant of `u` along the arc `(u, v)` into a
//! vertex currently holding a hole, and an instance is solved when every
//! pebble sits on its goal vertex, holes landing wherever they may.
//!
//! The crate decomposes a strongly connected digraph into its strongly
//! biconnected components and corridors, mirrors the instance onto the
//! component tree, solves the resulting tree puzzle, and converts the tree
//! plan back into digraph moves using a family of constructive motion
//! primitives (hole routing, cycle rotations, and exchange plans built from
//! them). All of it is `no_std` + `alloc`; anything that needs an operating
//! system (file formats, generators, benchmarks, the CLI) lives in the
//! companion crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod graph_core;
pub mod plan_engine;
pub mod motion_primitives;
pub mod sbd_solver;
pub mod tree_solver;
pub mod disc_solver;

mod permgroup;
mod smallbfs;

#[cfg(test)]
pub(crate) mod test_support;

pub use graph_core::{Digraph, Vertex};
pub use plan_engine::{Config, Move, Plan};
