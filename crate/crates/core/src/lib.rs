//! Dynamic interference-minimization routing for multi-hop cognitive radio
//! networks.
//!
//! Secondary users (SUs) route requests toward cognitive pilot channel (CPC)
//! base stations through relays placed around the footprints of primary users
//! (PUs). The crate builds the routing hierarchy around the medial axis between
//! PU footprints, solves the per-level congestion games with fictitious play,
//! couples the levels by backward induction over the PU state Markov chain, and
//! benchmarks the resulting routes against Dijkstra and medial-axis routing.
//!
//! The pipeline, in order:
//!
//! 1. [`scenario`]: load a [`Scenario`] and build the PU [`StateModel`].
//! 2. [`geometry`]: medial axis, relaxed corridor and per-state hierarchy.
//! 3. [`stagegame`] + [`queueing`]: per-level stage games with M/G/1 delay
//!    costs, solved by fictitious play.
//! 4. [`dynprog`]: backward induction across levels and discounted values.
//! 5. [`baselines`] and [`metrics`]: reference routes and comparisons.
//! 6. [`runner`]: the experiment driver behind the `cpcroute` binary.

pub mod baselines;
pub mod dynprog;
mod error;
pub mod geometry;
pub mod metrics;
pub mod network;
pub mod queueing;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod stagegame;

pub use error::{Error, Result};
pub use scenario::{NodeId, Point, Scenario, StateModel};
