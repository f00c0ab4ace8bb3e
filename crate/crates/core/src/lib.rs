//! Weighted-sum-rate precoder design for user-centric network massive MIMO.
//!
//! Each user terminal is served by a cluster of base stations; every base
//! station must transmit at exactly its power budget. The feasible precoders
//! form a product of spheres, and [`solver::rcg_solve`] maximizes the
//! weighted sum rate over it with Riemannian conjugate gradient.
//!
//! The crate is `no_std` (with `alloc`). File formats, experiments and the
//! command-line driver live in the `ucn-sim` crate.
//!
//! Module map:
//! - [`network`]: channels, serving clusters, block embedding, per-station power
//! - [`geometry`]: metric, tangent projection, retraction, vector transport
//! - [`objective`]: rates, cached effective channels, gradients, line objective
//! - [`solver`]: conjugate directions, Armijo backtracking, the outer loop
//! - [`baselines`]: MRT, ZF, MMSE, BD and EZF precoders on the manifold
#![no_std]

extern crate alloc;

pub mod baselines;
pub mod blocks;
pub mod config;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod network;
pub mod objective;
pub mod solver;

pub use blocks::Blocks;
pub use config::{dbm_to_watts, watts_to_dbm, Layout, NetworkConfig};
pub use error::{Error, Result};
pub use geometry::{PowerManifold, Precoder, TangentVector};
pub use network::{generate_channels, select_clusters, ChannelSet, ClusterMap};
pub use objective::{ObjectiveCache, WsrProblem};
pub use solver::{
    rcg_solve, rcg_solve_observed, Clock, IterationState, NoClock, Solution, SolverOptions, SolverTrace, Termination,
};
