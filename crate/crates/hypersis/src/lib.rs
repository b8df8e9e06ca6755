//! Discrete-time SIS contagion on weighted directed hypergraphs.
//!
//! The model couples pairwise infection (ordinary directed edges) with
//! group infection (hyperedges whose tail is infected by the joint state of
//! the head set). This crate simulates the mean-field dynamics for a single
//! virus, two competing viruses, and interactions of arbitrary order, and
//! provides:
//!
//! - sparse cubical tensor algebra ([`tensor`]),
//! - Perron root computation for nonnegative matrices ([`spectral`]),
//! - hypergraph construction, random generators, and adjacency tensors
//!   ([`hypergraph`]),
//! - the mean-field steppers, equilibrium solvers, and the polynomial
//!   expansion of the dynamics around an equilibrium ([`dynamics`]),
//! - regime classification (healthy / bistable / endemic) with explicit
//!   domains of attraction ([`analysis`], [`bivirus`]),
//! - exact Markov-chain and Monte Carlo ground truth for validating the
//!   mean-field approximation ([`stochastic`]),
//! - recovery of curing and infection rates from observed trajectories by
//!   nonnegative least squares ([`learning`]),
//! - file formats for hypergraphs, parameters, trajectories, and reports
//!   ([`io`]).

pub mod analysis;
pub mod bivirus;
pub mod dynamics;
pub mod error;
pub mod hypergraph;
pub mod io;
pub mod learning;
pub mod spectral;
pub mod stochastic;
pub mod tensor;

pub use error::{Error, Result};
