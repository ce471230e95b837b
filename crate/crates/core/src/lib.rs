//! Probabilistic circuits over binary variables and randomized MAP solvers with
//! verifiable certificates.
//!
//! The crate is split into five layers:
//!
//! * [`circuit`]: the smooth, decomposable circuit representation, its text
//!   format, structural validation, log-space evaluation and random generation.
//! * [`inference`]: conditional probability queries and exact conditional
//!   sampling backed by a circuit, plus an exhaustive tabular oracle.
//! * [`solvers`]: the sampling-based MAP solvers (naive, PAC, budgeted and
//!   Hamming-exploiting), stopping rules and Pareto frontiers of PAC parameters.
//! * [`baselines`]: MaxProduct, ArgMaxProduct and Independent heuristics.
//! * [`bench`]: the ranking benchmark harness and its CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN

pub mod assignment;
pub mod baselines;
pub mod bench;
pub mod circuit;
pub mod error;
pub mod inference;
pub mod logspace;
pub mod solvers;

pub use assignment::{Assignment, PartialAssignment, VarId};
pub use circuit::{Circuit, Node, LeafKind, StructureReport};
pub use error::{Error, Result};
pub use inference::{ConditionalOracle, QueryOracle, QuerySpec, TabularDistribution};
