//! Simulation and decoding toolkit for Grover search on a lossy register.
//!
//! The register loses qubits at a constant per-qubit rate while the search
//! iteration keeps acting correctly on whatever survives. The dynamics then
//! stays inside one two-dimensional sector per surviving-qubit count, which
//! makes exact simulation cheap at any register size:
//!
//! - [`dense`] carries the full density matrix for small registers and is
//!   the ground truth everything else is checked against;
//! - [`subspace`] evolves single trials through sector rotations and the
//!   single-qubit loss map;
//! - [`master`] integrates the continuous-time ensemble dynamics over all
//!   sectors and the closed-form binomial sector weights;
//! - [`trials`] samples readout tables in ensemble and trajectory modes;
//! - [`reconstruct`] decodes tables with a majority vote and a
//!   correlation-weighted filter, and gathers experiment statistics.

pub mod bitstring;
pub mod block;
pub mod config;
pub mod dense;
pub mod error;
pub mod master;
pub mod reconstruct;
pub mod record;
pub mod rng;
pub mod subspace;
pub mod trials;

pub use bitstring::Bitstring;
pub use block::{Block, BlockState, Violation};
pub use config::RegisterConfig;
pub use dense::{BlockProjection, DenseState};
pub use error::{Error, Result};
pub use record::{ExperimentTable, ReconstructionResult, TrialEntry, TrialRecord};
