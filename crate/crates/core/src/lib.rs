//! Core numerics for circuits of commuting two-qubit gates followed by weak
//! ancilla measurements.
//!
//! The Born distribution of ancilla outcomes is a random-bond Ising partition
//! function. This crate builds the lattices, evaluates that partition function
//! by boundary-MPS contraction, samples outcomes by Metropolis Monte Carlo,
//! enumerates small ensembles exactly and analyses the resulting series.
//!
//! `no_std` with `alloc`; file formats and the command line live in the
//! `weakmeas` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod contraction;
pub mod lattice;
pub mod model;
pub mod oracle;
pub mod sampler;
pub mod transfer;

pub use lattice::{Extents, LatticeError, LatticeGraph, LatticeKind};
pub use model::{
    couplings_from_times, nishimori_params, BondMatrix, CircuitParams, Coupling, NishimoriParams,
};
