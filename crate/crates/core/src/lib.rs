//! Permutation-symmetric simulation of N qubits coupled to a lossy resonator.
//!
//! The density matrix of a spin-permutation-invariant spin-boson state is stored
//! in the collective basis `|J,n><J,m| (x) |l><k|`, flattened into a single complex
//! vector. On top of that representation the crate provides
//!
//! * sparse superoperators for the Tavis-Cummings Hamiltonian, cavity loss and
//!   local qubit decay ([`operators`]),
//! * an adaptive Dormand-Prince 8(5,3) integrator ([`evolve`]),
//! * probe-state constructors ([`probes`]),
//! * quantum Fisher information with respect to the coupling `g` ([`fisher`]),
//! * time-optimized QFI, power-law fits and parameter scans ([`metrology`]),
//! * a brute-force full-Hilbert-space reference simulator ([`oracle`]).
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod basis;
pub mod blocks;
pub mod error;
pub mod evolve;
pub mod fisher;
pub mod integrator;
pub mod metrology;
pub mod operators;
pub mod oracle;
pub mod probes;
pub mod superop;

mod math;

pub use basis::{BasisLayout, SectorWeights, SpinTriple};
pub use error::{Error, Result};
pub use evolve::{DensityState, IntegratorConfig, Trajectory};
pub use fisher::{QfiConfig, QfiSeries};
pub use operators::SimParams;
pub use probes::{ProbeFamily, ProbeSpec};
pub use superop::SuperOp;

pub use num_complex::Complex64;
