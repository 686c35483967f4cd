//! Simulation laboratory for quantum annealing of hard 2-SAT problems.
//!
//! The crate covers the whole pipeline: instance generation and exhaustive
//! classical analysis ([`problems`]), the Ising mapping ([`ising`]), the
//! annealing Hamiltonians with optional trigger terms ([`hamiltonian`]),
//! Lanczos spectroscopy of the instantaneous gap ([`spectra`]), Trotterized
//! real-time evolution ([`dynamics`]), the statistics used to interpret the
//! runs ([`analysis`]), a simulated-annealing baseline ([`baseline`]) and the
//! reproducible experiment driver ([`experiment`]).

pub mod analysis;
pub mod baseline;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub mod ising;
pub mod problems;
pub mod seed;
pub mod spectra;

pub use error::{Error, Result};
