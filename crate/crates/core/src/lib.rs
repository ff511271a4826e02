//! Imaginary-time evolution through unitary Boltzmann-machine identities.
//!
//! Non-unitary Pauli exponentials `exp(-K P)` are written as marginals over
//! auxiliary Ising fields, compiled into ancilla circuits with
//! post-selection, simulated on a dense state vector, and mirrored by a
//! classical lateral deep Boltzmann machine representation.

pub mod error;
pub mod pauli;
pub mod gate;
pub mod dense;
pub mod rbm;
pub mod circuit;
pub mod sim;
pub mod contract;
pub mod ldbm;
pub mod stats;
pub mod experiment;

pub use error::{Error, Result};
pub use pauli::{parse_hamiltonian, Hamiltonian, HamiltonianTerm, PauliOp, PauliString};
