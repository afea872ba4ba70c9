//! Classical simulation of the Gutzwiller factor `exp(-g D)` written as a
//! linear combination of unitaries through a discrete Hubbard-Stratonovich
//! transformation, for the Fermi-Hubbard model on small open lattices.
//!
//! Two ways of performing the auxiliary-field sum are provided:
//!
//! * [`lcu`]: an ancilla circuit that prepares the Gutzwiller state with a
//!   finite success probability;
//! * [`mc`]: Metropolis sampling of the auxiliary fields with either a dense
//!   statevector or a Slater-determinant backend.
//!
//! Everything else ([`pauli`], [`statevector`], [`slater`], ...) is the
//! machinery those two routes are built from and checked against.

pub mod eigen;
pub mod error;
pub mod gutzwiller;
pub mod hadamard;
pub mod hst;
pub mod lattice;
pub mod lcu;
pub mod mc;
pub mod pauli;
pub mod slater;
pub mod stats;
pub mod statevector;

pub use error::{Error, Result};
pub use gutzwiller::{AuxFieldConfig, HsParams, Slot};
pub use lattice::{Lattice, LatticeKind, QubitLayout, Spin};
pub use num_complex::Complex64;
pub use pauli::{Pauli, PauliSum, PauliTerm};
pub use slater::SlaterState;
pub use statevector::{Gate, StateVector};

/// Version string recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
