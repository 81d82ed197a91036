//! Trotterized time evolution of nearest-neighbor Heisenberg chains, and its
//! compression to a fixed-depth circuit through the Yang-Baxter equation.
//!
//! * [`spin_model`]: couplings, Hamiltonian classes, time grid.
//! * [`propagators`]: two-spin evolution matrices and native-gate circuits.
//! * [`circuit_ir`]: circuits on a linear chain, Trotter construction, QASM.
//! * [`ybe`]: Yang-Baxter moves for R gates on three qubits.
//! * [`compressor`]: merge and reflection rewrites, layer absorption.
//! * [`simulator`]: dense reference dynamics and depolarizing noise.

pub mod circuit_ir;
pub mod compressor;
pub mod linalg;
pub mod propagators;
pub mod simulator;
pub mod spin_model;
pub mod ybe;
