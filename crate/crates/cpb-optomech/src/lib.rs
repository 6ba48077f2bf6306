//! Cooper-pair-box mediated optomechanics.
//!
//! A moving gate electrode modulates the gate charge of a Cooper-pair box that is
//! capacitively tied to a microwave LC cavity. The box's band curvature (its quantum
//! capacitance) turns small displacements into large cavity frequency shifts. This
//! crate evaluates the resulting radiation-pressure and cross-Kerr couplings with
//! three independent methods: the lumped circuit model, a perturbative expansion of
//! the quantized two-level Hamiltonian, and exact diagonalization in a truncated
//! Fock space.

pub mod circuit;
pub mod fock;
pub mod network;
pub mod params;
pub mod perturbative;
pub mod spectrum;
pub mod sweep;

pub use circuit::{CouplingResult, ModelTag};
pub use params::{BiasPoint, CircuitParams, ValidatedParams};
