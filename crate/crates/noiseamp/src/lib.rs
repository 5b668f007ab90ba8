//! Numerical toolbox for probabilistic phase concentration of weak coherent
//! states by thermal-noise addition and heralded multiphoton subtraction.
//!
//! The crate provides three mutually validating routes to the same physics:
//!
//! - [`fock`]: truncated Fock-space density matrices, the tap beam splitter,
//!   inefficient click detectors and Wigner functions — the ground-truth
//!   oracle,
//! - [`analytic`]: closed-form Gaussian-moment expressions for the canonical
//!   phase moment μ and the herald success probability,
//! - [`pipeline`]: end-to-end amplification runs, a Glauber–Sudarshan
//!   P-function Monte Carlo sampler and a three-way validation harness.
//!
//! [`phase`] carries the figures of merit (Holevo variance, gain, Γ) and
//! [`tomo`] simulates homodyne detection with iterative maximum-likelihood
//! state reconstruction. [`cli`] backs the `noiseamp` binary.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod fock;
pub mod phase;
pub mod pipeline;
pub mod tomo;

pub use error::{Error, Result};
