//! QSCI-AFQMC: selected configuration interaction trial wave functions built
//! from sampled configurations, used in phaseless auxiliary-field quantum
//! Monte Carlo over the full orbital space.
//!
//! Pipeline stages, each usable on its own:
//!
//! * [`hamio`]: FCIDUMP ingestion and frozen-core folding.
//! * [`factorize`]: pivoted Cholesky factorization of the two-electron tensor.
//! * [`detops`]: occupation strings, Slater–Condon rules, walker overlaps and
//!   Green's functions.
//! * [`sampler`]: Born-rule sampling of CI states, readout noise, counts files.
//! * [`qsci`]: configuration selection, spin-string product expansion and the
//!   subspace eigenproblem.
//! * [`fci`]: dense full CI / CASCI used as the reference oracle.
//! * [`afqmc`]: the phaseless AFQMC engine.
//! * [`pipeline`]: file-based stages behind the command-line tool.

pub mod afqmc;
pub mod detops;
pub mod eigen;
pub mod error;
pub mod factorize;
pub mod fci;
pub mod hamio;
pub mod pipeline;
pub mod qsci;
pub mod sampler;

pub use error::{Error, Result};
pub use hamio::{ActiveSpaceSpec, Hamiltonian};

/// 1 kcal/mol in Hartree, rounded the way it is usually quoted.
pub const CHEMICAL_ACCURACY: f64 = 1.6e-3;
