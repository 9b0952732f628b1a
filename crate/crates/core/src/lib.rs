//! Polaron-frame simulation of a two-level system ultrastrongly coupled to a
//! lossy cavity.
//!
//! The cavity and its Caldeira–Leggett bath are diagonalized exactly and merged
//! with the qubit's Ohmic bath into a single spin-boson bath. A Silbey–Harris
//! polaron transformation then yields a number-conserving Hamiltonian whose
//! single-excitation sector is solved exactly.
//!
//! Modules, bottom up:
//! - [`spectral`]: parameters and continuum spectral densities
//! - [`quad`]: adaptive Gauss–Kronrod quadrature and principal values
//! - [`bath`]: discretization, normal-mode diagonalization, bath merging
//! - [`polaron`]: renormalized splitting and the single-excitation Hamiltonian
//! - [`dynamics`]: exact and stepped propagation, analytic amplitudes
//! - [`spectrum`]: self-energy kernels and emission spectra
//! - [`chain`]: Lanczos star-to-chain mapping
//! - [`experiments`]: composed runs used by the command line tool

pub mod bath;
pub mod chain;
pub mod csv;
pub mod dynamics;
mod error;
pub mod experiments;
pub mod par;
pub mod polaron;
pub mod quad;
pub mod spectral;
pub mod spectrum;

pub use error::{Error, Result};
pub use par::Execution;
pub use spectral::{ModelParams, SpectralDensity, SpectralFunction, SpectralKind};
