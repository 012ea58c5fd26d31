//! Numerical scattering theory for one-dimensional matrix charge-transfer
//! models.
//!
//! The crate computes, for non-self-adjoint 2×2 matrix Schrödinger
//! operators H = −σ₃(∂² − ω) + V with even exponentially decaying
//! potentials:
//!
//! - generalized eigenfunctions (Jost solutions) and the transmission /
//!   reflection coefficients s(k), r(k) ([`jost`]);
//! - the discrete spectrum, its Jordan structure at 0, and the essential /
//!   discrete spectral projections ([`spectrum`]);
//! - distorted Fourier transforms built from the Jost kernels and their
//!   inversion identities ([`dft`]);
//! - Hardy-space projections and exponential leakage diagnostics
//!   ([`hardy`]);
//! - the multi-potential free-evolution approximant S(t)φ with its profile
//!   recursion ([`freeflow`]);
//! - full time evolution of the charge-transfer model by Strang splitting,
//!   scattering solutions, discrete-mode solutions, and driven remainders
//!   ([`evolve`]);
//! - the asymptotic-completeness decomposition of arbitrary data into a
//!   scattering profile plus moving bound states, and the projection P_c
//!   ([`decompose`]);
//! - decay-fit and estimate-verification harnesses ([`verify`]) and binary
//!   field / table I/O ([`io`]).

pub mod decompose;
pub mod dft;
pub mod error;
pub mod evolve;
pub mod fftutil;
pub mod grid;
pub mod field;
pub mod freeflow;
pub mod hardy;
pub mod io;
pub mod jost;
pub mod spectrum;
pub mod verify;
pub mod track;
pub mod window;

pub use error::{Error, Result};
