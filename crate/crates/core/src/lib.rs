//! Exact spectrum of the quantum Rabi model with two arbitrary qubits.
//!
//! The Hamiltonian (in units of the cavity frequency) is
//!
//! ```text
//! H = d†d + (g1 σ1x + g2 σ2x)(d† + d) + Δ1 σ1z + Δ2 σ2z
//! ```
//!
//! Regular eigenvalues are located as zeros of transcendental G-functions
//! assembled from expansions in displaced (extended coherent state) Fock
//! bases:
//!
//! - [`gfunction::g_det`]: a 2×2 determinant for `g1 != g2`,
//! - [`gfunction::g_equal`]: a scalar series for `g1 == g2`,
//! - [`gfunction::cf_residual`]: the continued-fraction residual of the
//!   three-term recurrence available at equal couplings.
//!
//! [`spectrum`] turns these into certified level lists (stable/unstable zero
//! classification, exceptional, dark and spin-singlet levels) and [`oracle`]
//! provides an independent exact-diagonalization reference.
//!
//! The crate is `no_std` (it needs `alloc`).

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod error;
pub mod gfunction;
pub mod model;
pub mod oracle;
pub mod real;
pub mod recurrence;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{DerivedCouplings, ModelParams, Parity, Regime};
pub use real::{Mp, Precision, Real};
pub use recurrence::TruncationConfig;
