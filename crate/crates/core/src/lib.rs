//! Signal/noise analysis of bosonic qubits in the Heisenberg picture.
//!
//! A superposition of displaced Gaussian states (a cat or GKP state) carries a
//! multi-valued "classical" displacement plus quantum noise. This crate splits
//! quadrature operators into signal and fluctuation parts, measures the
//! fluctuation variance from domain-restricted moments of the wavefunction,
//! and propagates both symbolically through lossy continuous-variable circuits
//! with error-correcting (binned) feedforward.
//!
//! Conventions: the mode operator is `a = (q + i p) / 2`, so the vacuum has
//! unit variance in both quadratures. The momentum representation is fixed by
//! the kernel `exp(-i q p / 2) / sqrt(4 pi)`, the unique choice under which
//! the vacuum is symmetric and ideal GKP momentum peaks sit at integer
//! multiples of `sqrt(2 pi)`.
//!
//! Module map:
//! - [`states`]: exact quadrature wavefunctions and densities.
//! - [`domains`]: domain partitions and per-domain signal/noise statistics.
//! - [`engine`]: symbolic Heisenberg propagation of operator expressions.
//! - [`ladder`]: discrete lattice-shift error ladders and logical classification.
//! - [`circuits`]: the ideal and loss-tolerant CZ teleportation circuits.
//! - [`oracle`]: independent convolution oracle for Gaussian channels.
//! - [`monte_carlo`]: semiclassical trajectory sampler validating the engine.

// `!(x > 0.0)` style comparisons are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod domains;
pub mod engine;
mod error;
pub mod ladder;
pub mod monte_carlo;
pub mod oracle;
mod quad;
pub mod states;

pub use error::{CoreError, Result};
