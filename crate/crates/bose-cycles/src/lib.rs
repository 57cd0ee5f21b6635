//! Permutation-cycle statistics for Bose gases on a periodic box.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: log-domain weights, theta sums, polylogarithms, system parameters.
//! - [`cycle_recursion`]: the canonical recursion `Q_N = (1/N) Σ a_n Q_{N-n}` and its
//!   ideal, mean-field and cycle-decoupled instantiations.
//! - [`bec_observables`]: cycle densities, condensate density, fugacity, limit shapes.
//! - [`merger_graphs`]: inter-cycle coupling graphs and their integer edge-vector solutions.
//! - [`lemma_g`]: Fourier representation of the interaction kernel at `N ≤ 3`, with a
//!   discrete-time transfer-matrix oracle.
//! - [`potentials_bounds`]: Gaussian pair potentials, free-energy bounds, coupling rates.
//! - [`cli`]: the command-line front end used by the `bose-cycles` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bec_observables;
pub mod cli;
pub mod cycle_recursion;
mod error;
pub mod lemma_g;
pub mod merger_graphs;
pub mod numerics;
pub mod potentials_bounds;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
pub use numerics::{LogWeight, SystemParams};
