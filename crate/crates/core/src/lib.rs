//! Separability probing for finite-dimensional bipartite quantum states.
//!
//! A mixed state `ϱ` on `C^m ⊗ C^n` is separable exactly when one of its
//! convex decompositions consists of product vectors only. Every
//! decomposition of length `N` is reached from a fixed eigenensemble through
//! an `N × r` matrix with orthonormal columns (a point of the Stiefel
//! manifold), and the sum of generalized concurrences squared over the
//! decomposition is a non-negative "energy" that vanishes precisely on
//! product decompositions. This crate evaluates that energy, samples it
//! with Monte Carlo, and implements the reduced one-particle partition
//! function for two-qubit Werner and Bell-diagonal states.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the command
//! line live in the `sepstat` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod concurrence;
pub mod costfn;
pub mod ensembles;
mod error;
pub mod fit;
pub mod linalg;
pub mod optimize;
pub mod quad;
pub mod rng;
pub mod state;
pub mod statmech;
pub mod werner;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
pub use state::{DensityMatrix, EigenEnsemble, PureState, Subsystem};
