//! Localised Davies generators for finite-dimensional quantum systems.
//!
//! The crate builds Lindblad generators whose stationary state is the Gibbs
//! state `e^{-P}` of a Hermitian matrix `P`, from three ingredients:
//!
//! * a Bohr decomposition of each jump operator ([`bohr`]);
//! * a Gaussian filter and a weight function ([`weights`]);
//! * dense superoperator assembly ([`generators`]).
//!
//! States are evolved by dense matrix exponentials ([`evolution`]) and a
//! small zoo of benchmark systems is provided in [`models`].

pub mod bohr;
pub mod error;
pub mod evolution;
pub mod generators;
pub mod models;
pub mod oft;
pub mod operator;
pub mod weights;

pub use error::{Error, Result};
pub use operator::{CMatrix, CVector, EigenSystem};
