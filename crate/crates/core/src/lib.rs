//! Exact-diagonalization toolkit for Stark many-body localization in two
//! superconducting-circuit models: a Bose-Hubbard chain in a curved linear
//! potential and an all-to-all connected XX spin model.
//!
//! The numerical core is generic over the real scalar ([`Real`], `f32` or
//! `f64`); the aliases at the crate root fix it to `f64`, which is what the
//! command-line front end uses.
//!
//! ```
//! use std::sync::Arc;
//! use stark_mbl::{basis::enumerate_boson_sector, hamiltonian::*, spectral::full_spectrum};
//!
//! let basis = Arc::new(enumerate_boson_sector(6, 3, 3).unwrap());
//! let h = build_bose_hubbard(basis, 1.0, 4.0, PotentialSpec::new(1.0, 2.0, 6)).unwrap();
//! let sol = full_spectrum(&h, false).unwrap();
//! assert_eq!(sol.energies().len(), 56);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod observables;
pub mod rng;
pub mod scalar;
pub mod scaling;
pub mod spectral;

pub use basis::{FockState, SectorBasis};
pub use error::{Error, Result};
pub use scalar::{Amplitude, Real};

pub type Hamiltonian = hamiltonian::SparseHamiltonian<f64>;
pub type Eigen = spectral::EigenSolution<f64>;
pub type Dos = spectral::DosProfile<f64>;
pub type Series = dynamics::TimeSeries<f64>;
pub type Collapse = scaling::CollapseResult<f64>;
pub type Complex = num_complex::Complex<f64>;
