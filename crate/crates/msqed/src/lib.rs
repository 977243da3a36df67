//! Quasi-classical ground states of non-relativistic QED on a periodic
//! spectral grid.
//!
//! The electron is a two-component spinor `u`, the field a real Coulomb-gauge
//! vector potential `A`, and the object of study is the Maxwell-Schrödinger
//! energy
//!
//! ```text
//! E_V(u, A) = ‖(-i∇ - g χ̂*A) u‖² + ⟨u, (V - g χ̂*σ·B) u⟩ + ‖A‖²_{Ḣ¹} / (32π³)
//! ```
//!
//! with `B = ∇∧A`. [`solver::minimize`] computes minimizers by alternating a
//! block eigen-solve in `u` with the Euler-Lagrange fixed point in `A`;
//! [`fock`] and [`lorentz`] supply independent checks of the coherent-state
//! reduction and of the functional inequalities behind the existence theory.

pub mod energy;
pub mod error;
pub mod fock;
pub mod lorentz;
pub mod model;
pub mod quasiclassical;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
