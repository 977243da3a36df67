//! Alternating minimization of the Maxwell-Schrödinger energy and the
//! experiment drivers built on it.

pub mod eigen;
mod experiments;
mod minimize;

pub use eigen::{lobpcg, EigenPair, LobpcgOptions};
pub use experiments::*;
pub use minimize::*;
