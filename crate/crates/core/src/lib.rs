//! Lattice points in thin ellipsoidal shells on the 3-torus.
//!
//! The crate enumerates `Z³ ∩ {|√Q(x) − λ| < δ}`, covers the shell by caps of
//! radius `√(λδ)`, classifies the lattice generated by each cap, and measures
//! the counting, additive-energy, `L^p` and exponential-sum quantities that
//! govern spectral projectors on the torus.

pub mod caps;
pub mod energy;
pub mod error;
pub mod expsum;
pub mod linalg;
pub mod norms;
pub mod oracles;
pub mod shell;

pub use error::{Error, Result};
pub use linalg::{IntMat3, IntVec3, QuadraticForm};
pub use shell::{enumerate_shell, ShellPointSet};
