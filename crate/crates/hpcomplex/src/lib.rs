//! Verification toolkit for Hilbert-Poincare complexes at desk scale.
//!
//! The coefficient algebras are finite-dimensional: square complex matrices
//! and square matrices of trigonometric polynomials on the circle (stored as
//! banded Fourier coefficients). On top of those this crate builds finitely
//! generated free Hilbert modules, HP complexes with their duality axioms,
//! signature unitaries and their K1 winding numbers, the operator paths of
//! the signature-invariance theorem, groupoid convolution algebras with
//! Morita bimodules, and polynomial smoothing / pull-back machinery. Each
//! piece is backed by mechanical validators that re-check the defining
//! identities fiberwise on a sample grid or coefficientwise on bands.
//!
//! Models are generated by [`models`]: suspension foliations of permutations
//! discretized as cycle graphs (loop-algebra coefficients) and random
//! finite-dimensional complexes built valid by construction.

pub mod algebra;
pub mod error;
pub mod fiber;
pub mod groupoid;
pub mod homotopy;
pub mod hp;
pub mod loops;
pub mod models;
pub mod module;
pub mod perm;
pub mod report;
pub mod smoothing;
pub mod tol;
pub mod winding;

pub use algebra::{Algebra, AlgebraElement, AlgebraKind};
pub use error::HpError;
pub use loops::LoopScalar;
pub use module::{FreeModule, ModuleMap, ModuleVector};
pub use tol::{SampleGrid, Tolerances};

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;
