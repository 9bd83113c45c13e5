//! Block-averaging renormalization group laboratory for three dimensional
//! lattice QED.
//!
//! Every stage of one renormalization group step is built as explicit dense
//! linear algebra on tiny tori, so that each identity (gauge covariance,
//! minimizer splittings, Gaussian and Grassmann normalizations, partition
//! function preservation) can be checked against an independent oracle.
//!
//! Conventions used throughout:
//!
//! * Lattice sums carry the weight `ε³` per point, `ε` the lattice spacing.
//! * Spinors have two components; `γ_μ` are the Pauli matrices.
//! * A forward hop `x → x + ε e_μ` carries the phase `exp(+iεeA(x, x+εe_μ))`.
//!   Site phases `U(ω) = diag(exp(-ieω(x)))` then intertwine `A` and `A + dω`.
//! * The fermion averaging phase `A(Γ(y,x))` is the line sum of `A` along the
//!   staircase path from the block center `y` out to `x`.

pub mod averaging;
pub mod checks;
pub mod config;
pub mod dirac;
pub mod error;
pub mod expansion;
pub mod fields;
pub mod flow;
pub mod grassmann;
pub mod halfpow;
pub mod lattice;
pub mod linalg;
pub mod minimizers;
pub mod report;
pub mod rgstep;

pub use error::{Error, Result};

/// Complex scalar used for fermion matrices and Grassmann coefficients.
pub type C64 = num_complex::Complex64;

/// Spinor dimension.
pub const SPIN_DIM: usize = 2;
