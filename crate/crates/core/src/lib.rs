//! Numerical laboratory for the Pucci extremal operators.
//!
//! * [`matrix`] and [`operator`]: symmetric eigen-decomposition, `X^+`, `X^-`,
//!   `|X|`, the operators `P^+` / `P^-` and their Bellman minimizer.
//! * [`counterexample`]: the singular radial family `U_theta` with
//!   closed-form Hessians, norms and blow-up ratios.
//! * [`grid`]: periodic and box-sampled fields, discrete Hessians, `L_p`
//!   quasi-norms, mollification and paraboloid touching sets.
//! * [`solver`]: Howard policy iteration for `tau u - P^-(D^2 u) = f` on the
//!   torus, explicit parabolic stepping, and the identity/estimate verifiers.
//! * [`suite`]: the seeded property suite behind `pucci verify`.

pub mod counterexample;
pub mod error;
pub mod grid;
pub mod matrix;
pub mod operator;
pub mod solver;
pub mod special;
pub mod suite;
pub mod sum;
pub mod table;

pub use error::{Error, Result};
pub use matrix::{matrix_parts, spectral_decompose, MatrixParts, Spectrum, SymMatrix};
pub use operator::{
    bellman_minimizer, identity_residual, pucci_minus, pucci_plus, Ellipticity, Extremal,
};
