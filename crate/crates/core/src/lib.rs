//! Numerical laboratory for nonlinear gauge transformations and the
//! gauge-closed ten-parameter family of nonlinear Schrödinger equations on
//! periodic 1D/2D grids.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: periodic grids, fields, spectral derivatives and quadrature.
//! * [`functionals`]: `ρ`, `J`, modulus/phase and the quotients `R₁ … R₅`.
//! * [`gauge`]: the transformations `N_(γ,Λ,θ)` and their group law.
//! * [`dynamics`]: the right-hand side of the family, RK4 time stepping and
//!   an exact split-step oracle for the linear equation.
//! * [`equivalence`]: how coefficients transform under gauge maps, and the
//!   commuting-diagram residual that certifies it numerically.
//! * [`ensembles`]: mixed states, density matrices, decomposition
//!   dependence of nonlinear evolution, and product-state separability.

pub mod dynamics;
pub mod ensembles;
pub mod equivalence;
pub mod error;
pub mod functionals;
pub mod gauge;
pub mod grid;
pub mod states;

pub use error::{Error, Result};
