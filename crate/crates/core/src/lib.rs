//! Numerical machinery for fully nonlinear conformal curvature equations
//! f(λ(g̃⁻¹A^{τ,α}_g̃)) = ψ on flat periodic grids (tori), where A^{τ,α} is a
//! trace-modified Schouten tensor, f = σ_k^{1/k} on a Gårding cone Γ_k, and
//! g̃ = e^{2u}g is sought conformal to a background g.
//!
//! The crate provides periodic grids and fields, coordinate curvature by
//! finite differences, the cone calculus (σ_k, cone constants κ and ϑ with
//! certified lower bounds, parameter gates), the reduced conformal operator
//! and its linearization, an admissible-seed construction that turns weak
//! admissibility into strict admissibility via a Morse function and
//! point-moving diffeomorphisms, and a cone-guarded Newton–Krylov continuity
//! solver.

pub mod background;
pub mod cone;
pub mod curvature;
pub mod eigen;
pub mod error;
pub mod expr;
pub mod field;
pub mod gmres;
pub mod grid;
pub mod metric;
pub mod nfld;
pub mod operator;
pub mod seed;
pub mod solver;
pub mod stencil;
pub mod verify;

pub use cone::{ConeSpec, EquationParams};
pub use error::{ConeViolation, Error, Result};
pub use expr::Expr;
pub use field::{CovectorField, ScalarField, SymTensorField};
pub use grid::Grid;
pub use metric::MetricField;
pub use operator::{Evaluation, OperatorContext};
pub use solver::{continuity_solve, SolveReport, SolverConfig};
pub use stencil::StencilOrder;
