//! Numerical workbench for the sign-changing Liouville equation
//! `∂_{αt} ln u = f(α) u` on `α ∈ (0, 1)` with `u(α, 0) = u₀(α)` and periodic
//! boundary values `u(0, t) = u(1, t) = g(t)`, and for its generalization
//! `∂_{αt} ln u = f(α) F(u)`.
//!
//! The closed-form route goes through two primitives, `ψ₀(α) = ∫₀^α f u₀` and
//! `G(t) = ∫₀^t g`, giving `u = u₀ g / (1 - ½ ψ₀ G)²`:
//!
//! ```
//! use liouville::{catalog, problem, solver};
//!
//! let spec = catalog::example2(513);
//! let psi0 = problem::build_psi0(&spec).unwrap();
//! let big_g = problem::build_g(&spec, 2.0).unwrap();
//! let u = solver::evaluate_u(&psi0, &big_g, &spec, 0.5, 1.0).unwrap();
//! assert!((u - 3.0 / 0.5625).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod function;
pub mod generalized;
pub mod grid;
pub mod io;
pub mod problem;
pub mod quadrature;
pub mod regularity;
pub mod solver;
pub mod special;
pub mod verification;

pub use error::{Error, Result};
pub use function::FunctionDescriptor;
pub use grid::GridFunction;
pub use problem::{BoundaryIntegral, ProblemSpec, Psi0Profile};
