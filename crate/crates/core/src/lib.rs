//! Jet-bundle geometry of first-order ODE and PDE systems.
//!
//! A distinguished tensor field `X^i_α(t, x)` on a product of semi-Riemann
//! manifolds `(T, h) × (M, g)` defines the first-order system
//! `x^i_α = X^i_α(t, x)`. This crate evaluates everything built from it:
//! potential energy and causal type, second-order prolongations,
//! first-order Lagrangians and Hamiltonians, the Sasaki-like metric on
//! `J¹(T, M)`, Liouville and (poly)symplectic forms, and the Hamilton
//! systems they induce. Every identity is checked numerically with exact
//! forward-mode derivatives and fixed-step RK4 integration.

#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod export;
pub mod expr;
pub mod geometry;
pub mod field;
pub mod integrate;
pub mod jet;
pub mod jetspace;
pub mod linalg;
pub mod problem;
pub mod prolong;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse, EvalPoint, Expr, Var};
pub use field::{CausalClass, DistTensorField, WorldForceSpec};
pub use geometry::{Domain, MetricSpec, Metrics};
pub use jet::{BasePoint, JetPoint};
pub use jetspace::{FormVariant, FrameBasis, HamiltonSystem, RelativeForm};
pub use problem::{Problem, ProblemFile};
pub use report::{Check, Report};
pub use prolong::{FirstOrderODESystem, SecondOrderSystem, SystemTag};
pub use variational::{HamiltonianForm, LagrangianSpec, LagrangianVariant};
pub use verify::Suite;
