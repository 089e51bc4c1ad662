//! High order asymptotic-preserving DG-IMEX solver for two-velocity kinetic
//! equations in the diffusive scaling.
//!
//! The kinetic unknown f(x, v, t) with v in {-1, +1} is split micro-macro as
//! f = rho + eps g with <g> = 0. Space is discretized by discontinuous
//! Galerkin elements of degree k (modal Legendre or nodal Lagrange at Gauss
//! points) with alternating or central interface fluxes; time by globally
//! stiffly accurate IMEX Runge-Kutta pairs of orders 1-3. As eps -> 0 the
//! scheme turns into an explicit local DG method for the limiting heat,
//! porous-media, advection-diffusion, or viscous Burgers equation, which is
//! also available directly as [`ldg::LdgSolver`].
//!
//! The `kinetic-dg` binary drives convergence studies, Riemann profiles and
//! asymptotic-consistency checks from INI-style config files.

pub mod basis;
pub mod config;
pub mod diagnostics;
mod error;
pub mod field;
pub mod harness;
pub mod imex;
pub mod ldg;
pub mod mesh;
pub mod models;
pub mod operators;
pub mod quadrature;

pub use basis::{Basis, BasisKind};
pub use error::{Result, SolverError};
pub use field::{l1_distance, l1_error, l1_norm, project_l2, trace_values, DGField, EdgeRule};
pub use imex::{
    check_gsa, compute_dt, tableau, DoubleButcherTableau, KineticSolver, SchemeConfig,
};
pub use ldg::{LdgSolver, LdgState};
pub use mesh::Mesh1D;
pub use models::{
    initial_state, initial_state_from_exact, initial_state_riemann, CollisionModel, ExactSolution,
    KineticState, Velocity,
};
pub use operators::{BoundaryCondition, FluxChoice};
