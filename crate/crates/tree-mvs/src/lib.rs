//! Solver and analysis toolkit for Dirichlet problems of coupled mean-value
//! systems on m-regular trees.
//!
//! A system couples `N` scalar fields on the tree. At an interior node `x` of
//! level `k`, component `i` satisfies
//!
//! ```text
//! u_i(x) = (1 - P_i(k)) * [ (1 - b_i(k)) * F_i(u_i over successors of x)
//!                           + b_i(k) * u_i(predecessor of x) ]
//!          + sum over j != i of p_ij(k) * u_j(x)
//! ```
//!
//! where `P_i(k) = sum_j p_ij(k)`, the `p_ij` are level-indexed coupling
//! schedules, `b_i` is the component's upward (predecessor) weight schedule,
//! and `F_i` is an averaging operator. The root uses `b_i(0) = 0`. Dirichlet
//! data is imposed on the leaves of a depth-`L` truncation through functions
//! on `[0, 1]` evaluated at the canonical boundary coordinate `psi`.
//!
//! Modules:
//! - [`tree`]: node addressing, dotted notation, `psi` and its exact intervals
//! - [`averaging`]: the operator family and sample-based axiom checks
//! - [`coefficients`]: level-indexed schedules and series classification
//! - [`solver`]: direct and fixed-point solvers, brackets, studies, residuals
//! - [`game`]: the two-board game view, episode simulation, value estimates
//! - [`config`]: the JSON document format tying the above together

pub mod averaging;
pub mod coefficients;
pub mod config;
mod de;
pub mod error;
pub mod game;
pub mod solver;
pub mod tree;

pub use error::{Error, Result};
