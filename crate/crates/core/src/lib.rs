//! Spectral-sum covariance models: links, affine parameter subspaces,
//! Bregman estimators, mixed parametrizations and asymptotics.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod breg;
pub mod error;
pub mod mixed;
pub mod model;
pub mod solve;
pub mod specfun;
pub mod stats;
pub mod sym;

pub use breg::{bregman, bregman_dual, kkt_residual, objective, objective_gradient, KktReport};
pub use error::{Error, Result};
pub use mixed::{corr_from_offdiag, solve_mixed, two_step_fit, EntryPartition, TwoStepResult};
pub use model::{AffineSubspace, GraphSpec, Hyperplane};
pub use solve::{FitResult, SolveOptions, Solver, Status};
pub use specfun::{LinkFunction, LinkKind};
pub use sym::SymMatrix;
