//! Sparse principal component analysis by alternating maximization.
//!
//! Eight formulations are covered: variance measured by the `L2` or `L1`
//! norm, sparsity induced by `L0` or `L1`, used as a constraint or a
//! penalty. Each run alternates two closed-form steps, `y ← argmax F(x, ·)`
//! and `x ← argmax F(·, y)`, whose cost is one product with `A` and one with
//! `Aᵀ`. Runs from many starting points are advanced together as column
//! blocks; see [`multistart`].

pub mod cli;
pub mod error;
pub mod formulations;
pub mod matrix;
pub mod multistart;
pub mod operators;
pub mod oracle;
pub mod solver;

pub use error::{Result, SpcaError};
pub use formulations::{Formulation, SparsityNorm, Usage, VarianceNorm};
pub use matrix::{DataMatrix, VectorBatch};
pub use multistart::{run_multistart, MultiStartPlan, MultiStartReport, Strategy};
pub use solver::{am_solve, am_solve_batch, RunResult, RunStatus, SolverConfig, StartScheme};
