//! Matrix-free solvers for convex exact-penalty subproblems
//!
//! ```text
//! min_x  g.x + 1/2 x.Hx + sum_i dist2(A_i x + b_i | C_i)
//! ```
//!
//! with `H` symmetric positive semidefinite and each `C_i` a simple closed
//! convex set. [`irwa`] implements iterative re-weighting, [`adal`] an
//! alternating direction augmented Lagrangian method. Both use only products
//! with `H`, `A` and `A^T`.

pub mod adal;
pub mod cg;
pub mod duality;
mod error;
pub mod irwa;
pub mod linop;
pub mod problem;
pub mod report;
pub mod sets;
pub mod vector;

pub use adal::{adal_solve, Adal, AdalConfig, AdalStop};
pub use cg::{cg_solve, CgConfig, CgOutcome, CgStatus};
pub use duality::{dual_objective, duality_gap, DualEvaluator, DualPoint};
pub use error::{Error, Result};
pub use irwa::{irwa_solve, InitialEps, Irwa, IrwaConfig, IrwaStop, IrwaVariant};
pub use linop::LinearMap;
pub use problem::{ConvexPiece, PenaltyProblem, RelaxationVector};
pub use report::{SolveReport, Termination, TraceRow};
pub use sets::ConvexSet;
