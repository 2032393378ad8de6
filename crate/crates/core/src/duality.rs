//! Fenchel-Rockafellar dual of the penalty subproblem (for positive definite `H`):
//!
//! ```text
//! min_u  1/2 (g + A^T u)^T H^{-1} (g + A^T u) - b^T u + sum_i support(u_i | C_i)
//! s.t.   |u_i|_2 <= 1
//! ```
//!
//! With this sign convention `J0(x) + D(u) >= 0` for every `x` and every
//! feasible `u`, and the sum is the duality gap. `H^{-1}` is applied through a
//! CG solve; a failed solve yields [`Error::DualUnavailable`].

use crate::cg::{cg_solve, CgConfig, CgStatus};
use crate::error::{check_len, Error, Result};
use crate::problem::PenaltyProblem;
use crate::vector::{dot, norm2};

/// Per-piece dual multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub blocks: Vec<Vec<f64>>,
}

impl DualPoint {
    pub fn zeros(p: &PenaltyProblem) -> Self {
        Self {
            blocks: (0..p.num_pieces()).map(|i| vec![0.0; p.range(i).len()]).collect(),
        }
    }

    pub fn from_stacked(p: &PenaltyProblem, u: &[f64]) -> Result<Self> {
        check_len("stacked dual", p.m(), u.len())?;
        Ok(Self {
            blocks: (0..p.num_pieces()).map(|i| u[p.range(i)].to_vec()).collect(),
        })
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.blocks.concat()
    }

    fn check(&self, p: &PenaltyProblem) -> Result<()> {
        check_len("dual pieces", p.num_pieces(), self.blocks.len())?;
        for (i, blk) in self.blocks.iter().enumerate() {
            check_len("dual block", p.range(i).len(), blk.len())?;
        }
        Ok(())
    }

    /// `|u_i|_2 <= 1 + tol` and `support(u_i | C_i) < inf` for every piece.
    pub fn is_feasible(&self, p: &PenaltyProblem, tol: f64) -> bool {
        self.check(p).is_ok()
            && self
                .blocks
                .iter()
                .zip(p.sets())
                .all(|(u, c)| norm2(u) <= 1.0 + tol && c.in_support_domain(u))
    }

    /// Largest block norm (the dual of the sum-of-block-norms norm).
    pub fn max_block_norm(&self) -> f64 {
        self.blocks.iter().map(|b| norm2(b)).fold(0.0, f64::max)
    }
}

/// Evaluates the dual objective, reusing the previous `H^{-1} v` as a CG warm start.
#[derive(Debug, Clone)]
pub struct DualEvaluator {
    cg: CgConfig,
    warm: Vec<f64>,
}

impl DualEvaluator {
    pub fn new(p: &PenaltyProblem, cg: CgConfig) -> Self {
        Self {
            cg,
            warm: vec![0.0; p.n()],
        }
    }

    /// Dual objective at a stacked `u`. Returns `+inf` when a support term is
    /// infinite; the norm constraint is not checked here.
    pub fn evaluate(&mut self, p: &PenaltyProblem, u: &[f64]) -> Result<f64> {
        check_len("stacked dual", p.m(), u.len())?;
        let mut support = 0.0;
        for (i, c) in p.sets().iter().enumerate() {
            support += c.support_unchecked(&u[p.range(i)]);
        }
        if support == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        let mut v = p.apply_at(u);
        for (vi, gi) in v.iter_mut().zip(p.g()) {
            *vi += gi;
        }
        let out = cg_solve(p.h(), &v, &self.warm, &self.cg)?;
        match out.status {
            CgStatus::Converged => {}
            CgStatus::Breakdown if norm2(&v) == 0.0 => {}
            other => {
                return Err(Error::DualUnavailable(format!(
                    "CG on H ended with {other:?}, residual {:.3e}",
                    out.residual_norm
                )))
            }
        }
        self.warm = out.x;
        Ok(0.5 * dot(&v, &self.warm) - dot(p.b(), u) + support)
    }
}

/// Default CG settings for `H^{-1}` applications in dual evaluations.
pub fn dual_cg_config() -> CgConfig {
    CgConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        max_iters: None,
    }
}

pub fn dual_objective(p: &PenaltyProblem, u: &DualPoint, cg: &CgConfig) -> Result<f64> {
    u.check(p)?;
    DualEvaluator::new(p, *cg).evaluate(p, &u.stacked())
}

/// `J0(x) + D(u)`.
pub fn duality_gap(p: &PenaltyProblem, x: &[f64], u: &DualPoint, cg: &CgConfig) -> Result<f64> {
    Ok(p.eval_j0(x)? + dual_objective(p, u, cg)?)
}
