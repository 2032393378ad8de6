//! Warm-started, unpreconditioned conjugate gradient for symmetric positive
//! (semi)definite operators.
//!
//! The solve stops once `|op x - rhs| <= max(rel_tol * |op x_start - rhs|, abs_tol)`.
//! Plain CG does not keep the residual 2-norm monotone, so the best iterate seen
//! so far is tracked and returned; the reported residual history is therefore
//! nonincreasing.

use crate::error::{check_len, invalid, Error, Result};
use crate::linop::LinearMap;
use crate::vector::{axpy, dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` means `10 * n`.
    pub max_iters: Option<usize>,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            rel_tol: 0.1,
            abs_tol: 1e-12,
            max_iters: None,
        }
    }
}

impl CgConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 || self.rel_tol >= 1.0 {
            return Err(invalid(
                "cg.rel_tol",
                format!("must lie in (0, 1), got {}", self.rel_tol),
            ));
        }
        if self.abs_tol.is_nan() || self.abs_tol < 0.0 {
            return Err(invalid("cg.abs_tol", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Converged,
    /// `p.op.p` vanished: the operator is singular along the search direction.
    Breakdown,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iters: usize,
    pub status: CgStatus,
    pub residual_norm: f64,
    /// Best residual norm after each iteration (index 0 is the start).
    pub history: Vec<f64>,
}

impl CgOutcome {
    pub fn converged(&self) -> bool {
        self.status == CgStatus::Converged
    }
}

pub fn cg_solve(op: &LinearMap, rhs: &[f64], x_start: &[f64], cfg: &CgConfig) -> Result<CgOutcome> {
    cfg.validate()?;
    let n = op.cols();
    check_len("cg operator rows", n, op.rows())?;
    check_len("cg rhs", n, rhs.len())?;
    check_len("cg start", n, x_start.len())?;
    let max_iters = cfg.max_iters.unwrap_or(10 * n.max(1));

    let mut x = x_start.to_vec();
    let mut ap = vec![0.0; n];
    op.apply_into(&x, &mut ap);
    let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut rr = dot(&r, &r);
    let r0 = rr.sqrt();
    if !r0.is_finite() {
        return Err(Error::NonFinite("cg initial residual"));
    }
    let target = (cfg.rel_tol * r0).max(cfg.abs_tol);

    let mut best_x = x.clone();
    let mut best = r0;
    let mut history = vec![r0];
    if r0 <= target {
        return Ok(CgOutcome {
            x,
            iters: 0,
            status: CgStatus::Converged,
            residual_norm: r0,
            history,
        });
    }

    let mut p = r.clone();
    let mut iters = 0;
    let status = loop {
        if iters >= max_iters {
            break CgStatus::MaxIters;
        }
        op.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        let pp = dot(&p, &p);
        if !pap.is_finite() {
            return Err(Error::NonFinite("cg curvature"));
        }
        if pap <= cfg.abs_tol * pp {
            break CgStatus::Breakdown;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        iters += 1;
        let rr_new = dot(&r, &r);
        let rn = rr_new.sqrt();
        if !rn.is_finite() {
            return Err(Error::NonFinite("cg residual"));
        }
        if rn < best {
            best = rn;
            best_x.copy_from_slice(&x);
        }
        history.push(best);
        if rn <= target {
            break CgStatus::Converged;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    };

    Ok(CgOutcome {
        x: best_x,
        iters,
        status,
        residual_norm: best,
        history,
    })
}

/// `|op x - rhs|`, recomputed from scratch.
pub fn residual_norm(op: &LinearMap, rhs: &[f64], x: &[f64]) -> f64 {
    let mut ax = vec![0.0; rhs.len()];
    op.apply_into(x, &mut ax);
    norm2(&ax.iter().zip(rhs).map(|(a, b)| a - b).collect::<Vec<_>>())
}
