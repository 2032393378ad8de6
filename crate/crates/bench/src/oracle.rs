//! Independent dense reference solver.
//!
//! For positive definite `H` the dual
//!
//! ```text
//! min_u  1/2 (g + A^T u)^T H^{-1} (g + A^T u) - b^T u + sum_i support(u_i | C_i),  |u_i| <= 1
//! ```
//!
//! is solved by FISTA with adaptive restart on explicit dense matrices
//! (Cholesky of `H`, `M = A H^{-1} A^T`). The proximal step of
//! `t (support_C + indicator of the unit ball)` is
//! `Proj_ball(v - t P_C(v / t))`. The primal point is `x = -H^{-1}(g + A^T u)`
//! and the returned pair certifies itself through the duality gap.
//!
//! When every piece is a scalar `{0}` or `R_-` the dual is a box-constrained
//! QP, and the FISTA point is refined by an exact active-set solve.
//!
//! Singular `H` (the SVM encoding) is handled separately by
//! [`subgradient_solve`], whose answer is not certified.

use exactpen::{ConvexSet, PenaltyProblem};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    /// Stacked dual multipliers.
    pub u: Vec<f64>,
    pub j_star: f64,
    pub dual: f64,
    pub gap: f64,
    pub iters: usize,
    /// `gap <= tol` was reached.
    pub certified: bool,
}

/// Target duality gap of [`oracle_solve`].
pub const ORACLE_GAP_TOL: f64 = 1e-8;

struct Dense {
    chol: Cholesky<f64, nalgebra::Dyn>,
    a: DMatrix<f64>,
    g: DVector<f64>,
    b: DVector<f64>,
}

impl Dense {
    fn new(p: &PenaltyProblem) -> Result<Self> {
        let n = p.n();
        let h = DMatrix::from_row_slice(n, n, &p.h().to_dense());
        let chol = Cholesky::new(h).ok_or_else(|| BenchError::Oracle("H is not positive definite".into()))?;
        let a = match p.a() {
            Some(a) => DMatrix::from_row_slice(p.m(), n, &a.to_dense()),
            None => DMatrix::zeros(0, n),
        };
        Ok(Self {
            chol,
            a,
            g: DVector::from_column_slice(p.g()),
            b: DVector::from_column_slice(p.b()),
        })
    }

    fn primal(&self, u: &DVector<f64>) -> DVector<f64> {
        -self.chol.solve(&(&self.g + self.a.transpose() * u))
    }

    fn dual_value(&self, p: &PenaltyProblem, u: &DVector<f64>) -> f64 {
        let v = &self.g + self.a.transpose() * u;
        let hv = self.chol.solve(&v);
        let support: f64 = (0..p.num_pieces())
            .map(|i| p.set(i).support_unchecked(&u.as_slice()[p.range(i)]))
            .sum();
        0.5 * v.dot(&hv) - self.b.dot(u) + support
    }
}

fn prox(p: &PenaltyProblem, v: &DVector<f64>, t: f64) -> DVector<f64> {
    let mut out = v.clone();
    for i in 0..p.num_pieces() {
        let rg = p.range(i);
        let vi = &v.as_slice()[rg.clone()];
        let scaled: Vec<f64> = vi.iter().map(|x| x / t).collect();
        let proj = project(p.set(i), &scaled);
        let mut w: Vec<f64> = vi.iter().zip(&proj).map(|(x, c)| x - t * c).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1.0 {
            w.iter_mut().for_each(|x| *x /= norm);
        }
        out.as_mut_slice()[rg].copy_from_slice(&w);
    }
    out
}

fn project(set: &ConvexSet, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    set.project_into(y, &mut out);
    out
}

/// Runs at most `iters` FISTA iterations, stopping once the gap is below
/// [`ORACLE_GAP_TOL`].
pub fn oracle_solve(p: &PenaltyProblem, iters: usize) -> Result<OracleSolution> {
    let d = Dense::new(p)?;
    let m = p.m();
    let h_inv_at = d.chol.solve(&d.a.transpose());
    let mm = &d.a * &h_inv_at;
    let c = &d.a * d.chol.solve(&d.g) - &d.b;
    let lip = if m == 0 {
        1.0
    } else {
        SymmetricEigen::new(mm.clone()).eigenvalues.max().max(1e-300)
    };
    let step = 1.0 / lip;

    let finish = |u: DVector<f64>, iters: usize| -> Result<OracleSolution> {
        let x = d.primal(&u);
        let j = p.eval_j0(x.as_slice())?;
        let dual = d.dual_value(p, &u);
        let gap = j + dual;
        Ok(OracleSolution {
            x: x.as_slice().to_vec(),
            u: u.as_slice().to_vec(),
            j_star: j,
            dual,
            gap,
            iters,
            certified: gap <= ORACLE_GAP_TOL,
        })
    };

    let mut u = DVector::zeros(m);
    let mut y = u.clone();
    let mut t = 1.0f64;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 0..iters {
        let grad = &mm * &y + &c;
        let u_next = prox(p, &(&y - step * grad), step);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let restart = (&y - &u_next).dot(&(&u_next - &u)) > 0.0;
        if restart {
            t = 1.0;
            y = u_next.clone();
        } else {
            y = &u_next + ((t - 1.0) / t_next) * (&u_next - &u);
            t = t_next;
        }
        u = u_next;
        if k % 20 == 19 || k + 1 == iters {
            let x = d.primal(&u);
            let gap = p.eval_j0(x.as_slice())? + d.dual_value(p, &u);
            if best.as_ref().is_none_or(|(bg, _)| gap < *bg) {
                best = Some((gap, u.clone()));
            }
            if gap <= ORACLE_GAP_TOL {
                let u = polish(p, &d, &mm, &c, &u).unwrap_or(u);
                return finish(u, k + 1);
            }
        }
    }
    let u = best.map_or(u, |(_, bu)| bu);
    let u = polish(p, &d, &mm, &c, &u).unwrap_or(u);
    finish(u, iters)
}

/// Bounds of the dual variable when piece `i` is scalar `{0}` (`[-1, 1]`) or
/// scalar `R_-` (`[0, 1]`); `None` for any other piece.
fn scalar_bounds(p: &PenaltyProblem) -> Option<Vec<(f64, f64)>> {
    p.sets()
        .iter()
        .map(|s| match s {
            ConvexSet::Zero { dim: 1 } => Some((-1.0, 1.0)),
            ConvexSet::NonPos { dim: 1 } => Some((0.0, 1.0)),
            _ => None,
        })
        .collect()
}

/// Exact active-set refinement for duals that are box-constrained QPs.
/// Entries within `1e-6` of a bound are fixed there, the rest solve the
/// reduced linear system; the candidate is kept only if its gap is smaller.
fn polish(
    p: &PenaltyProblem,
    d: &Dense,
    mm: &DMatrix<f64>,
    c: &DVector<f64>,
    u: &DVector<f64>,
) -> Option<DVector<f64>> {
    let bounds = scalar_bounds(p)?;
    let grad = mm * u + c;
    let mut cand = u.clone();
    let mut free = Vec::new();
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if (u[i] - lo).abs() < 1e-6 && grad[i] >= 0.0 {
            cand[i] = lo;
        } else if (u[i] - hi).abs() < 1e-6 && grad[i] <= 0.0 {
            cand[i] = hi;
        } else {
            free.push(i);
        }
    }
    if !free.is_empty() {
        let k = free.len();
        let mut sub = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for (a, &i) in free.iter().enumerate() {
            let mut r = -c[i];
            for j in 0..cand.len() {
                if !free.contains(&j) {
                    r -= mm[(i, j)] * cand[j];
                }
            }
            rhs[a] = r;
            for (b, &j) in free.iter().enumerate() {
                sub[(a, b)] = mm[(i, j)];
            }
        }
        let sol = sub.lu().solve(&rhs)?;
        for (a, &i) in free.iter().enumerate() {
            cand[i] = sol[a].clamp(bounds[i].0, bounds[i].1);
        }
    }
    let gap = |v: &DVector<f64>| {
        p.eval_j0(d.primal(v).as_slice())
            .map(|j| j + d.dual_value(p, v))
            .unwrap_or(f64::INFINITY)
    };
    (gap(&cand) < gap(u)).then_some(cand)
}

/// Diminishing-step subgradient method on `J0` for singular `H`. Returns the
/// best point found; `gap` is `NaN` and `certified` is false.
pub fn subgradient_solve(p: &PenaltyProblem, x0: &[f64], iters: usize, step0: f64) -> Result<OracleSolution> {
    let mut x = x0.to_vec();
    let mut best_x = x.clone();
    let mut best = p.eval_j0(&x)?;
    for k in 0..iters {
        let aff = p.affine(&x);
        let mut sub = vec![0.0; p.m()];
        for i in 0..p.num_pieces() {
            let rg = p.range(i);
            let s = p.set(i).distance_subgradient(&aff[rg.clone()])?;
            sub[rg].copy_from_slice(&s);
        }
        let mut grad = p.apply_at(&sub);
        let hx = p.apply_h(&x);
        for ((gr, gi), hi) in grad.iter_mut().zip(p.g()).zip(&hx) {
            *gr += gi + hi;
        }
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let alpha = step0 / ((k + 1) as f64).sqrt() / norm;
        x.iter_mut().zip(&grad).for_each(|(xi, gi)| *xi -= alpha * gi);
        let j = p.eval_j0(&x)?;
        if j < best {
            best = j;
            best_x.copy_from_slice(&x);
        }
    }
    Ok(OracleSolution {
        x: best_x,
        u: vec![f64::NAN; p.m()],
        j_star: best,
        dual: f64::NAN,
        gap: f64::NAN,
        iters,
        certified: false,
    })
}
