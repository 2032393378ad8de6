//! The penalty subproblem
//!
//! ```text
//! min_x  J0(x) = g.x + 1/2 x.Hx + sum_i dist2(A_i x + b_i | C_i)
//! ```
//!
//! together with its epsilon-smoothing `J(x, eps)`, the re-weighting weights
//! and the projection residuals. `H` must be symmetric positive semidefinite;
//! this is checked by sampling in [`PenaltyProblem::check_symmetric_psd`] but
//! not enforced at construction.

use std::ops::Range;
use std::sync::Arc;

use crate::error::{check_len, invalid, Error, Result};
use crate::linop::LinearMap;
use crate::sets::ConvexSet;
use crate::vector::{dot, norm2};

/// One block `(A_i, b_i, C_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPiece {
    pub a: LinearMap,
    pub b: Vec<f64>,
    pub set: ConvexSet,
}

impl ConvexPiece {
    pub fn new(a: LinearMap, b: Vec<f64>, set: ConvexSet) -> Result<Self> {
        check_len("piece b", a.rows(), b.len())?;
        check_len("piece set dimension", a.rows(), set.dim())?;
        Ok(Self { a, b, set })
    }
}

#[derive(Debug, Clone)]
pub struct PenaltyProblem {
    n: usize,
    g: Vec<f64>,
    h: Arc<LinearMap>,
    /// All `A_i` stacked; `None` when there are no pieces.
    a: Option<Arc<LinearMap>>,
    b: Vec<f64>,
    sets: Vec<ConvexSet>,
    offsets: Vec<usize>,
}

impl PenaltyProblem {
    pub fn new(g: Vec<f64>, h: LinearMap, pieces: Vec<ConvexPiece>) -> Result<Self> {
        let n = g.len();
        check_len("H rows", n, h.rows())?;
        check_len("H cols", n, h.cols())?;
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("g"));
        }
        let mut blocks = Vec::with_capacity(pieces.len());
        let mut b = Vec::new();
        let mut sets = Vec::with_capacity(pieces.len());
        let mut offsets = vec![0];
        for piece in pieces {
            check_len("piece A cols", n, piece.a.cols())?;
            if !piece.b.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("b"));
            }
            offsets.push(offsets.last().unwrap() + piece.b.len());
            b.extend_from_slice(&piece.b);
            sets.push(piece.set);
            blocks.push(piece.a);
        }
        let a = if blocks.is_empty() {
            None
        } else {
            Some(Arc::new(LinearMap::stack(blocks)?))
        };
        Ok(Self {
            n,
            g,
            h: Arc::new(h),
            a,
            b,
            sets,
            offsets,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of pieces `l`.
    pub fn num_pieces(&self) -> usize {
        self.sets.len()
    }

    /// Total stacked row count `m`.
    pub fn m(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn h(&self) -> &Arc<LinearMap> {
        &self.h
    }

    pub fn a(&self) -> Option<&Arc<LinearMap>> {
        self.a.as_ref()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn sets(&self) -> &[ConvexSet] {
        &self.sets
    }

    pub fn set(&self, i: usize) -> &ConvexSet {
        &self.sets[i]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn piece_map(&self, i: usize) -> &LinearMap {
        self.a.as_ref().and_then(|a| a.block(i)).expect("piece index in range")
    }

    /// Rebuilds the pieces; used when writing problems back out.
    pub fn pieces(&self) -> Vec<ConvexPiece> {
        (0..self.num_pieces())
            .map(|i| ConvexPiece {
                a: self.piece_map(i).clone(),
                b: self.b[self.range(i)].to_vec(),
                set: self.sets[i].clone(),
            })
            .collect()
    }

    /// Stacked `A x`.
    pub fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        if let Some(a) = &self.a {
            a.apply_into(x, &mut out);
        }
        out
    }

    /// `A^T y` for a stacked `y`.
    pub fn apply_at(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        if let Some(a) = &self.a {
            a.apply_transpose_into(y, &mut out);
        }
        out
    }

    pub fn apply_h(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.h.apply_into(x, &mut out);
        out
    }

    /// Stacked `A x + b`.
    pub fn affine(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.apply_a(x);
        for (yi, bi) in y.iter_mut().zip(&self.b) {
            *yi += bi;
        }
        y
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        check_len("x", self.n, x.len())
    }

    /// `phi(x) = g.x + 1/2 x.Hx`
    pub fn eval_phi(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        Ok(dot(&self.g, x) + 0.5 * dot(x, &self.apply_h(x)))
    }

    /// Per-piece distances `dist2(A_i x + b_i | C_i)` from a stacked affine image.
    pub fn distances_from_affine(&self, y: &[f64]) -> Vec<f64> {
        (0..self.num_pieces())
            .map(|i| self.sets[i].distance_unchecked(&y[self.range(i)]))
            .collect()
    }

    pub fn distances(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        Ok(self.distances_from_affine(&self.affine(x)))
    }

    pub fn eval_j0(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_phi(x)? + self.distances(x)?.iter().sum::<f64>())
    }

    /// `J(x, eps) = phi(x) + sum_i sqrt(dist_i^2 + eps_i^2)`. Zero entries in
    /// `eps` are accepted here so that `J(x, 0) = J0(x)`.
    pub fn eval_j(&self, x: &[f64], eps: &[f64]) -> Result<f64> {
        check_len("eps", self.num_pieces(), eps.len())?;
        let d = self.distances(x)?;
        Ok(self.eval_phi(x)? + smoothed_sum(&d, eps))
    }

    /// `w_i = (dist_i^2 + eps_i^2)^(-1/2)`.
    pub fn weights(&self, x: &[f64], eps: &RelaxationVector) -> Result<Vec<f64>> {
        check_len("eps", self.num_pieces(), eps.len())?;
        Ok(weights_from_distances(&self.distances(x)?, eps.as_slice()))
    }

    /// Stacked residuals `r_i = (I - P_{C_i})(A_i x + b_i)`.
    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        Ok(self.residuals_from_affine(&self.affine(x)))
    }

    pub fn residuals_from_affine(&self, y: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; y.len()];
        for i in 0..self.num_pieces() {
            let rg = self.range(i);
            self.sets[i].residual_into(&y[rg.clone()], &mut r[rg]);
        }
        r
    }

    /// Stacked projections `P_{C_i}(y_i)`.
    pub fn project_blocks(&self, y: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; y.len()];
        for i in 0..self.num_pieces() {
            let rg = self.range(i);
            self.sets[i].project_into(&y[rg.clone()], &mut p[rg]);
        }
        p
    }

    /// Per-piece Euclidean norms of a stacked vector.
    pub fn block_norms(&self, v: &[f64]) -> Vec<f64> {
        (0..self.num_pieces()).map(|i| norm2(&v[self.range(i)])).collect()
    }

    /// Samples `count` pseudo-random probe vectors (deterministic) and checks
    /// `<Hx, y> = <x, Hy>` within `1e-10` relative and `x.Hx >= -1e-10 |x|^2`.
    pub fn check_symmetric_psd(&self, count: usize) -> Result<()> {
        let mut state = 0x9E37_79B9_7F4A_7C15_u64;
        let mut next = || {
            // splitmix64
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..count {
            let x: Vec<f64> = (0..self.n).map(|_| next()).collect();
            let y: Vec<f64> = (0..self.n).map(|_| next()).collect();
            let hx = self.apply_h(&x);
            let hy = self.apply_h(&y);
            let (l, r) = (dot(&hx, &y), dot(&x, &hy));
            let scale = norm2(&hx) * norm2(&y) + norm2(&x) * norm2(&hy) + 1e-300;
            if (l - r).abs() > 1e-10 * scale {
                return Err(invalid("H", "not symmetric"));
            }
            if dot(&x, &hx) < -1e-10 * dot(&x, &x) * (1.0 + norm2(&hx)) {
                return Err(invalid("H", "not positive semidefinite"));
            }
        }
        Ok(())
    }
}

pub(crate) fn smoothed_sum(dist: &[f64], eps: &[f64]) -> f64 {
    dist.iter().zip(eps).map(|(d, e)| d.hypot(*e)).sum()
}

pub(crate) fn weights_from_distances(dist: &[f64], eps: &[f64]) -> Vec<f64> {
    dist.iter().zip(eps).map(|(d, e)| 1.0 / d.hypot(*e)).collect()
}

/// Strictly positive per-piece smoothing parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationVector(Vec<f64>);

impl RelaxationVector {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if let Some(e) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(invalid("eps", format!("entries must be finite and > 0, got {e}")));
        }
        Ok(Self(eps))
    }

    pub fn uniform(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub(crate) fn scaled(&self, eta: f64) -> Self {
        Self(self.0.iter().map(|e| e * eta).collect())
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}
