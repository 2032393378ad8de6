//! Matrix-free linear operators.
//!
//! Every solver touches `A`, `A_i` and `H` only through [`LinearMap::apply_into`]
//! and [`LinearMap::apply_transpose_into`]. Composite kernels ([`LinearMap::normal`],
//! [`LinearMap::sum`]) hold their children behind `Arc`, so building the
//! per-iteration subproblem operator never copies matrix data.

use std::sync::Arc;

use crate::error::{check_len, invalid, Result};
use crate::vector::dot;

#[derive(Debug, Clone, PartialEq)]
pub enum LinearMap {
    /// Row-major `rows x cols` matrix.
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    Diagonal(Vec<f64>),
    /// Coordinate-format matrix; duplicate entries are summed.
    Sparse {
        rows: usize,
        cols: usize,
        triplets: Vec<(usize, usize, f64)>,
    },
    /// `diag(d) + F diag(s) F^T` with `F` stored row-major as `n x k`.
    LowRankPlusDiag {
        diag: Vec<f64>,
        factor: Vec<f64>,
        rank: usize,
        scale: Vec<f64>,
    },
    /// Vertical concatenation of blocks sharing a column count.
    Stack {
        cols: usize,
        offsets: Vec<usize>,
        blocks: Vec<LinearMap>,
    },
    Scaled {
        alpha: f64,
        inner: Box<LinearMap>,
    },
    /// `M^T diag(w) M`, evaluated lazily.
    Normal {
        inner: Arc<LinearMap>,
        weights: Vec<f64>,
    },
    /// Sum of square operators of equal size.
    Sum(Vec<Arc<LinearMap>>),
}

impl LinearMap {
    pub fn identity(n: usize) -> Self {
        LinearMap::Diagonal(vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Self {
        LinearMap::Diagonal(vec![0.0; n])
    }

    pub fn diagonal(d: Vec<f64>) -> Self {
        LinearMap::Diagonal(d)
    }

    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("dense matrix data", rows * cols, data.len())?;
        Ok(LinearMap::Dense { rows, cols, data })
    }

    /// Builds a dense map from row vectors; every row must have `cols` entries.
    pub fn from_rows(cols: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_len("dense matrix row", cols, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(LinearMap::Dense {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn sparse(rows: usize, cols: usize, triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, _) in &triplets {
            if i >= rows || j >= cols {
                return Err(invalid(
                    "sparse triplet",
                    format!("entry ({i}, {j}) outside {rows}x{cols}"),
                ));
            }
        }
        Ok(LinearMap::Sparse { rows, cols, triplets })
    }

    pub fn low_rank_plus_diag(diag: Vec<f64>, factor: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        let rank = scale.len();
        check_len("low-rank factor", n * rank, factor.len())?;
        Ok(LinearMap::LowRankPlusDiag {
            diag,
            factor,
            rank,
            scale,
        })
    }

    pub fn stack(blocks: Vec<LinearMap>) -> Result<Self> {
        let cols = match blocks.first() {
            Some(b) => b.cols(),
            None => return Err(invalid("stack", "needs at least one block")),
        };
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for b in &blocks {
            check_len("stacked block columns", cols, b.cols())?;
            offsets.push(offsets.last().unwrap() + b.rows());
        }
        Ok(LinearMap::Stack { cols, offsets, blocks })
    }

    pub fn scaled(alpha: f64, inner: LinearMap) -> Self {
        LinearMap::Scaled {
            alpha,
            inner: Box::new(inner),
        }
    }

    /// Lazily represents `m^T diag(weights) m`; the product is never formed.
    pub fn normal(inner: Arc<LinearMap>, weights: Vec<f64>) -> Result<Self> {
        check_len("normal map weights", inner.rows(), weights.len())?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(invalid("weights", format!("must be finite and nonnegative, got {w}")));
        }
        Ok(LinearMap::Normal { inner, weights })
    }

    pub fn sum(terms: Vec<Arc<LinearMap>>) -> Result<Self> {
        let n = match terms.first() {
            Some(t) => t.cols(),
            None => return Err(invalid("sum", "needs at least one term")),
        };
        for t in &terms {
            check_len("sum term rows", n, t.rows())?;
            check_len("sum term cols", n, t.cols())?;
        }
        Ok(LinearMap::Sum(terms))
    }

    pub fn rows(&self) -> usize {
        match self {
            LinearMap::Dense { rows, .. } | LinearMap::Sparse { rows, .. } => *rows,
            LinearMap::Diagonal(d) => d.len(),
            LinearMap::LowRankPlusDiag { diag, .. } => diag.len(),
            LinearMap::Stack { offsets, .. } => *offsets.last().unwrap(),
            LinearMap::Scaled { inner, .. } => inner.rows(),
            LinearMap::Normal { inner, .. } => inner.cols(),
            LinearMap::Sum(terms) => terms[0].rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LinearMap::Dense { cols, .. } | LinearMap::Sparse { cols, .. } | LinearMap::Stack { cols, .. } => *cols,
            LinearMap::Diagonal(d) => d.len(),
            LinearMap::LowRankPlusDiag { diag, .. } => diag.len(),
            LinearMap::Scaled { inner, .. } => inner.cols(),
            LinearMap::Normal { inner, .. } => inner.cols(),
            LinearMap::Sum(terms) => terms[0].cols(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("apply input", self.cols(), x.len())?;
        let mut out = vec![0.0; self.rows()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("apply_transpose input", self.rows(), y.len())?;
        let mut out = vec![0.0; self.cols()];
        self.apply_transpose_into(y, &mut out);
        Ok(out)
    }

    /// `out = self * x`. Lengths are the caller's responsibility.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols());
        debug_assert_eq!(out.len(), self.rows());
        match self {
            LinearMap::Dense { cols, data, .. } => {
                for (o, row) in out.iter_mut().zip(data.chunks_exact((*cols).max(1))) {
                    *o = dot(row, x);
                }
                if *cols == 0 {
                    out.fill(0.0);
                }
            }
            LinearMap::Diagonal(d) => {
                for ((o, di), xi) in out.iter_mut().zip(d).zip(x) {
                    *o = di * xi;
                }
            }
            LinearMap::Sparse { triplets, .. } => {
                out.fill(0.0);
                for &(i, j, v) in triplets {
                    out[i] += v * x[j];
                }
            }
            LinearMap::LowRankPlusDiag {
                diag,
                factor,
                rank,
                scale,
            } => {
                let k = *rank;
                let mut t = vec![0.0; k];
                if k > 0 {
                    for (row, xi) in factor.chunks_exact(k).zip(x) {
                        for (tj, fj) in t.iter_mut().zip(row) {
                            *tj += fj * xi;
                        }
                    }
                }
                for (tj, sj) in t.iter_mut().zip(scale) {
                    *tj *= sj;
                }
                for (i, o) in out.iter_mut().enumerate() {
                    let low = if k > 0 {
                        dot(&factor[i * k..(i + 1) * k], &t)
                    } else {
                        0.0
                    };
                    *o = diag[i] * x[i] + low;
                }
            }
            LinearMap::Stack { offsets, blocks, .. } => {
                for (b, w) in blocks.iter().zip(offsets.windows(2)) {
                    b.apply_into(x, &mut out[w[0]..w[1]]);
                }
            }
            LinearMap::Scaled { alpha, inner } => {
                inner.apply_into(x, out);
                for o in out.iter_mut() {
                    *o *= alpha;
                }
            }
            LinearMap::Normal { inner, weights } => {
                let mut t = vec![0.0; inner.rows()];
                inner.apply_into(x, &mut t);
                for (ti, wi) in t.iter_mut().zip(weights) {
                    *ti *= wi;
                }
                inner.apply_transpose_into(&t, out);
            }
            LinearMap::Sum(terms) => {
                terms[0].apply_into(x, out);
                let mut t = vec![0.0; out.len()];
                for term in &terms[1..] {
                    term.apply_into(x, &mut t);
                    for (o, ti) in out.iter_mut().zip(&t) {
                        *o += ti;
                    }
                }
            }
        }
    }

    /// `out = self^T * y`.
    pub fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows());
        debug_assert_eq!(out.len(), self.cols());
        match self {
            LinearMap::Dense { cols, data, .. } => {
                out.fill(0.0);
                if *cols == 0 {
                    return;
                }
                for (row, yi) in data.chunks_exact(*cols).zip(y) {
                    for (o, a) in out.iter_mut().zip(row) {
                        *o += a * yi;
                    }
                }
            }
            LinearMap::Sparse { triplets, .. } => {
                out.fill(0.0);
                for &(i, j, v) in triplets {
                    out[j] += v * y[i];
                }
            }
            // Symmetric kernels.
            LinearMap::Diagonal(_) | LinearMap::LowRankPlusDiag { .. } | LinearMap::Normal { .. } => {
                self.apply_into(y, out)
            }
            LinearMap::Stack { offsets, blocks, .. } => {
                out.fill(0.0);
                let mut t = vec![0.0; out.len()];
                for (b, w) in blocks.iter().zip(offsets.windows(2)) {
                    b.apply_transpose_into(&y[w[0]..w[1]], &mut t);
                    for (o, ti) in out.iter_mut().zip(&t) {
                        *o += ti;
                    }
                }
            }
            LinearMap::Scaled { alpha, inner } => {
                inner.apply_transpose_into(y, out);
                for o in out.iter_mut() {
                    *o *= alpha;
                }
            }
            LinearMap::Sum(terms) => {
                terms[0].apply_transpose_into(y, out);
                let mut t = vec![0.0; out.len()];
                for term in &terms[1..] {
                    term.apply_transpose_into(y, &mut t);
                    for (o, ti) in out.iter_mut().zip(&t) {
                        *o += ti;
                    }
                }
            }
        }
    }

    /// Row range of block `i` in a [`LinearMap::Stack`].
    pub fn block_range(&self, i: usize) -> Option<std::ops::Range<usize>> {
        match self {
            LinearMap::Stack { offsets, .. } if i + 1 < offsets.len() => Some(offsets[i]..offsets[i + 1]),
            _ => None,
        }
    }

    pub fn block(&self, i: usize) -> Option<&LinearMap> {
        match self {
            LinearMap::Stack { blocks, .. } => blocks.get(i),
            _ => None,
        }
    }

    /// Assembles the operator column by column (row-major result). Meant for
    /// small diagnostics and reference computations.
    pub fn to_dense(&self) -> Vec<f64> {
        let (m, n) = (self.rows(), self.cols());
        let mut data = vec![0.0; m * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            for i in 0..m {
                data[i * n + j] = col[i];
            }
            e[j] = 0.0;
        }
        data
    }
}

/// Builds `m^T diag(weights) m` as a lazy operator.
pub fn normal_map(m: Arc<LinearMap>, weights: Vec<f64>) -> Result<LinearMap> {
    LinearMap::normal(m, weights)
}
