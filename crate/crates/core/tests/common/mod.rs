#![allow(dead_code)]

use exactpen::{ConvexPiece, ConvexSet, LinearMap, PenaltyProblem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn vec_of(r: &mut ChaCha20Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| r.random_range(-2.0..2.0)).collect()
}

pub fn dense_of(m: &LinearMap) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), &m.to_dense())
}

/// A random operator of the given kind with `rows x cols` shape (square
/// kinds ignore `rows`).
pub fn random_map(r: &mut ChaCha20Rng, kind: usize, rows: usize, cols: usize) -> LinearMap {
    match kind {
        0 => LinearMap::dense(rows, cols, vec_of(r, rows * cols)).unwrap(),
        1 => LinearMap::diagonal(vec_of(r, cols)),
        2 => {
            let nnz = if rows == 0 {
                0
            } else {
                r.random_range(0..=rows * cols + 3)
            };
            let trip = (0..nnz)
                .map(|_| {
                    (
                        r.random_range(0..rows),
                        r.random_range(0..cols),
                        r.random_range(-2.0..2.0),
                    )
                })
                .collect();
            LinearMap::sparse(rows, cols, trip).unwrap()
        }
        3 => {
            let k = r.random_range(1..=3);
            LinearMap::low_rank_plus_diag(vec_of(r, cols), vec_of(r, cols * k), vec_of(r, k)).unwrap()
        }
        4 => {
            let split = r.random_range(0..=rows);
            LinearMap::stack(vec![
                LinearMap::dense(split, cols, vec_of(r, split * cols)).unwrap(),
                random_map(r, 2, rows - split, cols),
            ])
            .unwrap()
        }
        5 => LinearMap::scaled(r.random_range(-3.0..3.0), random_map(r, 0, rows, cols)),
        6 => {
            let inner = random_map(r, 0, rows, cols);
            let w: Vec<f64> = (0..rows).map(|_| r.random_range(0.0..3.0)).collect();
            LinearMap::normal(inner.into(), w).unwrap()
        }
        _ => {
            let a = random_map(r, 1, cols, cols);
            let b = random_map(r, 6, rows, cols);
            LinearMap::sum(vec![a.into(), b.into()]).unwrap()
        }
    }
}

/// `H = 0.5 I + L L^T / n`.
pub fn random_pd(r: &mut ChaCha20Rng, n: usize) -> LinearMap {
    let l = DMatrix::from_row_slice(n, n, &vec_of(r, n * n));
    let h = DMatrix::identity(n, n) * 0.5 + &l * l.transpose() / n as f64;
    LinearMap::dense(n, n, h.transpose().as_slice().to_vec()).unwrap()
}

pub fn random_set(r: &mut ChaCha20Rng, kind: usize, dim: usize) -> ConvexSet {
    match kind {
        0 => ConvexSet::zero(dim),
        1 => ConvexSet::nonpos(dim),
        2 => {
            let lo = vec_of(r, dim);
            let hi = lo.iter().map(|l| l + r.random_range(0.0..2.0)).collect();
            ConvexSet::boxed(lo, hi).unwrap()
        }
        3 => ConvexSet::ball(vec_of(r, dim), r.random_range(0.1..2.0)).unwrap(),
        _ => ConvexSet::point(vec_of(r, dim)).unwrap(),
    }
}

/// Problem with PD `H` and `pieces` random pieces of dimension 1 to 3.
pub fn random_problem(seed: u64, n: usize, pieces: usize) -> PenaltyProblem {
    let mut r = rng(seed);
    let h = random_pd(&mut r, n);
    let g = vec_of(&mut r, n);
    let ps = (0..pieces)
        .map(|_| {
            let dim = r.random_range(1..=3);
            let a = LinearMap::dense(dim, n, vec_of(&mut r, dim * n)).unwrap();
            let kind = r.random_range(0..5);
            let set = random_set(&mut r, kind, dim);
            ConvexPiece::new(a, vec_of(&mut r, dim), set).unwrap()
        })
        .collect();
    PenaltyProblem::new(g, h, ps).unwrap()
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
