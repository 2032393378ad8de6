//! JSON problem files.
//!
//! ```json
//! { "n": 2, "g": [0, 0],
//!   "H": {"type": "diag", "diag": [1, 1]},
//!   "pieces": [ {"rows": 1, "set": {"type": "nonpos"},
//!                "A": {"dense": [[1, 1]]}, "b": [-1]} ] }
//! ```
//!
//! Box bounds use `null` for infinite endpoints.

use std::path::Path;

use exactpen::{ConvexPiece, ConvexSet, LinearMap, PenaltyProblem};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub g: Vec<f64>,
    #[serde(rename = "H")]
    pub h: HessianSpec,
    pub pieces: Vec<PieceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

/// Provenance of generated problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub generator: String,
    pub seed: u64,
    /// Coordinates carrying the planted signal (SVM instances).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_support: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HessianSpec {
    Dense {
        rows: Vec<Vec<f64>>,
    },
    Diag {
        diag: Vec<f64>,
    },
    /// `diag(diag) + F diag(scale) F^T` with `factor` holding the rows of `F`.
    LowRankPlusDiag {
        diag: Vec<f64>,
        factor: Vec<Vec<f64>>,
        scale: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    pub rows: usize,
    pub set: SetSpec,
    #[serde(rename = "A")]
    pub a: MatrixSpec,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetSpec {
    Zero,
    Nonpos,
    Box { lo: Vec<Option<f64>>, hi: Vec<Option<f64>> },
    Ball { center: Vec<f64>, radius: f64 },
    Point { c: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixSpec {
    Dense(Vec<Vec<f64>>),
    Sparse {
        cols: usize,
        triplets: Vec<(usize, usize, f64)>,
    },
}

impl HessianSpec {
    pub fn to_map(&self, n: usize) -> Result<LinearMap> {
        Ok(match self {
            HessianSpec::Dense { rows } => {
                if rows.len() != n {
                    return Err(BenchError::Format(format!("H has {} rows, expected {n}", rows.len())));
                }
                LinearMap::from_rows(n, rows)?
            }
            HessianSpec::Diag { diag } => LinearMap::diagonal(diag.clone()),
            HessianSpec::LowRankPlusDiag { diag, factor, scale } => {
                if factor.len() != diag.len() {
                    return Err(BenchError::Format(
                        "low-rank factor must have one row per variable".into(),
                    ));
                }
                let mut flat = Vec::with_capacity(factor.len() * scale.len());
                for row in factor {
                    if row.len() != scale.len() {
                        return Err(BenchError::Format(
                            "low-rank factor row length differs from scale".into(),
                        ));
                    }
                    flat.extend_from_slice(row);
                }
                LinearMap::low_rank_plus_diag(diag.clone(), flat, scale.clone())?
            }
        })
    }
}

impl SetSpec {
    pub fn to_set(&self, rows: usize) -> Result<ConvexSet> {
        let wrong = |what: &str, len: usize| {
            Err(BenchError::Format(format!(
                "{what} has length {len}, piece has {rows} rows"
            )))
        };
        Ok(match self {
            SetSpec::Zero => ConvexSet::zero(rows),
            SetSpec::Nonpos => ConvexSet::nonpos(rows),
            SetSpec::Box { lo, hi } => {
                if lo.len() != rows {
                    return wrong("box lo", lo.len());
                }
                let lo = lo.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
                let hi = hi.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
                ConvexSet::boxed(lo, hi)?
            }
            SetSpec::Ball { center, radius } => {
                if center.len() != rows {
                    return wrong("ball center", center.len());
                }
                ConvexSet::ball(center.clone(), *radius)?
            }
            SetSpec::Point { c } => {
                if c.len() != rows {
                    return wrong("point", c.len());
                }
                ConvexSet::point(c.clone())?
            }
        })
    }

    pub fn from_set(set: &ConvexSet) -> Self {
        let finite = |v: &f64| v.is_finite().then_some(*v);
        match set {
            ConvexSet::Zero { .. } => SetSpec::Zero,
            ConvexSet::NonPos { .. } => SetSpec::Nonpos,
            ConvexSet::Box { lo, hi } => SetSpec::Box {
                lo: lo.iter().map(finite).collect(),
                hi: hi.iter().map(finite).collect(),
            },
            ConvexSet::Ball { center, radius } => SetSpec::Ball {
                center: center.clone(),
                radius: *radius,
            },
            ConvexSet::Point(c) => SetSpec::Point { c: c.clone() },
        }
    }
}

impl MatrixSpec {
    pub fn to_map(&self, rows: usize, n: usize) -> Result<LinearMap> {
        match self {
            MatrixSpec::Dense(r) => {
                if r.len() != rows {
                    return Err(BenchError::Format(format!(
                        "A has {} rows, piece declares {rows}",
                        r.len()
                    )));
                }
                Ok(LinearMap::from_rows(n, r)?)
            }
            MatrixSpec::Sparse { cols, triplets } => {
                if *cols != n {
                    return Err(BenchError::Format(format!("sparse A has {cols} columns, expected {n}")));
                }
                Ok(LinearMap::sparse(rows, n, triplets.clone())?)
            }
        }
    }
}

impl ProblemFile {
    pub fn to_problem(&self) -> Result<PenaltyProblem> {
        if self.g.len() != self.n {
            return Err(BenchError::Format(format!(
                "g has length {}, expected {}",
                self.g.len(),
                self.n
            )));
        }
        let h = self.h.to_map(self.n)?;
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for piece in &self.pieces {
            let a = piece.a.to_map(piece.rows, self.n)?;
            let set = piece.set.to_set(piece.rows)?;
            pieces.push(ConvexPiece::new(a, piece.b.clone(), set)?);
        }
        let p = PenaltyProblem::new(self.g.clone(), h, pieces)?;
        p.check_symmetric_psd(8)?;
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| BenchError::io(path, e))
    }

    pub fn total_rows(&self) -> usize {
        self.pieces.iter().map(|p| p.rows).sum()
    }
}
