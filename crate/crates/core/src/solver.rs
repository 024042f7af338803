//! Sparse direct solves with LU factorization and partial pivoting.

use std::time::Instant;

use faer::prelude::*;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::Mat;
use serde::Serialize;
use thiserror::Error;

use crate::assembly::BlockSystem;
use crate::sparse::CscMatrix;

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("right-hand side has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is structurally singular (no pivot in column {column})")]
    StructurallySingular { column: usize },

    #[error("matrix is numerically singular ({detail})")]
    NumericallySingular { detail: String },

    #[error("relative residual {residual:e} exceeds {tolerance:e}")]
    Inaccurate { residual: f64, tolerance: f64 },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SolveReport {
    /// `||A x - b|| / max(||b||, eps)`.
    pub relative_residual: f64,
    pub dimension: usize,
    pub nnz: usize,
    pub refinement_steps: usize,
    pub wall_ms: f64,
}

/// LU factorization of a fixed matrix, reusable across right-hand sides.
pub struct Factorization {
    matrix: CscMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    factor_ms: f64,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("dimension", &self.matrix.n_rows)
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Factorization {
    pub fn new(a: &CscMatrix) -> Result<Self, SolverError> {
        if a.n_rows != a.n_cols {
            return Err(SolverError::NotSquare {
                rows: a.n_rows,
                cols: a.n_cols,
            });
        }
        faer::set_global_parallelism(faer::Par::Seq);
        let start = Instant::now();
        let n = a.n_rows;
        let symbolic =
            SymbolicSparseColMat::new_checked(n, n, a.col_ptr.clone(), None, a.row_idx.clone());
        let mat = SparseColMat::<usize, f64>::new(symbolic, a.values.clone());
        let lu = mat.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => {
                SolverError::StructurallySingular { column: index }
            }
            other => SolverError::Factorization(format!("{other:?}")),
        })?;
        Ok(Factorization {
            matrix: a.clone(),
            lu,
            factor_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.n_rows
    }

    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves `A x = b`, with up to three steps of iterative refinement when
    /// the first residual misses the tolerance.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveReport), SolverError> {
        let n = self.dimension();
        if b.len() != n {
            return Err(SolverError::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        let start = Instant::now();
        let scale = norm(b).max(f64::MIN_POSITIVE);
        let mut x = self.apply(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NumericallySingular {
                detail: "non-finite solution entries".into(),
            });
        }
        let residual = |x: &[f64]| {
            let ax = self.matrix.mul_vec(x);
            b.iter()
                .zip(&ax)
                .map(|(bi, ai)| bi - ai)
                .collect::<Vec<f64>>()
        };
        let mut r = residual(&x);
        let mut rel = norm(&r) / scale;
        let mut steps = 0;
        while rel > RESIDUAL_TOLERANCE && steps < 3 {
            let dx = self.apply(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
            r = residual(&x);
            rel = norm(&r) / scale;
            steps += 1;
        }
        if !rel.is_finite() {
            return Err(SolverError::NumericallySingular {
                detail: "non-finite residual".into(),
            });
        }
        if rel > RESIDUAL_TOLERANCE {
            return Err(SolverError::Inaccurate {
                residual: rel,
                tolerance: RESIDUAL_TOLERANCE,
            });
        }
        let report = SolveReport {
            relative_residual: rel,
            dimension: n,
            nnz: self.matrix.nnz(),
            refinement_steps: steps,
            wall_ms: self.factor_ms + start.elapsed().as_secs_f64() * 1e3,
        };
        Ok((x, report))
    }
}

/// Solves a reduced step system.
pub fn solve_system(system: &BlockSystem) -> Result<(Vec<f64>, SolveReport), SolverError> {
    solve(&system.matrix, &system.rhs)
}

/// Factors and solves in one call.
pub fn solve(a: &CscMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport), SolverError> {
    Factorization::new(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        let (x, report) = solve(&CscMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
        assert_eq!(report.relative_residual, 0.0);
    }

    #[test]
    fn small_saddle_point() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0)]);
        let (x, _) = solve(&a, &[3.0, 1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn structurally_singular_is_reported() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0)]);
        assert!(matches!(
            Factorization::new(&a),
            Err(SolverError::StructurallySingular { .. })
        ));
    }

    #[test]
    fn numerically_singular_is_reported() {
        let a =
            CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        let r = Factorization::new(&a).and_then(|f| f.solve(&[1.0, 0.0]));
        assert!(r.is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        let a = CscMatrix::from_triplets(2, 3, &[(0, 0, 1.0)]);
        assert!(matches!(
            Factorization::new(&a),
            Err(SolverError::NotSquare { .. })
        ));
        let f = Factorization::new(&CscMatrix::identity(2)).unwrap();
        assert!(matches!(
            f.solve(&[1.0]),
            Err(SolverError::Dimension { .. })
        ));
    }
}
