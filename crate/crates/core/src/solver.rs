//! Symmetric positive definite linear solves.
//!
//! The default path is a sparse Cholesky factorization (faer). A Jacobi
//! preconditioned conjugate gradient path is kept for systems too large to
//! factor. Both check the relative residual against [`RESIDUAL_TOLERANCE`].

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Col, Side};

use crate::error::{Error, Result};
use crate::sparse::{norm2, SparseMatrix};

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LinearSolver {
    #[default]
    Direct,
    ConjugateGradient,
}

impl LinearSolver {
    pub fn name(self) -> &'static str {
        match self {
            LinearSolver::Direct => "direct",
            LinearSolver::ConjugateGradient => "cg",
        }
    }
}

enum Backend {
    Cholesky(Llt<usize, f64>),
    Cg { inv_diag: Vec<f64> },
}

/// A matrix prepared for repeated solves.
pub struct Factorization {
    matrix: SparseMatrix,
    backend: Backend,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.backend {
            Backend::Cholesky(_) => "cholesky",
            Backend::Cg { .. } => "cg",
        };
        f.debug_struct("Factorization").field("dim", &self.matrix.nrows()).field("kind", &kind).finish()
    }
}

impl Factorization {
    pub fn new(matrix: SparseMatrix, kind: LinearSolver) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "cannot factor a {}x{} matrix",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let backend = match kind {
            LinearSolver::Direct => {
                let llt = matrix.to_faer().sp_cholesky(Side::Lower).map_err(|e| Error::Solver {
                    reason: format!("Cholesky factorization failed: {e:?}"),
                    history: Vec::new(),
                })?;
                Backend::Cholesky(llt)
            }
            LinearSolver::ConjugateGradient => {
                let diag = matrix.diagonal();
                if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
                    return Err(Error::Solver {
                        reason: format!("non-positive diagonal entry {} at row {i}", diag[i]),
                        history: Vec::new(),
                    });
                }
                Backend::Cg { inv_diag: diag.iter().map(|d| 1.0 / d).collect() }
            }
        };
        Ok(Factorization { matrix, backend })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.matrix.mul_vec(x);
        let r: Vec<f64> = ax.iter().zip(b).map(|(a, b)| b - a).collect();
        let bn = norm2(b);
        if bn == 0.0 {
            norm2(&r)
        } else {
            norm2(&r) / bn
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "rhs of length {} for a {}-dimensional system",
                b.len(),
                self.dim()
            )));
        }
        if b.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; b.len()]);
        }
        match &self.backend {
            Backend::Cholesky(llt) => {
                let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
                let mut x: Vec<f64> = llt.solve(&rhs).iter().copied().collect();
                let mut res = self.relative_residual(&x, b);
                let mut history = vec![res];
                // one step of iterative refinement if the factorization lost digits
                if res > RESIDUAL_TOLERANCE {
                    let ax = self.matrix.mul_vec(&x);
                    let r = Col::<f64>::from_fn(b.len(), |i| b[i] - ax[i]);
                    let dx = llt.solve(&r);
                    x.iter_mut().zip(dx.iter()).for_each(|(xi, d)| *xi += d);
                    res = self.relative_residual(&x, b);
                    history.push(res);
                }
                if res > RESIDUAL_TOLERANCE || !res.is_finite() {
                    return Err(Error::Solver {
                        reason: "direct solve did not reach the residual tolerance".into(),
                        history,
                    });
                }
                Ok(x)
            }
            Backend::Cg { inv_diag } => self.solve_cg(inv_diag, b),
        }
    }

    fn solve_cg(&self, inv_diag: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let bn = norm2(b);
        let max_iter = 20 * n + 100;
        // aim below the contract so the final true residual clears it
        let target = 0.1 * RESIDUAL_TOLERANCE * bn;
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        let mut history = Vec::new();
        for _ in 0..max_iter {
            let rn = norm2(&r);
            history.push(rn / bn);
            if rn <= target {
                break;
            }
            self.matrix.mul_vec_into(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                return Err(Error::Solver { reason: "matrix is not positive definite".into(), history });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let res = self.relative_residual(&x, b);
        if res > RESIDUAL_TOLERANCE {
            history.push(res);
            return Err(Error::Solver { reason: "conjugate gradient did not converge".into(), history });
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn laplacian_1d(n: usize) -> SparseMatrix {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 2.0);
            if i + 1 < n {
                b.push(i, i + 1, -1.0);
                b.push(i + 1, i, -1.0);
            }
        }
        b.build(true)
    }

    #[test]
    fn direct_and_cg_agree() {
        let a = laplacian_1d(50);
        let rhs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let x1 = Factorization::new(a.clone(), LinearSolver::Direct).unwrap().solve(&rhs).unwrap();
        let x2 = Factorization::new(a, LinearSolver::ConjugateGradient).unwrap().solve(&rhs).unwrap();
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-8 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let f = Factorization::new(laplacian_1d(5), LinearSolver::Direct).unwrap();
        assert_eq!(f.solve(&[0.0; 5]).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, -1.0]], true);
        assert!(matches!(Factorization::new(a.clone(), LinearSolver::Direct), Err(Error::Solver { .. })));
        assert!(matches!(
            Factorization::new(a, LinearSolver::ConjugateGradient),
            Err(Error::Solver { .. })
        ));
    }

    #[test]
    fn rhs_length_checked() {
        let f = Factorization::new(laplacian_1d(4), LinearSolver::Direct).unwrap();
        assert!(matches!(f.solve(&[1.0; 3]), Err(Error::DimensionMismatch(_))));
    }
}
