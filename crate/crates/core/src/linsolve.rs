//! Sparse symmetric positive definite solves (supernodal/simplicial Cholesky
//! via faer) with a diagonal-shift fallback for nearly singular systems.

use crate::{Result, SimError};
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use nalgebra::DVector;

/// Factorized SPD operator.
pub struct SpdSolver {
    n: usize,
    llt: Llt<usize, f64>,
    /// Diagonal shift that was required (0 when the plain factorization
    /// succeeded).
    pub shift: f64,
}

impl SpdSolver {
    /// Factors the matrix given by (possibly duplicated) symmetric triplets.
    /// On a failed Cholesky, retries with `tau * max_diag` added to the
    /// diagonal, growing `tau` tenfold from 1e-8.
    pub fn factor(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let base: Vec<Triplet<usize, usize, f64>> =
            triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &base)
            .map_err(|e| SimError::LinearSolve(format!("triplet assembly: {e:?}")))?;
        let symbolic = SymbolicLlt::try_new(mat.symbolic(), Side::Lower)
            .map_err(|e| SimError::LinearSolve(format!("symbolic cholesky: {e:?}")))?;

        if let Ok(llt) = Llt::try_new_with_symbolic(symbolic.clone(), mat.as_ref(), Side::Lower) {
            return Ok(Self { n, llt, shift: 0.0 });
        }

        let mut max_diag = 0.0f64;
        for &(r, c, v) in triplets {
            if r == c {
                max_diag = max_diag.max(v.abs());
            }
        }
        if max_diag == 0.0 {
            max_diag = 1.0;
        }
        let mut tau = 1e-8;
        while tau <= 1e8 {
            let mut shifted = base.clone();
            for i in 0..n {
                shifted.push(Triplet::new(i, i, tau * max_diag));
            }
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &shifted)
                .map_err(|e| SimError::LinearSolve(format!("triplet assembly: {e:?}")))?;
            if let Ok(llt) = Llt::try_new_with_symbolic(symbolic.clone(), mat.as_ref(), Side::Lower)
            {
                return Ok(Self { n, llt, shift: tau * max_diag });
            }
            tau *= 10.0;
        }
        Err(SimError::LinearSolve("cholesky failed even with diagonal shift".into()))
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        use faer::linalg::solvers::Solve;
        let b = faer::Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.llt.solve(&b);
        DVector::from_fn(self.n, |i, _| x[(i, 0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_small_spd_system() {
        // [[4,1,0],[1,3,1],[0,1,2]]
        let t = vec![
            (0, 0, 4.0),
            (1, 1, 3.0),
            (2, 2, 2.0),
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
        ];
        let s = SpdSolver::factor(3, &t).unwrap();
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = s.solve(&b);
        // Verify A x = b.
        let ax = [
            4.0 * x[0] + x[1],
            x[0] + 3.0 * x[1] + x[2],
            x[1] + 2.0 * x[2],
        ];
        for k in 0..3 {
            assert_relative_eq!(ax[k], b[k], max_relative = 1e-12);
        }
        assert_eq!(s.shift, 0.0);
    }

    #[test]
    fn duplicate_triplets_accumulate() {
        let t = vec![(0, 0, 1.0), (0, 0, 1.0)];
        let s = SpdSolver::factor(1, &t).unwrap();
        let x = s.solve(&DVector::from_vec(vec![2.0]));
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn shift_fallback_on_singular() {
        // Rank-deficient PSD matrix.
        let t = vec![(0, 0, 1.0), (1, 1, 0.0)];
        let s = SpdSolver::factor(2, &t).unwrap();
        assert!(s.shift > 0.0);
        let x = s.solve(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(x[0].is_finite());
    }
}
