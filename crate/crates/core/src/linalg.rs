//! Symmetric factorizations of restricted operator systems.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::assembly::OperatorMatrix;
use crate::error::{FracError, Result};

/// Cholesky factor of `diag(m)(A + σI)` restricted to a node subset.
///
/// `diag(m) A` is symmetric with nonpositive off-diagonals, so every
/// principal submatrix with `σ > 0`, or with `σ = 0` and at least one node
/// left out, is positive definite.
pub struct RestrictedSystem {
    indices: Vec<usize>,
    masses: Vec<f64>,
    size: usize,
    shift: f64,
    factor: Cholesky<f64, Dyn>,
}

impl RestrictedSystem {
    pub fn new(op: &OperatorMatrix, indices: Vec<usize>, shift: f64) -> Result<Self> {
        let size = op.size();
        if indices.is_empty() {
            return Err(FracError::Usage("restricted system has no unknowns".into()));
        }
        if indices.iter().any(|&i| i >= size) {
            return Err(FracError::Usage("node index out of range".into()));
        }
        let m = op.grid().masses();
        let k = indices.len();
        let mat = DMatrix::from_fn(k, k, |a, b| {
            let (i, j) = (indices[a], indices[b]);
            let mut v = 0.5 * (m[i] * op.entry(i, j) + m[j] * op.entry(j, i));
            if i == j {
                v += shift * m[i];
            }
            v
        });
        let factor = mat.cholesky().ok_or_else(|| {
            FracError::Factorization(format!(
                "restricted operator on {k} nodes is not positive definite"
            ))
        })?;
        let masses = indices.iter().map(|&i| m[i]).collect();
        Ok(RestrictedSystem {
            indices,
            masses,
            size,
            shift,
            factor,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Solve `(A + σI) u = f` on the retained nodes, `u = 0` elsewhere.
    /// `f` is a full-length nodal vector.
    pub fn solve(&self, f: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_iterator(
            self.indices.len(),
            self.indices
                .iter()
                .zip(&self.masses)
                .map(|(&i, &m)| m * f[i]),
        );
        let x = self.factor.solve(&rhs);
        let mut out = vec![0.0; self.size];
        for (&i, &v) in self.indices.iter().zip(x.iter()) {
            out[i] = v;
        }
        out
    }

    /// `(A + σI) u - f` on the retained rows, zero elsewhere. `A u` is taken
    /// in difference form, which keeps the residual of constants exact.
    pub fn residual(&self, op: &OperatorMatrix, u: &[f64], f: &[f64]) -> Vec<f64> {
        let au = op.apply_values(u);
        let mut res = vec![0.0; self.size];
        for &i in &self.indices {
            res[i] = au[i] + self.shift * u[i] - f[i];
        }
        res
    }

    /// Solve followed by `steps` rounds of iterative refinement.
    pub fn solve_refined(&self, op: &OperatorMatrix, f: &[f64], steps: usize) -> Vec<f64> {
        let mut u = self.solve(f);
        for _ in 0..steps {
            let res = self.residual(op, &u, f);
            let du = self.solve(&res);
            for (a, b) in u.iter_mut().zip(&du) {
                *a -= b;
            }
        }
        u
    }
}
