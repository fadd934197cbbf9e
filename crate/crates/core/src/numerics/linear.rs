use super::matrix::{max_norm, DenseMatrix};
use super::NumericsError;

/// Relative pivot threshold below which elimination reports `Singular`.
const PIVOT_REL: f64 = 1e-14;

/// LU factorization with partial pivoting (Doolittle, row swaps recorded).
struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

fn factor(a: &DenseMatrix) -> Result<LuFactors, NumericsError> {
    let n = a.dim();
    let scale = a.max_abs();
    let threshold = PIVOT_REL * scale;
    let mut lu: Vec<f64> = (0..n).flat_map(|j| a.row(j).to_vec()).collect();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = lu[col * n + col].abs();
        for r in col + 1..n {
            let v = lu[r * n + col].abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = r;
            }
        }
        if pivot_abs <= threshold {
            return Err(NumericsError::Singular {
                pivot: pivot_abs,
                column: col,
                threshold,
            });
        }
        if pivot_row != col {
            for k in 0..n {
                lu.swap(col * n + k, pivot_row * n + k);
            }
            perm.swap(col, pivot_row);
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let m = lu[r * n + col] / pivot;
            lu[r * n + col] = m;
            for k in col + 1..n {
                lu[r * n + k] -= m * lu[col * n + k];
            }
        }
    }
    Ok(LuFactors { n, lu, perm })
}

impl LuFactors {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 1..n {
            for k in 0..r {
                x[r] -= self.lu[r * n + k] * x[k];
            }
        }
        for r in (0..n).rev() {
            for k in r + 1..n {
                x[r] -= self.lu[r * n + k] * x[k];
            }
            x[r] /= self.lu[r * n + r];
        }
        x
    }
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
///
/// One iterative-refinement pass runs when the max-norm residual exceeds
/// 1e-10 * (1 + |b|), which keeps the residual contract for reasonably
/// conditioned systems.
pub fn linear_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let n = a.dim();
    if b.len() != n {
        return Err(NumericsError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let lu = factor(a)?;
    let mut x = lu.solve(b);
    let bound = 1e-10 * (1.0 + max_norm(b));
    for _ in 0..2 {
        let ax = a.matvec_alloc(&x);
        let r: Vec<f64> = (0..n).map(|j| ax[j] - b[j]).collect();
        if max_norm(&r) <= bound {
            break;
        }
        let d = lu.solve(&r);
        for j in 0..n {
            x[j] -= d[j];
        }
    }
    Ok(x)
}
