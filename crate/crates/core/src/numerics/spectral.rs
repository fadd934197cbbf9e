use super::matrix::{max_norm, DenseMatrix};
use super::NumericsError;

/// Spectral bound of a quasi-positive irreducible matrix together with the
/// positive eigenvector at that eigenvalue.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// s(A): the real eigenvalue of maximal real part.
    pub value: f64,
    /// Strictly positive right eigenvector, normalized to sum 1.
    pub eigenvector: Vec<f64>,
    pub iterations: usize,
    /// Max-norm of A v - value * v at exit.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralOptions {
    /// Convergence tolerance, relative to the diagonal shift.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial iterate; uniform when absent. Must be strictly positive.
    pub initial: Option<Vec<f64>>,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
            initial: None,
        }
    }
}

/// Spectral bound s(A) of a quasi-positive irreducible matrix.
///
/// Power iteration on B = A + cI with c = 1 + max_j |A_jj|; B is nonnegative
/// and irreducible with positive diagonal, hence primitive, so the iteration
/// converges to the Perron pair of B and s(A) = rho(B) - c.
pub fn spectral_bound(a: &DenseMatrix) -> Result<SpectralResult, NumericsError> {
    spectral_bound_with(a, &SpectralOptions::default())
}

pub fn spectral_bound_with(
    a: &DenseMatrix,
    opts: &SpectralOptions,
) -> Result<SpectralResult, NumericsError> {
    let n = a.dim();
    if let Err((row, col, value)) = a.quasi_positive() {
        return Err(NumericsError::NonQuasiPositive { row, col, value });
    }
    if n == 1 {
        return Ok(SpectralResult {
            value: a[(0, 0)],
            eigenvector: vec![1.0],
            iterations: 0,
            residual: 0.0,
        });
    }
    if let Err((from, to)) = a.strongly_connected() {
        return Err(NumericsError::Reducible { from, to });
    }

    let shift = 1.0 + a.max_abs_diagonal();
    let b = a.shifted(shift);

    let mut v = match &opts.initial {
        Some(v0) => {
            if v0.len() != n || v0.iter().any(|&x| !(x > 0.0)) {
                return Err(NumericsError::BadInitialIterate);
            }
            let s: f64 = v0.iter().sum();
            v0.iter().map(|&x| x / s).collect()
        }
        None => vec![1.0 / n as f64; n],
    };
    let mut w = vec![0.0; n];
    let mut lambda;
    let mut residual = f64::INFINITY;
    let tol_abs = opts.tol * shift;

    for it in 1..=opts.max_iter {
        b.matvec(&v, &mut w);
        // Rayleigh quotient of B
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..n {
            num += v[j] * w[j];
            den += v[j] * v[j];
        }
        lambda = num / den;
        residual = (0..n).fold(0.0f64, |r, j| r.max((w[j] - lambda * v[j]).abs()));
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(NumericsError::NoConvergence {
                iterations: it,
                residual,
            });
        }
        for x in &mut w {
            *x /= sum;
        }
        std::mem::swap(&mut v, &mut w);
        if residual <= tol_abs {
            // renormalize exactly to sum 1 and report
            let s: f64 = v.iter().sum();
            for x in &mut v {
                *x /= s;
            }
            let av = a.matvec_alloc(&v);
            let value = lambda - shift;
            let res: Vec<f64> = (0..n).map(|j| av[j] - value * v[j]).collect();
            return Ok(SpectralResult {
                value,
                eigenvector: v,
                iterations: it,
                residual: max_norm(&res),
            });
        }
    }
    Err(NumericsError::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}
