//! Connectivity matrices of patch networks, their Perron vectors, and the
//! star-graph generator.
//!
//! Orientation convention: entry `L[j][k]` is the degree of movement from
//! patch `k` into patch `j`. The diagonal is always rebuilt as minus the
//! column's off-diagonal sum, so every column sums to zero exactly and
//! s(L) = 0 structurally. Note this is the transpose of the convention used
//! by some graph libraries.

use crate::numerics::{
    max_norm, spectral_bound_with, DenseMatrix, NumericsError, SpectralOptions,
};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("a patch network needs at least 2 patches, got {0}")]
    TooFewPatches(usize),
    #[error("movement degree from patch {from} to patch {to} is negative ({value})")]
    NegativeEntry { from: usize, to: usize, value: f64 },
    #[error("movement degree from patch {from} to patch {to} is not finite")]
    NonFiniteEntry { from: usize, to: usize },
    #[error("connectivity graph is not irreducible: no movement path from patch {from} to patch {to}")]
    NotIrreducible { from: usize, to: usize },
    #[error("star spoke degree {index} must be positive, got {value}")]
    NonPositiveDegree { index: usize, value: f64 },
    #[error("Perron vector defect |L a| = {residual:.3e} exceeds tolerance")]
    PerronResidual { residual: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Validated movement matrix: off-diagonals nonnegative, columns summing to
/// zero, and strongly connected.
#[derive(Debug, Clone)]
pub struct ConnectivityMatrix {
    matrix: DenseMatrix,
}

impl ConnectivityMatrix {
    pub fn n(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// (L v)_j for all j.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.matvec_alloc(v)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n();
        for j in 0..n {
            for k in j + 1..n {
                if (self.matrix[(j, k)] - self.matrix[(k, j)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Builds a connectivity matrix from raw off-diagonal movement degrees.
///
/// `raw[j][k]` is the degree of movement from patch k into patch j; the
/// diagonal of `raw` is ignored and recomputed as minus the column sums, so
/// the zero-column-sum invariant holds exactly. Irreducibility is verified
/// by forward and reverse reachability.
pub fn build_connectivity(raw: &[Vec<f64>]) -> Result<ConnectivityMatrix, GraphError> {
    let n = raw.len();
    if n < 2 {
        return Err(GraphError::TooFewPatches(n));
    }
    for (j, row) in raw.iter().enumerate() {
        if row.len() != n {
            return Err(GraphError::Numerics(NumericsError::NotSquare {
                rows: n,
                row_len: row.len(),
            }));
        }
        for (k, &v) in row.iter().enumerate() {
            if j == k {
                continue;
            }
            if !v.is_finite() {
                return Err(GraphError::NonFiniteEntry { from: k, to: j });
            }
            if v < 0.0 {
                return Err(GraphError::NegativeEntry {
                    from: k,
                    to: j,
                    value: v,
                });
            }
        }
    }
    let mut m = DenseMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                m[(j, k)] = raw[j][k];
            }
        }
    }
    for k in 0..n {
        let mut out_degree = 0.0;
        for j in 0..n {
            if j != k {
                out_degree += m[(j, k)];
            }
        }
        m[(k, k)] = -out_degree;
    }
    if let Err((from, to)) = m.strongly_connected() {
        return Err(GraphError::NotIrreducible { from, to });
    }
    Ok(ConnectivityMatrix { matrix: m })
}

/// Strictly positive right null vector of L, normalized to sum 1.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub alpha: Vec<f64>,
    /// Max-norm of L alpha at exit.
    pub defect: f64,
}

impl PerronData {
    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }
}

/// Computes the Perron vector: the unique alpha >> 0 with L alpha = 0 and
/// sum(alpha) = 1.
pub fn perron_vector(l: &ConnectivityMatrix) -> Result<PerronData, GraphError> {
    perron_vector_from(l, None)
}

/// Same as [`perron_vector`] but with a caller-supplied initial iterate
/// (strictly positive). The result must not depend on it.
pub fn perron_vector_from(
    l: &ConnectivityMatrix,
    initial: Option<Vec<f64>>,
) -> Result<PerronData, GraphError> {
    let opts = SpectralOptions {
        tol: 1e-14,
        max_iter: 200_000,
        initial,
    };
    let r = spectral_bound_with(l.matrix(), &opts)?;
    // s(L) = 0 holds structurally; anything visibly nonzero is a defect.
    if r.value.abs() > 1e-10 {
        return Err(GraphError::PerronResidual {
            residual: r.value.abs(),
        });
    }
    let defect = max_norm(&l.apply(&r.eigenvector));
    if defect > 1e-11 {
        return Err(GraphError::PerronResidual { residual: defect });
    }
    Ok(PerronData {
        alpha: r.eigenvector,
        defect,
    })
}

/// Star graph on n = spokes + 1 patches: patch 0 is the hub. `a[i]` is the
/// movement degree from the hub out to spoke i+1, `b[i]` the degree from
/// spoke i+1 back into the hub.
pub fn star_graph(a: &[f64], b: &[f64]) -> Result<ConnectivityMatrix, GraphError> {
    if a.len() != b.len() {
        return Err(GraphError::Numerics(NumericsError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        }));
    }
    let spokes = a.len();
    if spokes == 0 {
        return Err(GraphError::TooFewPatches(1));
    }
    for (i, &v) in a.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(GraphError::NonPositiveDegree { index: i, value: v });
        }
    }
    for (i, &v) in b.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(GraphError::NonPositiveDegree { index: i, value: v });
        }
    }
    let n = spokes + 1;
    let mut raw = vec![vec![0.0; n]; n];
    for i in 0..spokes {
        raw[0][i + 1] = b[i]; // spoke -> hub
        raw[i + 1][0] = a[i]; // hub -> spoke
    }
    build_connectivity(&raw)
}

/// Closed-form Perron vector of the star graph:
/// (1, r_1, ..., r_{n-1}) / (1 + sum r_i) with r_i = a_i / b_i.
pub fn star_alpha(a: &[f64], b: &[f64]) -> Vec<f64> {
    let r: Vec<f64> = a.iter().zip(b).map(|(&ai, &bi)| ai / bi).collect();
    let s: f64 = r.iter().sum();
    let mut alpha = Vec::with_capacity(r.len() + 1);
    alpha.push(1.0 / (1.0 + s));
    alpha.extend(r.iter().map(|ri| ri / (1.0 + s)));
    alpha
}
