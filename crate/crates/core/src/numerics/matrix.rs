use super::NumericsError;

/// Dense square matrix with row-major storage.
///
/// Entry `(j, k)` is `data[j * n + k]`. All entries are finite; the
/// constructors reject NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for j in 0..n {
            m[(j, j)] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows, checking shape and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let n = rows.len();
        if n == 0 {
            return Err(NumericsError::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(n * n);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(NumericsError::NotSquare {
                    rows: n,
                    row_len: row.len(),
                });
            }
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(NumericsError::NonFiniteEntry { row: j, col: k });
                }
                data.push(v);
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, NumericsError> {
        let mut m = Self::zeros(n);
        for j in 0..n {
            for k in 0..n {
                let v = f(j, k);
                if !v.is_finite() {
                    return Err(NumericsError::NonFiniteEntry { row: j, col: k });
                }
                m[(j, k)] = v;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for j in 0..self.n {
            let row = self.row(j);
            let mut acc = 0.0;
            for k in 0..self.n {
                acc += row[k] * x[k];
            }
            y[j] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// A + c I, in place on a copy.
    pub fn shifted(&self, c: f64) -> DenseMatrix {
        let mut m = self.clone();
        for j in 0..self.n {
            m[(j, j)] += c;
        }
        m
    }

    /// Adds `diag[j]` to the j-th diagonal entry of a copy.
    pub fn with_added_diagonal(&self, diag: &[f64]) -> DenseMatrix {
        debug_assert_eq!(diag.len(), self.n);
        let mut m = self.clone();
        for j in 0..self.n {
            m[(j, j)] += diag[j];
        }
        m
    }

    pub fn scaled(&self, c: f64) -> DenseMatrix {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= c;
        }
        m
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.n).fold(0.0, |a, j| a.max(self[(j, j)].abs()))
    }

    /// Strong connectivity of the digraph of nonzero off-diagonal entries.
    ///
    /// Two breadth-first passes from node 0, one along edges and one against
    /// them; returns an unreachable pair on failure.
    pub fn strongly_connected(&self) -> Result<(), (usize, usize)> {
        let n = self.n;
        if n == 1 {
            return Ok(());
        }
        let reach = |reverse: bool| -> Vec<bool> {
            let mut seen = vec![false; n];
            let mut queue = vec![0usize];
            seen[0] = true;
            while let Some(u) = queue.pop() {
                for v in 0..n {
                    if v == u || seen[v] {
                        continue;
                    }
                    let edge = if reverse { self[(u, v)] } else { self[(v, u)] };
                    // edge k -> j present iff A[j][k] != 0
                    if edge != 0.0 {
                        seen[v] = true;
                        queue.push(v);
                    }
                }
            }
            seen
        };
        let fwd = reach(false);
        if let Some(v) = fwd.iter().position(|&s| !s) {
            return Err((0, v));
        }
        let bwd = reach(true);
        if let Some(v) = bwd.iter().position(|&s| !s) {
            return Err((v, 0));
        }
        Ok(())
    }

    /// Checks that all off-diagonal entries are >= 0; returns the first
    /// offending position otherwise.
    pub fn quasi_positive(&self) -> Result<(), (usize, usize, f64)> {
        for j in 0..self.n {
            for k in 0..self.n {
                if j != k && self[(j, k)] < 0.0 {
                    return Err((j, k, self[(j, k)]));
                }
            }
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (j, k): (usize, usize)) -> &f64 {
        &self.data[j * self.n + k]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.n + k]
    }
}

/// Max-norm of a vector.
pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}
