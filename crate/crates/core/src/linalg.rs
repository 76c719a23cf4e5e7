//! Dense matrices over an exact scalar, with fraction-free elimination.
//!
//! All decompositions here are exact: pivoting is by first nonzero entry,
//! forward elimination uses Bareiss-style two-row updates (the division by the
//! previous pivot is exact over a field and keeps entries in the subring
//! generated by the input), and reduced forms divide through at the end.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Matrix { rows: nrows, cols: ncols, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_vec(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix<S> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..=i).all(|j| self[(i, j)] == -self[(j, i)].clone()))
    }

    pub fn mul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(S::zero(), |acc, k| {
                acc + self[(i, k)].clone() * other[(k, j)].clone()
            })
        })
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(S::zero(), |acc, k| acc + self[(i, k)].clone() * v[k].clone())
            })
            .collect()
    }

    /// Principal submatrix picked by `idx` (rows and columns alike).
    pub fn principal_submatrix(&self, idx: &[usize]) -> Matrix<S> {
        Matrix::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])].clone())
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> (Matrix<S>, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].clone();
            for j in 0..m.cols {
                let v = m[(r, j)].clone() / inv.clone();
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in 0..m.cols {
                        let v = m[(i, j)].clone() - f.clone() * m[(r, j)].clone();
                        m[(i, j)] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.fraction_free_echelon().pivot_cols.len()
    }

    /// Bareiss fraction-free forward elimination. Returns the echelonized
    /// matrix, the pivot columns, and the determinant when square.
    pub fn fraction_free_echelon(&self) -> Echelon<S> {
        let mut m = self.clone();
        let mut pivot_cols = Vec::new();
        let mut sign = false;
        let mut prev = S::one();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            if p != r {
                m.swap_rows(r, p);
                sign = !sign;
            }
            let pivot = m[(r, c)].clone();
            for i in r + 1..m.rows {
                let fi = m[(i, c)].clone();
                for j in 0..m.cols {
                    let v = (m[(i, j)].clone() * pivot.clone()
                        - fi.clone() * m[(r, j)].clone())
                        / prev.clone();
                    m[(i, j)] = v;
                }
            }
            prev = pivot;
            pivot_cols.push(c);
            r += 1;
        }
        let det = if self.rows == self.cols {
            let d = if pivot_cols.len() == self.rows { prev } else { S::zero() };
            Some(if sign { -d } else { d })
        } else {
            None
        };
        Echelon { matrix: m, pivot_cols, det }
    }

    pub fn det(&self) -> S {
        self.fraction_free_echelon().det.expect("determinant of a square matrix")
    }

    pub fn inverse(&self) -> Option<Matrix<S>> {
        assert_eq!(self.rows, self.cols, "inverse of a square matrix");
        let n = self.rows;
        let aug = Matrix::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else if j - n == i {
                S::one()
            } else {
                S::zero()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(k, &c)| c != k) {
            return None;
        }
        Some(Matrix::from_fn(n, n, |i, j| r[(i, j + n)].clone()))
    }

    /// Basis of the right null space, read off the reduced echelon form.
    pub fn null_space(&self) -> Vec<Vec<S>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&fc| {
                let mut v = vec![S::zero(); self.cols];
                v[fc] = S::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r[(row, fc)].clone();
                }
                v
            })
            .collect()
    }

    /// Basis of the left null space (`y` with `y^T A = 0`), reduced so the
    /// leading entry of each basis vector is 1 at the lowest possible index.
    pub fn left_null_space(&self) -> Vec<Vec<S>> {
        let basis = self.transpose().null_space();
        if basis.is_empty() {
            return basis;
        }
        let (r, pivots) = Matrix::from_rows(basis).rref();
        pivots.iter().enumerate().map(|(i, _)| r.row(i).to_vec()).collect()
    }

    /// Solves `A x = b` exactly. Returns `None` when inconsistent; when the
    /// system is underdetermined the free variables are set to zero.
    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        assert_eq!(self.rows, b.len(), "dimension mismatch");
        let aug = Matrix::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols { self[(i, j)].clone() } else { b[i].clone() }
        });
        let (r, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![S::zero(); self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = r[(row, self.cols)].clone();
        }
        Some(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

/// Result of a fraction-free forward elimination.
pub struct Echelon<S> {
    pub matrix: Matrix<S>,
    pub pivot_cols: Vec<usize>,
    /// Determinant for square inputs, `None` otherwise.
    pub det: Option<S>,
}

/// Lexicographically first index subset of the given size whose principal
/// submatrix is nonsingular. Used to pick a second-class complement.
pub fn first_nonsingular_principal_subset<S: Scalar>(
    m: &Matrix<S>,
    size: usize,
) -> Option<Vec<usize>> {
    fn rec<S: Scalar>(
        m: &Matrix<S>,
        size: usize,
        start: usize,
        acc: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        if acc.len() == size {
            if !m.principal_submatrix(acc).det().is_zero() {
                return Some(acc.clone());
            }
            return None;
        }
        let remaining = size - acc.len();
        for i in start..m.nrows() {
            if m.nrows() - i < remaining {
                break;
            }
            acc.push(i);
            // Each extra index grows the principal rank by at most two.
            if m.principal_submatrix(acc).rank() + 2 * (size - acc.len()) >= size {
                if let Some(found) = rec(m, size, i + 1, acc) {
                    return Some(found);
                }
            }
            acc.pop();
        }
        None
    }
    rec(m, size, 0, &mut Vec::new())
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}
