//! Small dense linear algebra over a [`Scalar`] field.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::scalar::{dot, Scalar};

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
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
        let n = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == c), "ragged matrix");
        Matrix { rows: n, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Row vector times matrix: `v^T M`.
    pub fn vec_mul(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols)
            .map(|j| {
                let mut acc = S::zero();
                for (i, vi) in v.iter().enumerate() {
                    if !vi.is_zero() {
                        acc = acc + vi.mul_ref(&self[(i, j)]);
                    }
                }
                acc
            })
            .collect()
    }

    pub fn mul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = S::zero();
                for k in 0..self.cols {
                    acc = acc + self[(i, k)].mul_ref(&other[(k, j)]);
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn inverse(&self) -> Option<Matrix<S>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug: Vec<Vec<S>> = (0..n)
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.extend((0..n).map(|j| if i == j { S::one() } else { S::zero() }));
                r
            })
            .collect();
        let pivots = row_reduce(&mut aug, n);
        if pivots.len() < n {
            return None;
        }
        Some(Matrix::from_rows(aug.into_iter().map(|r| r[n..].to_vec()).collect()))
    }

    pub fn determinant(&self) -> S {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.to_rows();
        let mut det = S::one();
        for col in 0..n {
            let Some(p) = pick_pivot(&a, col, col) else {
                return S::zero();
            };
            if p != col {
                a.swap(p, col);
                det = -det;
            }
            det = det * &a[col][col];
            for r in col + 1..n {
                if a[r][col].is_zero() {
                    continue;
                }
                let factor = a[r][col].clone() / &a[col][col];
                for c in col..n {
                    let delta = factor.mul_ref(&a[col][c]);
                    a[r][c] = a[r][c].clone() - &delta;
                }
            }
        }
        det
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries((0..self.rows).map(|i| self.row(i))).finish()
    }
}

impl<S: Scalar> fmt::Display for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(Scalar::to_repr).collect())
            .collect();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
        for row in &cells {
            let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            writeln!(f, "[ {} ]", line.join("  "))?;
        }
        Ok(())
    }
}

fn pick_pivot<S: Scalar>(a: &[Vec<S>], col: usize, from: usize) -> Option<usize> {
    if S::EXACT {
        (from..a.len()).find(|&r| !a[r][col].is_zero())
    } else {
        // partial pivoting for the float backend
        (from..a.len())
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&x, &y| {
                a[x][col]
                    .to_f64()
                    .abs()
                    .partial_cmp(&a[y][col].to_f64().abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    }
}

/// Reduced row echelon form over the first `ncols` columns, in place.
/// Returns the pivot columns.
pub fn row_reduce<S: Scalar>(a: &mut [Vec<S>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == a.len() {
            break;
        }
        let Some(p) = pick_pivot(a, col, row) else {
            continue;
        };
        a.swap(p, row);
        let inv = S::one() / &a[row][col];
        for c in col..a[row].len() {
            a[row][c] = a[row][c].clone() * &inv;
        }
        for r in 0..a.len() {
            if r == row || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..a[r].len() {
                let delta = factor.mul_ref(&a[row][c]);
                a[r][c] = a[r][c].clone() - &delta;
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Rank of a set of row vectors.
pub fn rank<S: Scalar>(rows: &[Vec<S>]) -> usize {
    let Some(ncols) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut a = rows.to_vec();
    row_reduce(&mut a, ncols).len()
}

/// Rank of the vectors referenced by `rows`.
pub fn rank_of<S: Scalar>(rows: &[&[S]]) -> usize {
    let owned: Vec<Vec<S>> = rows.iter().map(|r| r.to_vec()).collect();
    rank(&owned)
}

/// Affine dimension of a point set; `None` for the empty set.
pub fn affine_dim<S: Scalar>(points: &[&[S]]) -> Option<usize> {
    let (first, rest) = points.split_first()?;
    let diffs: Vec<Vec<S>> = rest
        .iter()
        .map(|p| p.iter().zip(first.iter()).map(|(a, b)| a.clone() - b).collect())
        .collect();
    Some(rank(&diffs))
}

/// Solve a square system `a x = b`; `None` when singular.
pub fn solve<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Option<Vec<S>> {
    let n = a.len();
    assert_eq!(b.len(), n);
    let mut aug: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut r = r.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    if row_reduce(&mut aug, n).len() < n {
        return None;
    }
    Some(aug.into_iter().map(|mut r| r.pop().expect("augmented column")).collect())
}

/// A non-zero vector orthogonal to every row, when the rows have rank
/// exactly `dim - 1`.
pub fn normal_of<S: Scalar>(rows: &[Vec<S>], dim: usize) -> Option<Vec<S>> {
    let mut a = rows.to_vec();
    let pivots = row_reduce(&mut a, dim);
    if pivots.len() + 1 != dim {
        return None;
    }
    let free = (0..dim).find(|c| !pivots.contains(c))?;
    let mut n = vec![S::zero(); dim];
    n[free] = S::one();
    for (r, &p) in pivots.iter().enumerate() {
        n[p] = -a[r][free].clone();
    }
    Some(n)
}
