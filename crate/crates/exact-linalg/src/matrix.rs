//! Dense matrices over a fixed coefficient field.
//!
//! Matrices with zero rows or zero columns are legal; they arise naturally
//! as boundary maps of quiver representations.

use crate::scalar::{parse_scalar, FieldSpec, Scalar, ScalarError};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("cannot parse matrix literal {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// A `rows x cols` matrix with entries in a single field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    /// Row-major entries; length `rows * cols`.
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zero(field: FieldSpec, rows: usize, cols: usize) -> Matrix {
        Matrix {
            field,
            rows,
            cols,
            data: vec![Scalar::zero(field); rows * cols],
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Matrix {
        let mut m = Matrix::zero(field, n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one(field));
        }
        m
    }

    pub fn from_fn(
        field: FieldSpec,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Scalar,
    ) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                assert_eq!(v.field(), field, "entry field mismatch");
                data.push(v);
            }
        }
        Matrix {
            field,
            rows,
            cols,
            data,
        }
    }

    /// Build from rows of scalars; all rows must have equal length.  An
    /// empty row list yields a `0 x 0` matrix.
    pub fn from_rows(field: FieldSpec, rows: Vec<Vec<Scalar>>) -> Result<Matrix, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(MatrixError::ShapeMismatch(format!(
                    "ragged rows: {} vs {}",
                    row.len(),
                    c
                )));
            }
            for v in row {
                if v.field() != field {
                    return Err(ScalarError::FieldMismatch {
                        left: field,
                        right: v.field(),
                    }
                    .into());
                }
                data.push(v.clone());
            }
        }
        Ok(Matrix {
            field,
            rows: r,
            cols: c,
            data,
        })
    }

    /// Convenience constructor from integer entries.
    pub fn from_i64_rows(field: FieldSpec, rows: &[&[i64]]) -> Matrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Matrix::from_fn(field, r, c, |i, j| Scalar::from_i64(field, rows[i][j]))
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        assert!(i < self.rows && j < self.cols, "index out of range");
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        assert_eq!(v.field(), self.field, "entry field mismatch");
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<Scalar> {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn col(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.field, self.cols, self.rows, |i, j| {
            self.get(j, i).clone()
        })
    }

    pub fn scale(&self, c: &Scalar) -> Matrix {
        Matrix::from_fn(self.field, self.rows, self.cols, |i, j| self.get(i, j) * c)
    }

    pub fn neg(&self) -> Matrix {
        Matrix::from_fn(self.field, self.rows, self.cols, |i, j| -self.get(i, j))
    }

    pub fn try_add(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::ShapeMismatch(format!(
                "{}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).try_add(other.get(i, j))?);
            }
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::ShapeMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let field = self.field;
        let mut out = Matrix::zero(field, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Scalar::zero(field);
                for t in 0..self.cols {
                    acc = acc.try_add(&self.get(i, t).try_mul(other.get(t, j))?)?;
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Matrix power of a square matrix (`e = 0` gives the identity).
    pub fn pow(&self, e: usize) -> Matrix {
        assert!(self.is_square(), "matrix power requires a square matrix");
        let mut acc = Matrix::identity(self.field, self.rows);
        for _ in 0..e {
            acc = acc.try_mul(self).expect("square multiply");
        }
        acc
    }

    /// Apply to a column vector given as a slice.
    pub fn apply(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = Scalar::zero(self.field);
                for j in 0..self.cols {
                    acc = &acc + &(self.get(i, j) * &v[j]);
                }
                acc
            })
            .collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        if self.rows != other.rows {
            return Err(MatrixError::ShapeMismatch(format!(
                "hstack {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix::from_fn(
            self.field,
            self.rows,
            self.cols + other.cols,
            |i, j| {
                if j < self.cols {
                    self.get(i, j).clone()
                } else {
                    other.get(i, j - self.cols).clone()
                }
            },
        ))
    }

    /// Vertical concatenation (self on top).
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        if self.cols != other.cols {
            return Err(MatrixError::ShapeMismatch(format!(
                "vstack {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix::from_fn(
            self.field,
            self.rows + other.rows,
            self.cols,
            |i, j| {
                if i < self.rows {
                    self.get(i, j).clone()
                } else {
                    other.get(i - self.rows, j).clone()
                }
            },
        ))
    }

    /// Reduced row echelon form together with the pivot column indices.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row >= m.rows {
                break;
            }
            let Some(pivot_row) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(row, pivot_row);
            let inv = m.get(row, col).inverse().expect("pivot nonzero");
            for j in col..m.cols {
                let v = m.get(row, j) * &inv;
                m.set(row, j, v);
            }
            for r in 0..m.rows {
                if r != row && !m.get(r, col).is_zero() {
                    let factor = m.get(r, col).clone();
                    for j in col..m.cols {
                        let v = m.get(r, j) - &(&factor * m.get(row, j));
                        m.set(r, j, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    /// Inverse of a square matrix, if it exists.
    pub fn inverse(&self) -> Option<Matrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let aug = self
            .hstack(&Matrix::identity(self.field, n))
            .expect("same rows");
        let (r, pivots) = aug.rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return None;
        }
        Some(Matrix::from_fn(self.field, n, n, |i, j| {
            r.get(i, n + j).clone()
        }))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let va = self.get(a, j).clone();
            let vb = self.get(b, j).clone();
            self.set(a, j, vb);
            self.set(b, j, va);
        }
    }

    /// Rows as plain vectors.
    pub fn to_row_vecs(&self) -> Vec<Vec<Scalar>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }
}

/// Parse a bracketed matrix literal such as `[0 1; 0 0]`.  Rows are
/// separated by `;`, entries by whitespace.  `[]` denotes the `0 x 0`
/// matrix.
pub fn parse_matrix(input: &str, field: FieldSpec) -> Result<Matrix, MatrixError> {
    let err = |reason: &str| MatrixError::Parse {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    let t = input.trim();
    let inner = t
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err("expected surrounding brackets"))?
        .trim();
    if inner.is_empty() {
        return Ok(Matrix::zero(field, 0, 0));
    }
    let mut rows = Vec::new();
    for row_src in inner.split(';') {
        let mut row = Vec::new();
        for tok in row_src.split_whitespace() {
            row.push(parse_scalar(tok, field)?);
        }
        rows.push(row);
    }
    Matrix::from_rows(field, rows)
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QQ: FieldSpec = FieldSpec::Rationals;
    const F5: FieldSpec = FieldSpec::Prime(5);

    #[test]
    fn parse_display_roundtrip() {
        let m = parse_matrix("[0 1; 0 0]", QQ).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 2);
        assert_eq!(m.to_string(), "[0 1; 0 0]");
        let back = parse_matrix(&m.to_string(), QQ).unwrap();
        assert_eq!(back, m);
        let empty = parse_matrix("[]", QQ).unwrap();
        assert_eq!((empty.rows(), empty.cols()), (0, 0));
    }

    #[test]
    fn multiply_and_power() {
        let x = parse_matrix("[0 1 0; 0 0 1; 0 0 0]", QQ).unwrap();
        assert!(x.pow(3).is_zero());
        assert!(!x.pow(2).is_zero());
        let id = Matrix::identity(QQ, 3);
        assert_eq!(x.try_mul(&id).unwrap(), x);
        assert_eq!(x.pow(0), id);
    }

    #[test]
    fn zero_dimensional_shapes() {
        let a = Matrix::zero(QQ, 0, 3);
        let b = Matrix::zero(QQ, 3, 2);
        let c = a.try_mul(&b).unwrap();
        assert_eq!((c.rows(), c.cols()), (0, 2));
        let d = Matrix::zero(QQ, 2, 0).try_mul(&Matrix::zero(QQ, 0, 4)).unwrap();
        assert_eq!((d.rows(), d.cols()), (2, 4));
        assert!(d.is_zero());
        // rank of empty shapes is zero
        assert_eq!(a.rank(), 0);
        assert_eq!(Matrix::identity(QQ, 0).rank(), 0);
    }

    #[test]
    fn rref_canonical() {
        let m = parse_matrix("[2 4 6; 1 2 4]", QQ).unwrap();
        let (r, pivots) = m.rref();
        assert_eq!(pivots, vec![0, 2]);
        assert_eq!(r.to_string(), "[1 2 0; 0 0 1]");
        // rref is idempotent
        assert_eq!(r.rref().0, r);
    }

    #[test]
    fn rank_over_prime_field() {
        // This matrix has rank 2 over Q but rank 1 over F_5.
        let over_q = parse_matrix("[1 2; 3 11]", QQ).unwrap();
        assert_eq!(over_q.rank(), 2);
        let over_f5 = parse_matrix("[1 2; 3 11]", F5).unwrap();
        assert_eq!(over_f5.rank(), 1);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = parse_matrix("[1 2; 3 11]", QQ).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(m.try_mul(&inv).unwrap(), Matrix::identity(QQ, 2));
        let singular = parse_matrix("[1 2; 2 4]", QQ).unwrap();
        assert!(singular.inverse().is_none());
        assert!(!singular.is_invertible());
    }

    #[test]
    fn stack_shapes() {
        let a = parse_matrix("[1 2]", QQ).unwrap();
        let b = parse_matrix("[3 4]", QQ).unwrap();
        assert_eq!(a.vstack(&b).unwrap().to_string(), "[1 2; 3 4]");
        assert_eq!(a.hstack(&b).unwrap().to_string(), "[1 2 3 4]");
        assert!(a.vstack(&parse_matrix("[1]", QQ).unwrap()).is_err());
    }

    #[test]
    fn apply_vector() {
        let m = parse_matrix("[1 2; 3 4]", QQ).unwrap();
        let v = vec![Scalar::from_i64(QQ, 1), Scalar::from_i64(QQ, -1)];
        let w = m.apply(&v);
        assert_eq!(w[0], Scalar::from_i64(QQ, -1));
        assert_eq!(w[1], Scalar::from_i64(QQ, -1));
    }
}
