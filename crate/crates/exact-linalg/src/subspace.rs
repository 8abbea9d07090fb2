//! Linear subspaces of `F^n` in canonical form.
//!
//! A subspace is stored as the reduced row echelon basis of its row span,
//! with zero rows dropped and pivot columns strictly increasing.  Two
//! subspaces are mathematically equal exactly when their stored bases are
//! structurally equal, so `==` decides subspace equality.

use crate::matrix::{Matrix, MatrixError};
use crate::scalar::{FieldSpec, Scalar, ScalarError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("bilinear form is singular")]
    SingularGram,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// A subspace of `F^ambient`, canonically represented.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    field: FieldSpec,
    ambient: usize,
    /// Reduced row echelon basis, no zero rows.
    basis: Matrix,
    pivots: Vec<usize>,
}

impl Subspace {
    /// The zero subspace of `F^ambient`.
    pub fn zero(field: FieldSpec, ambient: usize) -> Subspace {
        Subspace {
            field,
            ambient,
            basis: Matrix::zero(field, 0, ambient),
            pivots: Vec::new(),
        }
    }

    /// The full space `F^ambient`.
    pub fn full(field: FieldSpec, ambient: usize) -> Subspace {
        Subspace::from_matrix(&Matrix::identity(field, ambient))
    }

    /// Row span of a matrix.
    pub fn from_matrix(m: &Matrix) -> Subspace {
        let (r, pivots) = m.rref();
        let d = pivots.len();
        let basis = Matrix::from_fn(m.field(), d, m.cols(), |i, j| r.get(i, j).clone());
        Subspace {
            field: m.field(),
            ambient: m.cols(),
            basis,
            pivots,
        }
    }

    /// Span of a list of vectors.
    pub fn from_vectors(
        field: FieldSpec,
        ambient: usize,
        vecs: &[Vec<Scalar>],
    ) -> Result<Subspace, LinalgError> {
        for v in vecs {
            if v.len() != ambient {
                return Err(LinalgError::AmbientMismatch(v.len(), ambient));
            }
        }
        if vecs.is_empty() {
            return Ok(Subspace::zero(field, ambient));
        }
        let m = Matrix::from_rows(field, vecs.to_vec())?;
        Ok(Subspace::from_matrix(&m))
    }

    /// The line spanned by a single vector (the zero vector gives the zero
    /// subspace).
    pub fn line(field: FieldSpec, v: &[Scalar]) -> Subspace {
        Subspace::from_vectors(field, v.len(), &[v.to_vec()]).expect("consistent ambient")
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient
    }

    /// The canonical basis matrix (`dim x ambient`, reduced row echelon).
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn basis_vectors(&self) -> Vec<Vec<Scalar>> {
        self.basis.to_row_vecs()
    }

    fn check_compatible(&self, other: &Subspace) -> Result<(), LinalgError> {
        if self.ambient != other.ambient {
            return Err(LinalgError::AmbientMismatch(self.ambient, other.ambient));
        }
        if self.field != other.field {
            return Err(ScalarError::FieldMismatch {
                left: self.field,
                right: other.field,
            }
            .into());
        }
        Ok(())
    }

    /// Reduce a vector modulo the subspace; the result is zero exactly
    /// when the vector lies in the subspace.
    pub fn reduce_vector(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.ambient, "ambient mismatch");
        let mut w = v.to_vec();
        for (row, &p) in self.pivots.iter().enumerate() {
            if !w[p].is_zero() {
                let c = w[p].clone();
                for j in 0..self.ambient {
                    w[j] = &w[j] - &(&c * self.basis.get(row, j));
                }
            }
        }
        w
    }

    pub fn contains_vector(&self, v: &[Scalar]) -> bool {
        self.reduce_vector(v).iter().all(Scalar::is_zero)
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        self.check_compatible(other).expect("compatible subspaces");
        other
            .basis
            .to_row_vecs()
            .iter()
            .all(|v| self.contains_vector(v))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check_compatible(other)?;
        Ok(Subspace::from_matrix(&self.basis.vstack(&other.basis)?))
    }

    /// Add a single vector to the span.
    pub fn sum_vector(&self, v: &[Scalar]) -> Subspace {
        self.sum(&Subspace::line(self.field, v)).expect("same ambient")
    }

    /// A matrix `N` with `self = { v : N v = 0 }` (rows are independent
    /// linear constraints).
    pub fn constraint_matrix(&self) -> Matrix {
        kernel(&self.basis).basis().clone()
    }

    pub fn intersect(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check_compatible(other)?;
        let n = self
            .constraint_matrix()
            .vstack(&other.constraint_matrix())?;
        Ok(kernel(&n))
    }

    /// Forward image under a linear map (`m` has `ambient` columns).
    pub fn apply(&self, m: &Matrix) -> Subspace {
        assert_eq!(m.cols(), self.ambient, "map domain mismatch");
        Subspace::from_matrix(&self.basis.try_mul(&m.transpose()).expect("shapes agree"))
    }

    /// Orthogonal complement with respect to a bilinear form given by a
    /// square gram matrix `g`: all `v` with `b G v = 0` for each basis
    /// vector `b`.
    pub fn orth_complement(&self, g: &Matrix) -> Result<Subspace, LinalgError> {
        if g.rows() != self.ambient || g.cols() != self.ambient {
            return Err(LinalgError::AmbientMismatch(g.rows(), self.ambient));
        }
        if g.rank() != self.ambient {
            return Err(LinalgError::SingularGram);
        }
        Ok(kernel(&self.basis.try_mul(g)?))
    }

    /// Representative vectors extending `self` to `sup` (both canonical):
    /// rows of `sup`'s basis that are independent from `self`.  The result
    /// has `sup.dim() - self.dim()` vectors.
    pub fn extension_vectors(&self, sup: &Subspace) -> Vec<Vec<Scalar>> {
        assert!(sup.contains(self), "extension requires containment");
        let mut acc = self.clone();
        let mut out = Vec::new();
        for v in sup.basis.to_row_vecs() {
            if !acc.contains_vector(&v) {
                out.push(v.clone());
                acc = acc.sum_vector(&v);
            }
        }
        out
    }
}

/// Kernel (null space) of a matrix, as a subspace of the domain `F^cols`.
pub fn kernel(m: &Matrix) -> Subspace {
    let (r, pivots) = m.rref();
    let field = m.field();
    let n = m.cols();
    let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
    let mut rows = Vec::new();
    for free in 0..n {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![Scalar::zero(field); n];
        v[free] = Scalar::one(field);
        for (row, &p) in pivots.iter().enumerate() {
            v[p] = -r.get(row, free);
        }
        rows.push(v);
    }
    Subspace::from_vectors(field, n, &rows).expect("consistent ambient")
}

/// Column span of a matrix, as a subspace of the codomain `F^rows`.
pub fn image(m: &Matrix) -> Subspace {
    Subspace::from_matrix(&m.transpose())
}

/// Preimage `{ v : m v in w }` of a subspace under a linear map.
pub fn preimage(m: &Matrix, w: &Subspace) -> Subspace {
    assert_eq!(m.rows(), w.ambient(), "map codomain mismatch");
    let n = w.constraint_matrix();
    kernel(&n.try_mul(m).expect("shapes agree"))
}
