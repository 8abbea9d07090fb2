//! Affine linear systems `A v = b`.

use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::subspace::{kernel, Subspace};

/// The solution set of `A v = b`: either empty or an affine subspace
/// given by one particular solution plus the kernel of `A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AffineSolutionSet {
    Inconsistent,
    Solution {
        particular: Vec<Scalar>,
        homogeneous: Subspace,
    },
}

impl AffineSolutionSet {
    pub fn is_consistent(&self) -> bool {
        matches!(self, AffineSolutionSet::Solution { .. })
    }

    /// Dimension of the solution set (`None` if empty).
    pub fn dim(&self) -> Option<usize> {
        match self {
            AffineSolutionSet::Inconsistent => None,
            AffineSolutionSet::Solution { homogeneous, .. } => Some(homogeneous.dim()),
        }
    }
}

/// Solve `A v = b` for a column vector `b` (`b.len() == A.rows()`).
pub fn solve_linear(a: &Matrix, b: &[Scalar]) -> AffineSolutionSet {
    assert_eq!(b.len(), a.rows(), "right-hand side length mismatch");
    let field = a.field();
    let n = a.cols();
    let rhs = Matrix::from_fn(field, a.rows(), 1, |i, _| b[i].clone());
    let aug = a.hstack(&rhs).expect("same row count");
    let (r, pivots) = aug.rref();
    if pivots.contains(&n) {
        return AffineSolutionSet::Inconsistent;
    }
    let mut particular = vec![Scalar::zero(field); n];
    for (row, &p) in pivots.iter().enumerate() {
        particular[p] = r.get(row, n).clone();
    }
    AffineSolutionSet::Solution {
        particular,
        homogeneous: kernel(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::parse_matrix;
    use crate::scalar::FieldSpec;

    const QQ: FieldSpec = FieldSpec::Rationals;

    fn s(v: i64) -> Scalar {
        Scalar::from_i64(QQ, v)
    }

    #[test]
    fn unique_solution() {
        let a = parse_matrix("[1 2; 3 11]", QQ).unwrap();
        let sol = solve_linear(&a, &[s(5), s(20)]);
        match &sol {
            AffineSolutionSet::Solution {
                particular,
                homogeneous,
            } => {
                assert!(homogeneous.is_zero());
                assert_eq!(a.apply(particular), vec![s(5), s(20)]);
            }
            _ => panic!("expected a solution"),
        }
        assert_eq!(sol.dim(), Some(0));
    }

    #[test]
    fn underdetermined_solution() {
        let a = parse_matrix("[1 1 1]", QQ).unwrap();
        let sol = solve_linear(&a, &[s(3)]);
        match sol {
            AffineSolutionSet::Solution {
                particular,
                homogeneous,
            } => {
                assert_eq!(a.apply(&particular), vec![s(3)]);
                assert_eq!(homogeneous.dim(), 2);
                // particular + homogeneous vector is again a solution
                for h in homogeneous.basis_vectors() {
                    let v: Vec<Scalar> =
                        particular.iter().zip(&h).map(|(p, q)| p + q).collect();
                    assert_eq!(a.apply(&v), vec![s(3)]);
                }
            }
            _ => panic!("expected a solution"),
        }
    }

    #[test]
    fn inconsistent_system() {
        let a = parse_matrix("[1 1; 2 2]", QQ).unwrap();
        let sol = solve_linear(&a, &[s(1), s(3)]);
        assert_eq!(sol, AffineSolutionSet::Inconsistent);
        assert_eq!(sol.dim(), None);
    }

    #[test]
    fn zero_columns() {
        // A 2x0 system: solvable iff the right-hand side is zero, with the
        // empty vector as unique solution.
        let a = Matrix::zero(QQ, 2, 0);
        assert!(solve_linear(&a, &[s(0), s(0)]).is_consistent());
        assert!(!solve_linear(&a, &[s(0), s(1)]).is_consistent());
    }
}
