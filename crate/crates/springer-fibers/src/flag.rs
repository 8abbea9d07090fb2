//! Complete flags, two-block nilpotent endomorphisms and the relations a
//! cup diagram imposes on a flag.
//!
//! The ambient space has ordered basis `e_1, ..., e_{n-k}, f_1, ..., f_k`
//! and the nilpotent `x` shifts both chains down: `x e_i = e_{i-1}`,
//! `x f_i = f_{i-1}`.  Springer fibers consist of the complete flags with
//! `x F_i` contained in `F_{i-1}`; in type D the flags are additionally
//! isotropic with respect to a fixed symmetric bilinear form.

use crate::diagram::{is_type_d_shape, CupDiagram, MarkedCupDiagram};
use exact_linalg::subspace::LinalgError;
use exact_linalg::scalar::sqrt_minus_one;
use exact_linalg::{preimage, FieldSpec, Matrix, Scalar, Subspace};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlagError {
    #[error("parity violation: {0}")]
    BadParity(String),
    #[error("({0},{1}) is not a two-row type D partition")]
    NotTypeDPartition(usize, usize),
    #[error("invalid flag: {0}")]
    Validation(String),
    #[error("diagram shape {0:?} does not match the flag shape {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("characteristic 2 does not support this shape: {0}")]
    UnsupportedCharacteristic(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A nilpotent endomorphism with two Jordan blocks of sizes
/// `n - k >= k` acting on the standard basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoBlockNilpotent {
    field: FieldSpec,
    n_minus_k: usize,
    k: usize,
    mat: Matrix,
}

impl TwoBlockNilpotent {
    pub fn new(field: FieldSpec, n_minus_k: usize, k: usize) -> TwoBlockNilpotent {
        assert!(n_minus_k >= k, "blocks must be ordered: {n_minus_k} < {k}");
        let n = n_minus_k + k;
        let mut mat = Matrix::zero(field, n, n);
        for i in 1..n_minus_k {
            // x e_{i+1} = e_i
            mat.set(i - 1, i, Scalar::one(field));
        }
        for i in 1..k {
            // x f_{i+1} = f_i
            mat.set(n_minus_k + i - 1, n_minus_k + i, Scalar::one(field));
        }
        TwoBlockNilpotent {
            field,
            n_minus_k,
            k,
            mat,
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n_minus_k + self.k
    }

    pub fn block_sizes(&self) -> (usize, usize) {
        (self.n_minus_k, self.k)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    /// Standard basis vector `e_i` (1-based, `i <= n - k`).
    pub fn e(&self, i: usize) -> Vec<Scalar> {
        assert!(1 <= i && i <= self.n_minus_k, "e index out of range");
        unit_vector(self.field, self.n(), i - 1)
    }

    /// Standard basis vector `f_i` (1-based, `i <= k`).
    pub fn f(&self, i: usize) -> Vec<Scalar> {
        assert!(1 <= i && i <= self.k, "f index out of range");
        unit_vector(self.field, self.n(), self.n_minus_k + i - 1)
    }

    /// The span of `e_1..e_a, f_1..f_b`.
    pub fn coordinate_space(&self, a: usize, b: usize) -> Subspace {
        let mut vs = Vec::new();
        for i in 1..=a {
            vs.push(self.e(i));
        }
        for i in 1..=b {
            vs.push(self.f(i));
        }
        Subspace::from_vectors(self.field, self.n(), &vs).expect("consistent ambient")
    }
}

pub fn unit_vector(field: FieldSpec, n: usize, idx: usize) -> Vec<Scalar> {
    let mut v = vec![Scalar::zero(field); n];
    v[idx] = Scalar::one(field);
    v
}

/// Linear combination `c1 * v1 + c2 * v2`.
pub fn combine(c1: &Scalar, v1: &[Scalar], c2: &Scalar, v2: &[Scalar]) -> Vec<Scalar> {
    v1.iter()
        .zip(v2)
        .map(|(a, b)| &(c1 * a) + &(c2 * b))
        .collect()
}

/// A complete flag `0 = F_0 < F_1 < ... < F_n = F^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flag {
    field: FieldSpec,
    ambient: usize,
    /// All `n + 1` spaces, from `F_0` to `F_n`.
    spaces: Vec<Subspace>,
}

impl Flag {
    /// Build from the full list `F_0, ..., F_n`, validating dimensions and
    /// nesting.
    pub fn new(spaces: Vec<Subspace>) -> Result<Flag, FlagError> {
        let n = spaces.len().checked_sub(1).ok_or_else(|| {
            FlagError::Validation("a flag needs at least the two extreme spaces".into())
        })?;
        let field = spaces[0].field();
        for (i, s) in spaces.iter().enumerate() {
            if s.field() != field {
                return Err(FlagError::Validation("mixed coefficient fields".into()));
            }
            if s.ambient() != n {
                return Err(FlagError::Validation(format!(
                    "space {i} lives in dimension {}, expected {n}",
                    s.ambient()
                )));
            }
            if s.dim() != i {
                return Err(FlagError::Validation(format!(
                    "dim F_{i} = {}, expected {i}",
                    s.dim()
                )));
            }
            if i > 0 && !s.contains(&spaces[i - 1]) {
                return Err(FlagError::Validation(format!(
                    "F_{} does not contain F_{}",
                    i,
                    i - 1
                )));
            }
        }
        Ok(Flag {
            field,
            ambient: n,
            spaces,
        })
    }

    /// Build from the proper spaces `F_1, ..., F_{n-1}` only.
    pub fn from_inner(field: FieldSpec, n: usize, inner: Vec<Subspace>) -> Result<Flag, FlagError> {
        if inner.len() + 1 != n {
            return Err(FlagError::Validation(format!(
                "expected {} proper subspaces, got {}",
                n.saturating_sub(1),
                inner.len()
            )));
        }
        let mut spaces = Vec::with_capacity(n + 1);
        spaces.push(Subspace::zero(field, n));
        spaces.extend(inner);
        spaces.push(Subspace::full(field, n));
        Flag::new(spaces)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// `F_i` for `0 <= i <= n`.
    pub fn space(&self, i: usize) -> &Subspace {
        &self.spaces[i]
    }

    pub fn spaces(&self) -> &[Subspace] {
        &self.spaces
    }
}

/// Does `x` map each `F_i` into `F_{i-1}`?
pub fn is_x_stable(flag: &Flag, x: &Matrix) -> bool {
    (1..=flag.ambient()).all(|i| flag.space(i - 1).contains(&flag.space(i).apply(x)))
}

/// Iterated preimage `x^{-s} W`.
pub fn inverse_image_power(x: &Matrix, s: usize, w: &Subspace) -> Subspace {
    let mut acc = w.clone();
    for _ in 0..s {
        acc = preimage(x, &acc);
    }
    acc
}

/// The relation an unmarked cup between vertices `i < j` imposes:
/// `F_j = x^{-(j-i+1)/2} F_{i-1}`.
pub fn cup_relation_holds(
    flag: &Flag,
    x: &Matrix,
    i: usize,
    j: usize,
) -> Result<bool, FlagError> {
    if i >= j {
        return Err(FlagError::Validation(format!(
            "cup ({i},{j}) must have i < j"
        )));
    }
    if (j - i + 1) % 2 != 0 {
        return Err(FlagError::BadParity(format!(
            "cup ({i},{j}) spans an odd width {}",
            j - i + 1
        )));
    }
    let s = (j - i + 1) / 2;
    Ok(*flag.space(j) == inverse_image_power(x, s, flag.space(i - 1)))
}

/// The relation a type A ray at vertex `i` imposes, where `rho` counts
/// rays up to and including `i`: `F_i = F_{i-1} + <e_{(i+rho)/2}>` (the
/// sum is automatically direct for a complete flag).
pub fn ray_relation_holds(
    flag: &Flag,
    x: &TwoBlockNilpotent,
    i: usize,
    rho: usize,
) -> Result<bool, FlagError> {
    if (i + rho) % 2 != 0 {
        return Err(FlagError::BadParity(format!(
            "ray at {i} with {rho} rays to its left"
        )));
    }
    let t = (i + rho) / 2;
    let expected = flag.space(i - 1).sum_vector(&x.e(t));
    Ok(*flag.space(i) == expected)
}

/// Equivalent form of the ray relation via powers of `x` only:
/// `F_i = x^{-(i-rho)/2} (x^{n-k-rho} F_n)`.
pub fn ray_relation_alt_holds(
    flag: &Flag,
    x: &TwoBlockNilpotent,
    i: usize,
    rho: usize,
) -> Result<bool, FlagError> {
    if (i + rho) % 2 != 0 {
        return Err(FlagError::BadParity(format!(
            "ray at {i} with {rho} rays to its left"
        )));
    }
    let (n_minus_k, _) = x.block_sizes();
    if n_minus_k < rho {
        return Err(FlagError::Validation(format!(
            "more rays ({rho}) than the large block admits"
        )));
    }
    let fwd = flag
        .space(flag.ambient())
        .apply(&x.matrix().pow(n_minus_k - rho));
    let expected = inverse_image_power(x.matrix(), (i - rho) / 2, &fwd);
    Ok(*flag.space(i) == expected)
}

/// Is the flag in the type A component indexed by the cup diagram?
/// Checks stability plus the cup and ray relations of the diagram.
pub fn in_type_a_component(
    flag: &Flag,
    x: &TwoBlockNilpotent,
    a: &CupDiagram,
) -> Result<bool, FlagError> {
    let n = x.n();
    if a.n() != n || a.k() != x.block_sizes().1 {
        return Err(FlagError::ShapeMismatch(
            (a.n(), a.k()),
            (n, x.block_sizes().1),
        ));
    }
    if flag.ambient() != n {
        return Err(FlagError::Validation(format!(
            "flag ambient {} does not match n = {n}",
            flag.ambient()
        )));
    }
    if !is_x_stable(flag, x.matrix()) {
        return Ok(false);
    }
    for &(i, j) in a.cups() {
        if !cup_relation_holds(flag, x.matrix(), i, j)? {
            return Ok(false);
        }
    }
    for i in a.rays() {
        if !ray_relation_holds(flag, x, i, a.rho(i))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The symmetric bilinear form of the type D flag variety for the shape
/// `(n - k, k)`, as a gram matrix on the standard basis.
///
/// For equal blocks `(m, m)` the form pairs `e`'s with `f`'s through the
/// sign-alternating antidiagonal matrix `J_m`; for unequal blocks it is
/// the direct sum `J_{n-k} + J_k`, where `(J_m)_{r, m+1-r} = (-1)^{r-1}`.
pub fn gram_matrix(
    field: FieldSpec,
    n_minus_k: usize,
    k: usize,
) -> Result<Matrix, FlagError> {
    if !is_type_d_shape(n_minus_k, k) {
        return Err(FlagError::NotTypeDPartition(n_minus_k, k));
    }
    let n = n_minus_k + k;
    let mut g = Matrix::zero(field, n, n);
    let sign = |r: usize| Scalar::from_i64(field, if r % 2 == 1 { 1 } else { -1 });
    if n_minus_k == k {
        let m = k;
        for r in 1..=m {
            // e_r pairs with f_{m+1-r}.
            g.set(r - 1, m + (m + 1 - r) - 1, sign(r));
            g.set(m + (m + 1 - r) - 1, r - 1, sign(r));
        }
    } else {
        for r in 1..=n_minus_k {
            g.set(r - 1, n_minus_k - r, sign(r));
        }
        for r in 1..=k {
            g.set(n_minus_k + r - 1, n_minus_k + (k - r), sign(r));
        }
        if field.characteristic() == 2 {
            return Err(FlagError::UnsupportedCharacteristic(format!(
                "the form for unequal blocks ({n_minus_k},{k}) has odd diagonal entries"
            )));
        }
    }
    Ok(g)
}

/// Value of the quadratic refinement `Q(v) = sum_{i<j} G_ij v_i v_j` of
/// the bilinear form (used to recognise singular vectors in
/// characteristic 2, where the bilinear form alone is too weak).
pub fn quadratic_value(g: &Matrix, v: &[Scalar]) -> Scalar {
    let field = g.field();
    let mut acc = Scalar::zero(field);
    for i in 0..g.rows() {
        for j in (i + 1)..g.cols() {
            acc = &acc + &(&(g.get(i, j) * &v[i]) * &v[j]);
        }
    }
    acc
}

/// Is a subspace totally singular for the quadratic refinement?  (Its
/// polarisation is the bilinear form, so it suffices to check basis
/// vectors and their pairings.)
fn totally_singular(w: &Subspace, g: &Matrix) -> bool {
    let basis = w.basis_vectors();
    for (idx, u) in basis.iter().enumerate() {
        if !quadratic_value(g, u).is_zero() {
            return false;
        }
        for v in &basis[idx + 1..] {
            let gu = g.apply(v);
            let mut pair = Scalar::zero(g.field());
            for (a, b) in u.iter().zip(&gu) {
                pair = &pair + &(a * b);
            }
            if !pair.is_zero() {
                return false;
            }
        }
    }
    true
}

/// Is the flag isotropic: `F_{n-i} = F_i`-perp for all `i` (plus total
/// singularity of the middle space in characteristic 2)?
pub fn is_isotropic_flag(flag: &Flag, g: &Matrix) -> Result<bool, FlagError> {
    let n = flag.ambient();
    if g.rows() != n {
        return Err(FlagError::Validation(format!(
            "gram matrix is {}x{}, flag ambient is {n}",
            g.rows(),
            g.cols()
        )));
    }
    for i in 0..=n / 2 {
        if *flag.space(n - i) != flag.space(i).orth_complement(g)? {
            return Ok(false);
        }
    }
    if flag.field().characteristic() == 2 {
        // The bilinear condition admits spurious vectors in
        // characteristic 2; require the quadratic refinement to vanish on
        // the middle space (hence on all smaller ones).
        if !totally_singular(flag.space(n / 2), g) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of testing a flag against all relations of a marked cup
/// diagram: one labelled verdict per relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationReport {
    pub items: Vec<(String, bool)>,
    pub all_hold: bool,
}

impl RelationReport {
    fn from_items(items: Vec<(String, bool)>) -> RelationReport {
        let all_hold = items.iter().all(|&(_, ok)| ok);
        RelationReport { items, all_hold }
    }
}

/// Test a flag against the component of the type D Springer fiber indexed
/// by a marked cup diagram.  The report lists stability, isotropy and one
/// entry per diagram feature.
pub fn in_type_d_component(
    flag: &Flag,
    x: &TwoBlockNilpotent,
    adot: &MarkedCupDiagram,
) -> Result<RelationReport, FlagError> {
    let (n_minus_k, k) = adot.shape();
    if x.block_sizes() != (n_minus_k, k) {
        return Err(FlagError::ShapeMismatch((n_minus_k, k), x.block_sizes()));
    }
    let n = n_minus_k + k;
    if flag.ambient() != n {
        return Err(FlagError::Validation(format!(
            "flag ambient {} does not match n = {n}",
            flag.ambient()
        )));
    }
    let g = gram_matrix(flag.field(), n_minus_k, k)?;
    let equal_blocks = n_minus_k == k;
    let mut items = Vec::new();
    items.push(("stable".to_string(), is_x_stable(flag, x.matrix())));
    items.push(("isotropic".to_string(), is_isotropic_flag(flag, &g)?));
    for &(i, j, marked) in adot.cups() {
        if (j - i + 1) % 2 != 0 {
            return Err(FlagError::BadParity(format!(
                "cup ({i},{j}) spans an odd width"
            )));
        }
        let s = (j - i + 1) / 2;
        if marked {
            // x^s F_j + F_{i-1} = F_i  and  x^{(n-2j)/2} F_j-perp = F_j.
            let fwd = flag.space(j).apply(&x.matrix().pow(s));
            let first = fwd.sum(flag.space(i - 1))? == *flag.space(i);
            if (n - 2 * j) % 2 != 0 {
                return Err(FlagError::BadParity(format!(
                    "marked cup ({i},{j}) needs n - 2j even"
                )));
            }
            let perp = flag.space(j).orth_complement(&g)?;
            let second = perp.apply(&x.matrix().pow((n - 2 * j) / 2)) == *flag.space(j);
            items.push((format!("cup {i}-{j}*"), first && second));
        } else {
            items.push((
                format!("cup {i}-{j}"),
                cup_relation_holds(flag, x.matrix(), i, j)?,
            ));
        }
    }
    let rightmost = adot.rightmost_ray();
    for &(i, marked) in adot.rays() {
        let c = adot.cups_left_of(i);
        let label = format!("ray {i}{}", if marked { "*" } else { "" });
        let expected = if equal_blocks {
            if (i + 1) % 2 != 0 {
                return Err(FlagError::BadParity(format!(
                    "equal-block ray at even vertex {i}"
                )));
            }
            if marked {
                x.coordinate_space((i - 1) / 2, (i + 1) / 2)
            } else {
                x.coordinate_space((i + 1) / 2, (i - 1) / 2)
            }
        } else if Some(i) == rightmost {
            // A ray ending at the last vertex of an odd-length diagram
            // pairs both chain generators with themselves, so the glue
            // vector is isotropic only with a square root of -1 as the
            // mixing coefficient; fields without one contribute no points.
            let m = n / 2;
            let gamma = if i == m && m % 2 == 1 {
                match sqrt_minus_one(flag.field()) {
                    Some(g) => g,
                    None => {
                        items.push((label, false));
                        continue;
                    }
                }
            } else {
                Scalar::one(flag.field())
            };
            let coeff = if marked { gamma } else { gamma.negate() };
            let extra = combine(&Scalar::one(flag.field()), &x.f(c + 1), &coeff, &x.e(i - c));
            x.coordinate_space(i - c - 1, c).sum_vector(&extra)
        } else {
            // Non-rightmost rays are never marked (the diagram validator
            // enforces this).
            x.coordinate_space(i - c, c)
        };
        items.push((label, *flag.space(i) == expected));
    }
    Ok(RelationReport::from_items(items))
}

/// Complete a half flag `F_1, ..., F_m` (`m = n / 2`) to the full
/// isotropic flag with `F_{n-i} = F_i`-perp.
pub fn complete_isotropic_flag(
    field: FieldSpec,
    g: &Matrix,
    half: &[Subspace],
) -> Result<Flag, FlagError> {
    let n = g.rows();
    if half.len() != n / 2 || n % 2 != 0 {
        return Err(FlagError::Validation(format!(
            "expected {} half spaces for ambient {n}, got {}",
            n / 2,
            half.len()
        )));
    }
    let mut spaces = Vec::with_capacity(n + 1);
    spaces.push(Subspace::zero(field, n));
    spaces.extend(half.iter().cloned());
    for i in (0..n / 2).rev() {
        spaces.push(spaces[i].orth_complement(g)?);
    }
    Flag::new(spaces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_diagram;
    use crate::diagram::Diagram;

    const QQ: FieldSpec = FieldSpec::Rationals;
    const F5: FieldSpec = FieldSpec::Prime(5);

    fn type_a(src: &str) -> CupDiagram {
        match parse_diagram(src).unwrap() {
            Diagram::TypeA(d) => d,
            _ => panic!("expected type A"),
        }
    }

    fn type_d(src: &str) -> MarkedCupDiagram {
        match parse_diagram(src).unwrap() {
            Diagram::TypeD(d) => d,
            _ => panic!("expected type D"),
        }
    }

    #[test]
    fn nilpotent_structure() {
        let x = TwoBlockNilpotent::new(QQ, 3, 2);
        let m = x.matrix();
        // e_2 -> e_1, f_2 -> f_1, e_1 -> 0, f_1 -> 0.
        assert_eq!(m.apply(&x.e(2)), x.e(1));
        assert_eq!(m.apply(&x.f(2)), x.f(1));
        assert!(m.apply(&x.e(1)).iter().all(Scalar::is_zero));
        assert!(m.apply(&x.f(1)).iter().all(Scalar::is_zero));
        assert!(m.pow(3).is_zero());
        assert!(!m.pow(2).is_zero());
    }

    #[test]
    fn gram_matrix_equal_blocks() {
        let g = gram_matrix(QQ, 2, 2).unwrap();
        let expected = Matrix::from_i64_rows(
            QQ,
            &[
                &[0, 0, 0, 1],
                &[0, 0, -1, 0],
                &[0, -1, 0, 0],
                &[1, 0, 0, 0],
            ],
        );
        assert_eq!(g, expected);
    }

    #[test]
    fn gram_matrix_unequal_blocks() {
        let g = gram_matrix(QQ, 3, 1).unwrap();
        let expected = Matrix::from_i64_rows(
            QQ,
            &[
                &[0, 0, 1, 0],
                &[0, -1, 0, 0],
                &[1, 0, 0, 0],
                &[0, 0, 0, 1],
            ],
        );
        assert_eq!(g, expected);
        assert!(matches!(
            gram_matrix(QQ, 4, 2),
            Err(FlagError::NotTypeDPartition(4, 2))
        ));
        // Characteristic 2 rejects unequal blocks but accepts equal ones.
        assert!(matches!(
            gram_matrix(FieldSpec::Prime(2), 3, 1),
            Err(FlagError::UnsupportedCharacteristic(_))
        ));
        assert!(gram_matrix(FieldSpec::Prime(2), 1, 1).is_ok());
    }

    #[test]
    fn nilpotent_is_skew_adjoint_for_gram() {
        for (nk, k) in [(1, 1), (2, 2), (3, 3), (3, 1), (5, 3), (5, 5), (5, 1)] {
            let x = TwoBlockNilpotent::new(QQ, nk, k);
            let g = gram_matrix(QQ, nk, k).unwrap();
            let lhs = x.matrix().transpose().try_mul(&g).unwrap();
            let rhs = g.try_mul(x.matrix()).unwrap();
            assert!(
                lhs.try_add(&rhs).unwrap().is_zero(),
                "shape ({nk},{k}): x is not in the orthogonal Lie algebra"
            );
        }
    }

    #[test]
    fn flag_validation() {
        let x = TwoBlockNilpotent::new(QQ, 2, 1);
        let f1 = Subspace::line(QQ, &x.e(1));
        let f2 = f1.sum_vector(&x.f(1));
        let flag = Flag::from_inner(QQ, 3, vec![f1.clone(), f2.clone()]).unwrap();
        assert!(is_x_stable(&flag, x.matrix()));
        // Wrong nesting is rejected.
        let other = Subspace::line(QQ, &x.f(1)).sum_vector(&x.e(2));
        assert!(Flag::from_inner(QQ, 3, vec![f1.clone(), other]).is_err());
        // Wrong count is rejected.
        assert!(Flag::from_inner(QQ, 3, vec![f1]).is_err());
        // A non-stable flag: F_1 = <e_2> is not killed into F_0.
        let g1 = Subspace::line(QQ, &x.e(2));
        let g2 = g1.sum_vector(&x.e(1));
        let bad = Flag::from_inner(QQ, 3, vec![g1, g2]).unwrap();
        assert!(!is_x_stable(&bad, x.matrix()));
    }

    #[test]
    fn cup_and_ray_relations_small() {
        // n = 3, k = 1, diagram with cup (1,2) and ray 3:
        // F_2 = x^{-1} F_0 = ker x = <e_1, f_1>, F_3 adds e_2.
        let x = TwoBlockNilpotent::new(QQ, 2, 1);
        let a = type_a("A n=3 k=1: 1-2");
        let f1 = Subspace::line(QQ, &x.f(1));
        let f2 = f1.sum_vector(&x.e(1));
        let flag = Flag::from_inner(QQ, 3, vec![f1, f2]).unwrap();
        assert!(in_type_a_component(&flag, &x, &a).unwrap());
        // The same flag fails the diagram with cup (2,3).
        let b = type_a("A n=3 k=1: 2-3");
        assert!(!in_type_a_component(&flag, &x, &b).unwrap());
        // And the member of that other component passes.
        let g1 = Subspace::line(QQ, &x.e(1));
        let g2 = g1.sum_vector(&x.f(1));
        let other = Flag::from_inner(QQ, 3, vec![g1.clone(), g2]).unwrap();
        assert!(in_type_a_component(&other, &x, &b).unwrap());
        // That flag happens to lie in both components (components are
        // closed and intersect); a flag with F_2 = <e_1, e_2> lies in the
        // second only.
        let h2 = g1.sum_vector(&x.e(2));
        let third = Flag::from_inner(QQ, 3, vec![g1, h2]).unwrap();
        assert!(in_type_a_component(&third, &x, &b).unwrap());
        assert!(!in_type_a_component(&third, &x, &a).unwrap());
    }

    #[test]
    fn parity_errors() {
        let x = TwoBlockNilpotent::new(QQ, 2, 2);
        let f1 = Subspace::line(QQ, &x.e(1));
        let f2 = f1.sum_vector(&x.f(1));
        let f3 = f2.sum_vector(&x.e(2));
        let flag = Flag::from_inner(QQ, 4, vec![f1, f2, f3]).unwrap();
        assert!(matches!(
            cup_relation_holds(&flag, x.matrix(), 1, 3),
            Err(FlagError::BadParity(_))
        ));
        assert!(matches!(
            ray_relation_holds(&flag, &x, 2, 1),
            Err(FlagError::BadParity(_))
        ));
    }

    #[test]
    fn ray_relation_two_forms_agree() {
        // Shape (3,1), diagram: rays 1, 2 and cup (3,4) — check both ray
        // forms on members and non-members.
        let x = TwoBlockNilpotent::new(QQ, 3, 1);
        let e1 = Subspace::line(QQ, &x.e(1));
        let e12 = e1.sum_vector(&x.e(2));
        let e12f = e12.sum_vector(&x.f(1));
        let flag = Flag::from_inner(QQ, 4, vec![e1.clone(), e12.clone(), e12f]).unwrap();
        for (i, rho) in [(1, 1), (2, 2)] {
            assert_eq!(
                ray_relation_holds(&flag, &x, i, rho).unwrap(),
                ray_relation_alt_holds(&flag, &x, i, rho).unwrap()
            );
            assert!(ray_relation_holds(&flag, &x, i, rho).unwrap());
        }
        // A flag whose F_1 is <f_1> fails both forms at the first ray.
        let f1 = Subspace::line(QQ, &x.f(1));
        let f1e = f1.sum_vector(&x.e(1));
        let f1e2 = f1e.sum_vector(&x.e(2));
        let bad = Flag::from_inner(QQ, 4, vec![f1, f1e, f1e2]).unwrap();
        assert!(!ray_relation_holds(&bad, &x, 1, 1).unwrap());
        assert!(!ray_relation_alt_holds(&bad, &x, 1, 1).unwrap());
    }

    #[test]
    fn isotropic_flag_equal_blocks() {
        let x = TwoBlockNilpotent::new(QQ, 2, 2);
        let g = gram_matrix(QQ, 2, 2).unwrap();
        // <e_1> < <e_1, f_1> < <e_1, f_1, e_2> is the perp-completion of
        // its own half.
        let f1 = Subspace::line(QQ, &x.e(1));
        let f2 = f1.sum_vector(&x.f(1));
        let flag = complete_isotropic_flag(QQ, &g, &[f1.clone(), f2.clone()]).unwrap();
        assert!(is_isotropic_flag(&flag, &g).unwrap());
        assert_eq!(*flag.space(3), f2.sum_vector(&x.e(2)));
        // Perp completion of a stable half stays stable.
        assert!(is_x_stable(&flag, x.matrix()));
        // The all-e half <e_1> < <e_1, e_2> is also Lagrangian, hence
        // isotropic.
        let e2 = f1.sum_vector(&x.e(2));
        let lagr = complete_isotropic_flag(QQ, &g, &[f1.clone(), e2]).unwrap();
        assert!(is_isotropic_flag(&lagr, &g).unwrap());
        // But F_2 = <e_1, f_2> pairs nontrivially with itself and fails.
        let g2 = f1.sum_vector(&x.f(2));
        let g3 = g2.sum_vector(&x.f(1));
        let skew = Flag::from_inner(QQ, 4, vec![f1, g2, g3]).unwrap();
        assert!(!is_isotropic_flag(&skew, &g).unwrap());
    }

    #[test]
    fn characteristic_two_needs_quadratic_refinement() {
        // Over F_2 the bilinear condition alone would accept the line
        // <e_1 + f_1> in the (1,1) space; the quadratic refinement
        // rejects it.
        let field = FieldSpec::Prime(2);
        let g = gram_matrix(field, 1, 1).unwrap();
        let mixed = vec![Scalar::one(field), Scalar::one(field)];
        let line = Subspace::line(field, &mixed);
        // Bilinear: v G v = 2 = 0 in F_2.
        let gv = g.apply(&mixed);
        let pair = mixed
            .iter()
            .zip(&gv)
            .fold(Scalar::zero(field), |acc, (a, b)| &acc + &(a * b));
        assert!(pair.is_zero());
        // Quadratic: Q(v) = 1, so the line is not totally singular.
        assert!(!quadratic_value(&g, &mixed).is_zero());
        let flag = complete_isotropic_flag(field, &g, &[line]).unwrap();
        assert!(!is_isotropic_flag(&flag, &g).unwrap());
        // The two coordinate lines remain acceptable.
        for v in [
            unit_vector(field, 2, 0),
            unit_vector(field, 2, 1),
        ] {
            let fl = complete_isotropic_flag(field, &g, &[Subspace::line(field, &v)]).unwrap();
            assert!(is_isotropic_flag(&fl, &g).unwrap());
        }
    }

    #[test]
    fn marked_relations_tiny_shapes() {
        // Shape (1,1): the unmarked ray forces <e_1>, the marked ray
        // forces <f_1>.
        let x = TwoBlockNilpotent::new(QQ, 1, 1);
        let e_flag = complete_isotropic_flag(
            QQ,
            &gram_matrix(QQ, 1, 1).unwrap(),
            &[Subspace::line(QQ, &x.e(1))],
        )
        .unwrap();
        let f_flag = complete_isotropic_flag(
            QQ,
            &gram_matrix(QQ, 1, 1).unwrap(),
            &[Subspace::line(QQ, &x.f(1))],
        )
        .unwrap();
        let plain = type_d("D m=1 cups=0: 1");
        let marked = type_d("D m=1 cups=0: 1*");
        assert!(in_type_d_component(&e_flag, &x, &plain).unwrap().all_hold);
        assert!(!in_type_d_component(&e_flag, &x, &marked).unwrap().all_hold);
        assert!(in_type_d_component(&f_flag, &x, &marked).unwrap().all_hold);
        assert!(!in_type_d_component(&f_flag, &x, &plain).unwrap().all_hold);
    }

    #[test]
    fn marked_relations_equal_blocks_cups() {
        // Shape (2,2) over F_5: the unmarked cup fixes F_2 = ker x; the
        // marked cup fixes F_2 = <v, w> with x w = v, w outside ker x.
        let x = TwoBlockNilpotent::new(F5, 2, 2);
        let g = gram_matrix(F5, 2, 2).unwrap();
        let plain = type_d("D m=2 cups=1: 1-2");
        let marked = type_d("D m=2 cups=1: 1-2*");
        // Family member with [lambda : mu] = [1 : 1].
        let one = Scalar::one(F5);
        let v1 = combine(&one, &x.e(1), &one, &x.f(1));
        let v2 = combine(&one, &x.e(2), &one, &x.f(2));
        let f1 = Subspace::line(F5, &v1);
        let plain_flag =
            complete_isotropic_flag(F5, &g, &[f1.clone(), f1.sum_vector(&x.f(1))]).unwrap();
        let marked_flag =
            complete_isotropic_flag(F5, &g, &[f1.clone(), f1.sum_vector(&v2)]).unwrap();
        let report = in_type_d_component(&plain_flag, &x, &plain).unwrap();
        assert!(report.all_hold, "{:?}", report.items);
        let report = in_type_d_component(&marked_flag, &x, &marked).unwrap();
        assert!(report.all_hold, "{:?}", report.items);
        // Cross memberships fail.
        assert!(!in_type_d_component(&plain_flag, &x, &marked).unwrap().all_hold);
        assert!(!in_type_d_component(&marked_flag, &x, &plain).unwrap().all_hold);
    }

    #[test]
    fn marked_relations_unequal_rays() {
        // Shape (3,1): two rays; the rightmost ray takes f_1 -+ e_2.
        let x = TwoBlockNilpotent::new(QQ, 3, 1);
        let g = gram_matrix(QQ, 3, 1).unwrap();
        let e1 = Subspace::line(QQ, &x.e(1));
        let minus = combine(
            &Scalar::one(QQ),
            &x.f(1),
            &Scalar::from_i64(QQ, -1),
            &x.e(2),
        );
        let plus = combine(&Scalar::one(QQ), &x.f(1), &Scalar::one(QQ), &x.e(2));
        let plain_flag =
            complete_isotropic_flag(QQ, &g, &[e1.clone(), e1.sum_vector(&minus)]).unwrap();
        let marked_flag =
            complete_isotropic_flag(QQ, &g, &[e1.clone(), e1.sum_vector(&plus)]).unwrap();
        let plain = type_d("D m=2 cups=0: 1, 2");
        let marked = type_d("D m=2 cups=0: 1, 2*");
        assert!(in_type_d_component(&plain_flag, &x, &plain).unwrap().all_hold);
        assert!(in_type_d_component(&marked_flag, &x, &marked).unwrap().all_hold);
        assert!(!in_type_d_component(&plain_flag, &x, &marked).unwrap().all_hold);
        assert!(!in_type_d_component(&marked_flag, &x, &plain).unwrap().all_hold);
    }

    #[test]
    fn rightmost_ray_at_odd_end_needs_root_of_minus_one() {
        // Shape (5,1), rays only: the last ray glues f_1 with e_3 and both
        // vectors pair with themselves, so the mixing coefficient must
        // square to -1.  Over F_5 that is +-2; over F_3 and Q no such
        // scalar exists and the components have no points at all.
        let plain = type_d("D m=3 cups=0: 1, 2, 3");
        let marked = type_d("D m=3 cups=0: 1, 2, 3*");
        let x = TwoBlockNilpotent::new(F5, 5, 1);
        let g = gram_matrix(F5, 5, 1).unwrap();
        let e1 = Subspace::line(F5, &x.e(1));
        let e12 = e1.sum_vector(&x.e(2));
        let two = Scalar::from_i64(F5, 2);
        let minus = combine(&Scalar::one(F5), &x.f(1), &two.negate(), &x.e(3));
        let plus = combine(&Scalar::one(F5), &x.f(1), &two, &x.e(3));
        let plain_flag =
            complete_isotropic_flag(F5, &g, &[e1.clone(), e12.clone(), e12.sum_vector(&minus)])
                .unwrap();
        let marked_flag =
            complete_isotropic_flag(F5, &g, &[e1.clone(), e12.clone(), e12.sum_vector(&plus)])
                .unwrap();
        assert!(in_type_d_component(&plain_flag, &x, &plain).unwrap().all_hold);
        assert!(in_type_d_component(&marked_flag, &x, &marked).unwrap().all_hold);
        assert!(!in_type_d_component(&plain_flag, &x, &marked).unwrap().all_hold);
        assert!(!in_type_d_component(&marked_flag, &x, &plain).unwrap().all_hold);
        // The integral versions of the glue vector are not even isotropic,
        // so nothing can satisfy the relation over Q: the ray item reads
        // false rather than erroring.
        let xq = TwoBlockNilpotent::new(QQ, 5, 1);
        let gq = gram_matrix(QQ, 5, 1).unwrap();
        let q_e1 = Subspace::line(QQ, &xq.e(1));
        let q_e12 = q_e1.sum_vector(&xq.e(2));
        let q_f = q_e12.sum_vector(&xq.f(1));
        let naive = complete_isotropic_flag(QQ, &gq, &[q_e1, q_e12, q_f]).unwrap();
        let report = in_type_d_component(&naive, &xq, &plain).unwrap();
        let ray3 = report.items.iter().find(|(l, _)| l == "ray 3").unwrap();
        assert!(!ray3.1);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let x = TwoBlockNilpotent::new(QQ, 2, 2);
        let a = type_a("A n=3 k=1: 1-2");
        let f1 = Subspace::line(QQ, &x.e(1));
        let f2 = f1.sum_vector(&x.f(1));
        let f3 = f2.sum_vector(&x.e(2));
        let flag = Flag::from_inner(QQ, 4, vec![f1, f2, f3]).unwrap();
        assert!(matches!(
            in_type_a_component(&flag, &x, &a),
            Err(FlagError::ShapeMismatch(..))
        ));
    }
}
