//! Framed representations of the linear quiver attached to a two-row
//! nilpotent, and the translation from such representations to complete
//! flags.
//!
//! For block sizes `(n - k, k)` the quiver has vertices `1 .. n-1` with
//! `dim V_i = min(i, k, n - i)`.  For `n > 2k` there are one-dimensional
//! framing spaces `D_k` and `D_{n-k}`; for `n = 2k` there is a single
//! two-dimensional framing `D_k` at the middle vertex whose ordered basis
//! is `(f, e)`.  A representation carries maps `A_i: V_i -> V_{i+1}`,
//! `B_i: V_{i+1} -> V_i`, `Gamma_j: D_j -> V_j` and `Delta_j: V_j -> D_j`;
//! out-of-range indices denote the zero map to or from the zero space.
//!
//! The module provides: admissibility and stability, membership tests for
//! the components indexed by cup diagrams (plain and marked), the duality
//! involution with its fixed-point test, the enlarged "tilde"
//! representation whose framing sits entirely at vertex 1, and the
//! resulting flag, plus a seeded sampler for stable representations with
//! `Delta = 0`.

use crate::diagram::{CupDiagram, MarkedCupDiagram};
use crate::flag::{Flag, FlagError, RelationReport};
use exact_linalg::scalar::sqrt_minus_one;
use exact_linalg::subspace::LinalgError;
use exact_linalg::{kernel, image, solve_linear, AffineSolutionSet, FieldSpec, Matrix, Scalar, Subspace};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuiverError {
    #[error("{name} has shape {found_rows}x{found_cols}, expected {rows}x{cols}")]
    ShapeMismatch {
        name: String,
        rows: usize,
        cols: usize,
        found_rows: usize,
        found_cols: usize,
    },
    #[error("mixed coefficient fields")]
    FieldMismatch,
    #[error("block sizes must satisfy n - k >= k: ({0},{1})")]
    BadBlockSizes(usize, usize),
    #[error("diagram shape {0:?} does not match representation shape {1:?}")]
    DiagramMismatch((usize, usize), (usize, usize)),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("representation is not stable: {0}")]
    NotStable(String),
    #[error(transparent)]
    Flag(#[from] FlagError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `dim V_i = min(i, k, n - i)` for the inner vertices `1 .. n-1`.
pub fn dim_vector(n: usize, k: usize) -> Vec<usize> {
    (1..n).map(|i| i.min(k).min(n - i)).collect()
}

fn vdim(n: usize, k: usize, i: usize) -> usize {
    if i == 0 || i >= n {
        0
    } else {
        i.min(k).min(n - i)
    }
}

/// The vertices carrying framing spaces: `{k, n-k}` when `n > 2k >= 2`,
/// the single vertex `k` when `n = 2k`, none when `k = 0`.
pub fn framing_vertices(n: usize, k: usize) -> Vec<usize> {
    if k == 0 {
        Vec::new()
    } else if n == 2 * k {
        vec![k]
    } else {
        vec![k, n - k]
    }
}

/// Dimension of the framing space at vertex `j` (2 at the middle vertex
/// when the blocks are equal, otherwise 1).
pub fn framing_dim(n: usize, k: usize, j: usize) -> usize {
    if n == 2 * k && j == k {
        2
    } else {
        1
    }
}

/// The involution of the two-dimensional framing in the equal-block case:
/// `f -> (-1)^k f`, `e -> e`, as a matrix on the ordered basis `(f, e)`.
pub fn framing_involution(field: FieldSpec, k: usize) -> Matrix {
    let mut s = Matrix::identity(field, 2);
    if k % 2 == 1 {
        s.set(0, 0, Scalar::from_i64(field, -1));
    }
    s
}

/// A framed representation of the linear quiver for block sizes
/// `(n - k, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuiverRep {
    field: FieldSpec,
    n: usize,
    k: usize,
    /// `a[i-1] = A_i : V_i -> V_{i+1}` for `i = 1 .. n-2`.
    a: Vec<Matrix>,
    /// `b[i-1] = B_i : V_{i+1} -> V_i` for `i = 1 .. n-2`.
    b: Vec<Matrix>,
    gamma: BTreeMap<usize, Matrix>,
    delta: BTreeMap<usize, Matrix>,
}

impl QuiverRep {
    pub fn new(
        field: FieldSpec,
        n: usize,
        k: usize,
        a: Vec<Matrix>,
        b: Vec<Matrix>,
        gamma: Vec<(usize, Matrix)>,
        delta: Vec<(usize, Matrix)>,
    ) -> Result<QuiverRep, QuiverError> {
        if n < k + k {
            return Err(QuiverError::BadBlockSizes(n - k.min(n), k));
        }
        let interior = n.saturating_sub(2);
        let expect_shape = |name: String, m: &Matrix, rows: usize, cols: usize| {
            if m.field() != field {
                return Err(QuiverError::FieldMismatch);
            }
            if m.rows() != rows || m.cols() != cols {
                return Err(QuiverError::ShapeMismatch {
                    name,
                    rows,
                    cols,
                    found_rows: m.rows(),
                    found_cols: m.cols(),
                });
            }
            Ok(())
        };
        if a.len() != interior || b.len() != interior {
            return Err(QuiverError::Validation(format!(
                "expected {interior} forward and backward maps, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        for i in 1..=interior {
            expect_shape(
                format!("A_{i}"),
                &a[i - 1],
                vdim(n, k, i + 1),
                vdim(n, k, i),
            )?;
            expect_shape(
                format!("B_{i}"),
                &b[i - 1],
                vdim(n, k, i),
                vdim(n, k, i + 1),
            )?;
        }
        let verts = framing_vertices(n, k);
        let gamma: BTreeMap<usize, Matrix> = gamma.into_iter().collect();
        let delta: BTreeMap<usize, Matrix> = delta.into_iter().collect();
        let keys: Vec<usize> = gamma.keys().copied().collect();
        if keys != verts || delta.keys().copied().collect::<Vec<_>>() != verts {
            return Err(QuiverError::Validation(format!(
                "framing maps must be given exactly at vertices {verts:?}"
            )));
        }
        for &j in &verts {
            let d = framing_dim(n, k, j);
            expect_shape(format!("Gamma_{j}"), &gamma[&j], vdim(n, k, j), d)?;
            expect_shape(format!("Delta_{j}"), &delta[&j], d, vdim(n, k, j))?;
        }
        Ok(QuiverRep {
            field,
            n,
            k,
            a,
            b,
            gamma,
            delta,
        })
    }

    /// Representation with `Delta = 0` (the case relevant to Springer
    /// fibers).
    pub fn springer(
        field: FieldSpec,
        n: usize,
        k: usize,
        a: Vec<Matrix>,
        b: Vec<Matrix>,
        gamma: Vec<(usize, Matrix)>,
    ) -> Result<QuiverRep, QuiverError> {
        let delta = framing_vertices(n, k)
            .into_iter()
            .map(|j| {
                (
                    j,
                    Matrix::zero(field, framing_dim(n, k, j), vdim(n, k, j)),
                )
            })
            .collect();
        QuiverRep::new(field, n, k, a, b, gamma, delta)
    }

    /// The all-zero representation (stable only in degenerate shapes).
    pub fn zero(field: FieldSpec, n: usize, k: usize) -> Result<QuiverRep, QuiverError> {
        let interior = n.saturating_sub(2);
        let a = (1..=interior)
            .map(|i| Matrix::zero(field, vdim(n, k, i + 1), vdim(n, k, i)))
            .collect();
        let b = (1..=interior)
            .map(|i| Matrix::zero(field, vdim(n, k, i), vdim(n, k, i + 1)))
            .collect();
        let gamma = framing_vertices(n, k)
            .into_iter()
            .map(|j| {
                (
                    j,
                    Matrix::zero(field, vdim(n, k, j), framing_dim(n, k, j)),
                )
            })
            .collect();
        QuiverRep::springer(field, n, k, a, b, gamma)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn block_sizes(&self) -> (usize, usize) {
        (self.n - self.k, self.k)
    }

    /// `dim V_i`, with the convention `V_0 = V_n = 0`.
    pub fn v(&self, i: usize) -> usize {
        vdim(self.n, self.k, i)
    }

    /// `A_i : V_i -> V_{i+1}` for `0 <= i <= n-1` (zero-shaped at the
    /// boundary).
    pub fn a_map(&self, i: usize) -> Matrix {
        if (1..self.n.saturating_sub(1)).contains(&i) {
            self.a[i - 1].clone()
        } else {
            Matrix::zero(self.field, self.v(i + 1), self.v(i))
        }
    }

    /// `B_i : V_{i+1} -> V_i` for `0 <= i <= n-1`.
    pub fn b_map(&self, i: usize) -> Matrix {
        if (1..self.n.saturating_sub(1)).contains(&i) {
            self.b[i - 1].clone()
        } else {
            Matrix::zero(self.field, self.v(i), self.v(i + 1))
        }
    }

    pub fn gamma(&self, j: usize) -> Option<&Matrix> {
        self.gamma.get(&j)
    }

    pub fn delta(&self, j: usize) -> Option<&Matrix> {
        self.delta.get(&j)
    }

    /// `A_{p -> q} = A_{q-1} ... A_p : V_p -> V_q` (`p <= q`).
    pub fn path_a(&self, p: usize, q: usize) -> Matrix {
        assert!(p <= q, "forward path needs p <= q");
        let mut acc = Matrix::identity(self.field, self.v(p));
        for t in p..q {
            acc = self.a_map(t).try_mul(&acc).expect("path shapes agree");
        }
        acc
    }

    /// `B_{q -> p} = B_p B_{p+1} ... B_{q-1} : V_q -> V_p` (`p <= q`).
    pub fn path_b(&self, q: usize, p: usize) -> Matrix {
        assert!(p <= q, "backward path needs p <= q");
        let mut acc = Matrix::identity(self.field, self.v(q));
        for t in (p..q).rev() {
            acc = self.b_map(t).try_mul(&acc).expect("path shapes agree");
        }
        acc
    }

    /// The composite `D_j -> V_j -> ... -> V_i` (forward via `A` when
    /// `j <= i`, backward via `B` when `j >= i`).
    pub fn gamma_path(&self, j: usize, i: usize) -> Matrix {
        let g = self.gamma.get(&j).expect("framing vertex");
        let path = if j >= i {
            self.path_b(j, i)
        } else {
            self.path_a(j, i)
        };
        path.try_mul(g).expect("path shapes agree")
    }

    /// The composite `V_src -> ... -> V_j -> D_j`.
    pub fn delta_path(&self, src: usize, j: usize) -> Matrix {
        let d = self.delta.get(&j).expect("framing vertex");
        let path = if src >= j {
            self.path_b(src, j)
        } else {
            self.path_a(src, j)
        };
        d.try_mul(&path).expect("path shapes agree")
    }

    /// Path from the framing letter `e` into `V_i`, as a `v_i x 1` matrix.
    /// (`e` spans `D_{n-k}` for unequal blocks and the second coordinate
    /// of `D_k` for equal ones.)
    pub fn gamma_into_e(&self, i: usize) -> Matrix {
        if self.k == 0 {
            Matrix::zero(self.field, self.v(i), 1)
        } else if self.n > 2 * self.k {
            self.gamma_path(self.n - self.k, i)
        } else {
            column(&self.gamma_path(self.k, i), 1)
        }
    }

    /// Path from the framing letter `f` into `V_i` (requires `k >= 1`).
    pub fn gamma_into_f(&self, i: usize) -> Matrix {
        assert!(self.k >= 1, "no f letter when k = 0");
        if self.n > 2 * self.k {
            self.gamma_path(self.k, i)
        } else {
            column(&self.gamma_path(self.k, i), 0)
        }
    }

    /// Path from `V_src` onto the framing letter `e`, as a `1 x v_src`
    /// matrix.
    pub fn delta_from_e(&self, src: usize) -> Matrix {
        if self.k == 0 {
            Matrix::zero(self.field, 1, self.v(src))
        } else if self.n > 2 * self.k {
            self.delta_path(src, self.n - self.k)
        } else {
            row(&self.delta_path(src, self.k), 1)
        }
    }

    /// Path from `V_src` onto the framing letter `f` (requires `k >= 1`).
    pub fn delta_from_f(&self, src: usize) -> Matrix {
        assert!(self.k >= 1, "no f letter when k = 0");
        if self.n > 2 * self.k {
            self.delta_path(src, self.k)
        } else {
            row(&self.delta_path(src, self.k), 0)
        }
    }

    /// Do the moment-map equations
    /// `B_i A_i = A_{i-1} B_{i-1} + Gamma_i Delta_i` hold at every vertex?
    pub fn is_admissible(&self) -> bool {
        for i in 1..self.n {
            let lhs = self.b_map(i).try_mul(&self.a_map(i)).expect("shape");
            let mut rhs = self
                .a_map(i - 1)
                .try_mul(&self.b_map(i - 1))
                .expect("shape");
            if let (Some(g), Some(d)) = (self.gamma.get(&i), self.delta.get(&i)) {
                rhs = rhs.try_add(&g.try_mul(d).expect("shape")).expect("shape");
            }
            if lhs != rhs {
                return false;
            }
        }
        true
    }

    /// Is every `V_i` generated by the incoming forward map together with
    /// the framing paths from vertices `>= i`?
    pub fn is_stable(&self) -> bool {
        for i in 1..self.n {
            let mut acc = image(&self.a_map(i - 1));
            for &j in self.gamma.keys() {
                if j >= i {
                    acc = acc
                        .sum(&image(&self.gamma_path(j, i)))
                        .expect("same ambient");
                }
            }
            if !acc.is_full() {
                return false;
            }
        }
        true
    }

    pub fn delta_is_zero(&self) -> bool {
        self.delta.values().all(Matrix::is_zero)
    }

    /// Admissible, stable, and `Delta = 0`: the locus that maps onto the
    /// Springer fiber.
    pub fn is_springer_point(&self) -> bool {
        self.delta_is_zero() && self.is_admissible() && self.is_stable()
    }

    /// The relation a cup between vertices `i < j` imposes: equality of
    /// the kernels of the two path maps out of the cup's midpoint.
    pub fn cup_relation(&self, i: usize, j: usize) -> Result<bool, QuiverError> {
        let (k1, k2) = self.cup_kernels(i, j)?;
        Ok(k1 == k2)
    }

    fn cup_kernels(&self, i: usize, j: usize) -> Result<(Subspace, Subspace), QuiverError> {
        if i < 1 || i >= j || j > self.n {
            return Err(QuiverError::Validation(format!(
                "cup ({i},{j}) out of range for n = {}",
                self.n
            )));
        }
        if (j - i) % 2 == 0 {
            return Err(QuiverError::Validation(format!(
                "cup ({i},{j}) spans an odd width"
            )));
        }
        let m = (i + j - 1) / 2;
        Ok((
            kernel(&self.path_b(m, i - 1)),
            kernel(&self.path_a(m, j)),
        ))
    }

    /// The relation a ray at vertex `i` imposes, where `c` is the number
    /// of cups left of `i`: either `B_i A_i = 0` (when a cup precedes the
    /// ray) or vanishing of the path from the `e` framing into `V_i`.
    pub fn ray_relation(&self, i: usize, c: usize) -> Result<bool, QuiverError> {
        if self.k == 0 {
            return Ok(true);
        }
        if c >= 1 {
            Ok(self.b_map(i).try_mul(&self.a_map(i)).expect("shape").is_zero())
        } else {
            if self.n == 2 * self.k {
                return Err(QuiverError::Validation(
                    "equal blocks admit no rays".into(),
                ));
            }
            Ok(self.gamma_path(self.n - self.k, i).is_zero())
        }
    }

    /// Does the representation satisfy every cup relation of the plain cup
    /// diagram?  (Membership in the component the diagram indexes, for
    /// representations that are admissible, stable and have `Delta = 0`.)
    pub fn in_type_a_component(&self, a: &CupDiagram) -> Result<bool, QuiverError> {
        if a.n() != self.n || a.k() != self.k {
            return Err(QuiverError::DiagramMismatch(
                (a.n(), a.k()),
                (self.n, self.k),
            ));
        }
        for &(i, j) in a.cups() {
            if !self.cup_relation(i, j)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Test the representation against the relations of a marked cup
    /// diagram, one labelled verdict per feature.  Unmarked cups require
    /// equal midpoint kernels, marked cups unequal ones; rays constrain
    /// the framing paths (through the framing involution for equal
    /// blocks, through a sign between the two framing letters at the
    /// rightmost ray otherwise).
    pub fn in_type_d_component(
        &self,
        adot: &MarkedCupDiagram,
    ) -> Result<RelationReport, QuiverError> {
        let shape = adot.shape();
        if shape != self.block_sizes() {
            return Err(QuiverError::DiagramMismatch(shape, self.block_sizes()));
        }
        let mut items = Vec::new();
        for &(i, j, marked) in adot.cups() {
            let (k1, k2) = self.cup_kernels(i, j)?;
            let label = format!("cup {i}-{j}{}", if marked { "*" } else { "" });
            items.push((label, if marked { k1 != k2 } else { k1 == k2 }));
        }
        let equal_blocks = self.n == 2 * self.k;
        let rightmost = adot.rightmost_ray();
        for &(i, marked) in adot.rays() {
            let label = format!("ray {i}{}", if marked { "*" } else { "" });
            if equal_blocks {
                if i % 2 == 0 {
                    return Err(QuiverError::Validation(format!(
                        "equal-block ray at even vertex {i}"
                    )));
                }
                let t = (i + 1) / 2;
                let m = self
                    .path_a(t, i)
                    .try_mul(&self.gamma_path(self.k, t))
                    .expect("shape");
                let twisted = m
                    .try_mul(&framing_involution(self.field, self.k))
                    .expect("shape");
                let ok = if marked { m == twisted } else { m == twisted.neg() };
                items.push((label, ok));
            } else if Some(i) == rightmost {
                let t = self.k + adot.rho(i) - 1;
                let lhs = self.gamma_path(self.k, t);
                let rhs = self.gamma_path(self.n - self.k, t);
                // A ray ending at the last vertex of an odd-length diagram
                // pairs each framing letter with itself, which forces a
                // square root of -1 into the sign; fields without one
                // contribute no points to this component.
                let m = self.n / 2;
                let ok = if i == m && m % 2 == 1 {
                    match sqrt_minus_one(self.field) {
                        Some(g) => {
                            let twisted = rhs.scale(&g);
                            if marked {
                                lhs == twisted.neg()
                            } else {
                                lhs == twisted
                            }
                        }
                        None => false,
                    }
                } else if marked {
                    lhs == rhs.neg()
                } else {
                    lhs == rhs
                };
                items.push((label, ok));
            }
            // Rays other than the rightmost impose nothing here in the
            // unequal-block case.
        }
        let all_hold = items.iter().all(|&(_, ok)| ok);
        Ok(RelationReport { items, all_hold })
    }

    /// The duality involution: reflect the quiver (`A_i <-> B_{n-1-i}`),
    /// swap the two framings (twisting by the framing involution when they
    /// coincide).  It preserves admissibility only where `Delta = 0`,
    /// since reversing all arrows negates the moment map.
    pub fn theta(&self) -> QuiverRep {
        let interior = self.n.saturating_sub(2);
        let a = (1..=interior).map(|i| self.b_map(self.n - 1 - i)).collect();
        let b = (1..=interior).map(|i| self.a_map(self.n - 1 - i)).collect();
        let (gamma, delta) = if self.k == 0 {
            (Vec::new(), Vec::new())
        } else if self.n == 2 * self.k {
            let s = framing_involution(self.field, self.k);
            (
                vec![(
                    self.k,
                    self.gamma[&self.k].try_mul(&s).expect("shape"),
                )],
                vec![(self.k, self.delta[&self.k].clone())],
            )
        } else {
            (
                vec![
                    (self.k, self.gamma[&(self.n - self.k)].clone()),
                    (self.n - self.k, self.gamma[&self.k].clone()),
                ],
                vec![
                    (self.k, self.delta[&(self.n - self.k)].clone()),
                    (self.n - self.k, self.delta[&self.k].clone()),
                ],
            )
        };
        QuiverRep::new(self.field, self.n, self.k, a, b, gamma, delta)
            .expect("involution preserves shapes")
    }

    /// Check that `g = (g_i)` exhibits the representation as equal to its
    /// own dual twisted by the base-change `g`.
    pub fn gauge_relates_to_dual(&self, g: &[Matrix]) -> bool {
        let n = self.n;
        if g.len() + 1 != n.max(1) {
            return false;
        }
        let gm = |i: usize| &g[i - 1];
        for i in 1..n.saturating_sub(1) {
            let lhs = self.a_map(i).try_mul(gm(i)).expect("shape");
            let rhs = gm(i + 1).try_mul(&self.b_map(n - 1 - i)).expect("shape");
            if lhs != rhs {
                return false;
            }
            let lhs = self.b_map(i).try_mul(gm(i + 1)).expect("shape");
            let rhs = gm(i).try_mul(&self.a_map(n - 1 - i)).expect("shape");
            if lhs != rhs {
                return false;
            }
        }
        if self.k > 0 {
            if self.n == 2 * self.k {
                let s = framing_involution(self.field, self.k);
                let rhs = gm(self.k)
                    .try_mul(&self.gamma[&self.k].try_mul(&s).expect("shape"))
                    .expect("shape");
                if self.gamma[&self.k] != rhs {
                    return false;
                }
                if self.delta[&self.k].try_mul(gm(self.k)).expect("shape")
                    != self.delta[&self.k]
                {
                    return false;
                }
            } else {
                let (k, nk) = (self.k, self.n - self.k);
                if self.gamma[&k] != gm(k).try_mul(&self.gamma[&nk]).expect("shape") {
                    return false;
                }
                if self.gamma[&nk] != gm(nk).try_mul(&self.gamma[&k]).expect("shape") {
                    return false;
                }
                if self.delta[&k].try_mul(gm(k)).expect("shape") != self.delta[&nk] {
                    return false;
                }
                if self.delta[&nk].try_mul(gm(nk)).expect("shape") != self.delta[&k] {
                    return false;
                }
            }
        }
        true
    }

    /// Decide whether the orbit of the representation is fixed by the
    /// duality involution, i.e. whether some invertible base change `g`
    /// relates it to its dual.  The defining equations are affine-linear
    /// in the entries of `g`; the solution set is searched for a point
    /// with every `g_i` invertible (exhaustively over small finite
    /// fields, by seeded random combinations otherwise).
    pub fn is_theta_fixed(&self, trials: usize, seed: u64) -> ThetaFixed {
        let n = self.n;
        let sizes: Vec<usize> = (1..n.max(1)).map(|i| self.v(i)).collect();
        let offsets: Vec<usize> = sizes
            .iter()
            .scan(0usize, |acc, &s| {
                let o = *acc;
                *acc += s * s;
                Some(o)
            })
            .collect();
        let total: usize = sizes.iter().map(|&s| s * s).sum();
        let idx = |i: usize, r: usize, c: usize| offsets[i - 1] + r * sizes[i - 1] + c;

        let mut rows: Vec<Vec<Scalar>> = Vec::new();
        let mut rhs: Vec<Scalar> = Vec::new();
        let zero_row = || vec![Scalar::zero(self.field); total];

        // A_i g_i = g_{i+1} B_{n-1-i}  and  B_i g_{i+1} = g_i A_{n-1-i}.
        for i in 1..n.saturating_sub(1) {
            let ai = self.a_map(i);
            let bd = self.b_map(n - 1 - i);
            for r in 0..self.v(i + 1) {
                for c in 0..self.v(i) {
                    let mut row = zero_row();
                    for t in 0..self.v(i) {
                        row[idx(i, t, c)] = row[idx(i, t, c)]
                            .try_add(ai.get(r, t))
                            .expect("field");
                    }
                    for t in 0..self.v(i + 1) {
                        row[idx(i + 1, r, t)] = row[idx(i + 1, r, t)]
                            .try_sub(bd.get(t, c))
                            .expect("field");
                    }
                    rows.push(row);
                    rhs.push(Scalar::zero(self.field));
                }
            }
            let bi = self.b_map(i);
            let ad = self.a_map(n - 1 - i);
            for r in 0..self.v(i) {
                for c in 0..self.v(i + 1) {
                    let mut row = zero_row();
                    for t in 0..self.v(i + 1) {
                        row[idx(i + 1, t, c)] = row[idx(i + 1, t, c)]
                            .try_add(bi.get(r, t))
                            .expect("field");
                    }
                    for t in 0..self.v(i) {
                        row[idx(i, r, t)] = row[idx(i, r, t)]
                            .try_sub(ad.get(t, c))
                            .expect("field");
                    }
                    rows.push(row);
                    rhs.push(Scalar::zero(self.field));
                }
            }
        }
        // Framing equations: Gamma_j = g_j * (dual Gamma at j) and
        // Delta_j g_j = dual Delta at j.
        if self.k > 0 {
            let dual = self.theta();
            for &j in self.gamma.keys() {
                let target = &self.gamma[&j];
                let source = &dual.gamma[&j];
                for r in 0..self.v(j) {
                    for c in 0..target.cols() {
                        let mut row = zero_row();
                        for t in 0..self.v(j) {
                            row[idx(j, r, t)] = row[idx(j, r, t)]
                                .try_add(source.get(t, c))
                                .expect("field");
                        }
                        rows.push(row);
                        rhs.push(target.get(r, c).clone());
                    }
                }
                let dtarget = &dual.delta[&j];
                let dsource = &self.delta[&j];
                for r in 0..dsource.rows() {
                    for c in 0..self.v(j) {
                        let mut row = zero_row();
                        for t in 0..self.v(j) {
                            row[idx(j, t, c)] = row[idx(j, t, c)]
                                .try_add(dsource.get(r, t))
                                .expect("field");
                        }
                        rows.push(row);
                        rhs.push(dtarget.get(r, c).clone());
                    }
                }
            }
        }

        let coeff = if rows.is_empty() {
            Matrix::zero(self.field, 0, total)
        } else {
            Matrix::from_rows(self.field, rows).expect("uniform rows")
        };
        let solution = solve_linear(&coeff, &rhs);
        let (particular, homogeneous) = match solution {
            AffineSolutionSet::Inconsistent => return ThetaFixed::NotFixed,
            AffineSolutionSet::Solution {
                particular,
                homogeneous,
            } => (particular, homogeneous),
        };

        let extract = |x: &[Scalar]| -> Option<Vec<Matrix>> {
            let mut gs = Vec::with_capacity(sizes.len());
            for (i, &s) in sizes.iter().enumerate() {
                let m = Matrix::from_fn(self.field, s, s, |r, c| {
                    x[offsets[i] + r * s + c].clone()
                });
                if !m.is_invertible() {
                    return None;
                }
                gs.push(m);
            }
            Some(gs)
        };
        let accept = |gs: Vec<Matrix>| -> ThetaFixed {
            assert!(
                self.gauge_relates_to_dual(&gs),
                "internal error: solved base change fails the defining equations"
            );
            ThetaFixed::FixedWith(gs)
        };

        if let Some(gs) = extract(&particular) {
            return accept(gs);
        }
        let hdim = homogeneous.dim();
        if hdim == 0 {
            return ThetaFixed::NotFixed;
        }
        let basis = homogeneous.basis_vectors();
        let add_combo = |coeffs: &[Scalar]| -> Vec<Scalar> {
            let mut x = particular.clone();
            for (cf, hv) in coeffs.iter().zip(&basis) {
                for (xe, he) in x.iter_mut().zip(hv) {
                    *xe = xe.try_add(&cf.try_mul(he).expect("field")).expect("field");
                }
            }
            x
        };

        if let FieldSpec::Prime(p) = self.field {
            // Exhaustive search when the solution set is small enough.
            if (p as f64).powi(hdim as i32) <= 4096.0 {
                let elems = self.field.elements();
                let mut coeffs = vec![0usize; hdim];
                loop {
                    let cs: Vec<Scalar> =
                        coeffs.iter().map(|&c| elems[c].clone()).collect();
                    if let Some(gs) = extract(&add_combo(&cs)) {
                        return accept(gs);
                    }
                    let mut pos = 0;
                    loop {
                        if pos == hdim {
                            return ThetaFixed::NotFixed;
                        }
                        coeffs[pos] += 1;
                        if coeffs[pos] < elems.len() {
                            break;
                        }
                        coeffs[pos] = 0;
                        pos += 1;
                    }
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..trials {
            let cs: Vec<Scalar> = (0..hdim)
                .map(|_| random_scalar(self.field, &mut rng, false))
                .collect();
            if let Some(gs) = extract(&add_combo(&cs)) {
                return accept(gs);
            }
        }
        ThetaFixed::Undetermined
    }
}

/// Outcome of the fixed-point test for the duality involution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThetaFixed {
    /// Fixed, with a witnessing invertible base change `(g_1, ..., g_{n-1})`.
    FixedWith(Vec<Matrix>),
    /// Provably not fixed over the coefficient field.
    NotFixed,
    /// The search budget was exhausted without a verdict (possible only
    /// over infinite fields or large solution spaces).
    Undetermined,
}

fn column(m: &Matrix, c: usize) -> Matrix {
    Matrix::from_fn(m.field(), m.rows(), 1, |r, _| m.get(r, c).clone())
}

fn row(m: &Matrix, r: usize) -> Matrix {
    Matrix::from_fn(m.field(), 1, m.cols(), |_, c| m.get(r, c).clone())
}

fn random_scalar(field: FieldSpec, rng: &mut ChaCha8Rng, zero_biased: bool) -> Scalar {
    if zero_biased && rng.gen_ratio(1, 3) {
        return Scalar::zero(field);
    }
    match field {
        FieldSpec::Prime(p) => Scalar::from_residue(p, rng.gen_range(0..p)),
        FieldSpec::Rationals => Scalar::from_i64(field, rng.gen_range(-3..=3)),
        FieldSpec::GaussianRationals => {
            let re = Scalar::from_i64(field, rng.gen_range(-3..=3));
            let im = Scalar::from_i64(field, rng.gen_range(-3..=3));
            let i = exact_linalg::scalar::sqrt_minus_one(field).expect("i exists");
            re.try_add(&im.try_mul(&i).expect("field")).expect("field")
        }
    }
}

/// Draw an admissible stable representation with `Delta = 0` for the
/// given shape: forward and framing maps are sampled at random (with a
/// bias towards zero entries, to reach non-generic strata), the backward
/// maps are solved from the moment-map equations, and the first stable
/// outcome is returned.
pub fn sample_springer_point(
    field: FieldSpec,
    n: usize,
    k: usize,
    seed: u64,
    attempts: usize,
) -> Option<QuiverRep> {
    if n < 2 * k {
        return None;
    }
    if k == 0 {
        return QuiverRep::zero(field, n, k).ok();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interior = n.saturating_sub(2);
    let vd = |i: usize| vdim(n, k, i);
    let sizes: Vec<(usize, usize)> = (1..=interior).map(|i| (vd(i), vd(i + 1))).collect();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0usize, |acc, &(r, c)| {
            let o = *acc;
            *acc += r * c;
            Some(o)
        })
        .collect();
    let total: usize = sizes.iter().map(|&(r, c)| r * c).sum();

    for _ in 0..attempts {
        let a: Vec<Matrix> = (1..=interior)
            .map(|i| {
                Matrix::from_fn(field, vd(i + 1), vd(i), |_, _| {
                    random_scalar(field, &mut rng, true)
                })
            })
            .collect();
        let gamma: Vec<(usize, Matrix)> = framing_vertices(n, k)
            .into_iter()
            .map(|j| {
                (
                    j,
                    Matrix::from_fn(field, vd(j), framing_dim(n, k, j), |_, _| {
                        random_scalar(field, &mut rng, true)
                    }),
                )
            })
            .collect();

        // Moment-map equations with Delta = 0 are linear in the backward
        // maps: B_i A_i - A_{i-1} B_{i-1} = 0 at every vertex.
        let mut rows: Vec<Vec<Scalar>> = Vec::new();
        let a_of = |i: usize| -> Matrix {
            if (1..=interior).contains(&i) {
                a[i - 1].clone()
            } else {
                Matrix::zero(field, vd(i + 1), vd(i))
            }
        };
        for i in 1..n {
            for r in 0..vd(i) {
                for c in 0..vd(i) {
                    let mut row = vec![Scalar::zero(field); total];
                    let mut nontrivial = false;
                    if (1..=interior).contains(&i) {
                        let ai = a_of(i);
                        for t in 0..vd(i + 1) {
                            let coeff = ai.get(t, c);
                            if !coeff.is_zero() {
                                nontrivial = true;
                            }
                            let pos = offsets[i - 1] + r * vd(i + 1) + t;
                            row[pos] = row[pos].try_add(coeff).expect("field");
                        }
                    }
                    if i >= 2 && (1..=interior).contains(&(i - 1)) {
                        let ap = a_of(i - 1);
                        for t in 0..vd(i - 1) {
                            let coeff = ap.get(r, t);
                            if !coeff.is_zero() {
                                nontrivial = true;
                            }
                            let pos = offsets[i - 2] + t * vd(i) + c;
                            row[pos] = row[pos].try_sub(coeff).expect("field");
                        }
                    }
                    if nontrivial {
                        rows.push(row);
                    }
                }
            }
        }
        let coeff = if rows.is_empty() {
            Matrix::zero(field, 0, total)
        } else {
            Matrix::from_rows(field, rows).expect("uniform rows")
        };
        let null = kernel(&coeff);
        let basis = null.basis_vectors();
        for _ in 0..8 {
            let mut x = vec![Scalar::zero(field); total];
            for hv in &basis {
                let cf = random_scalar(field, &mut rng, false);
                for (xe, he) in x.iter_mut().zip(hv) {
                    *xe = xe.try_add(&cf.try_mul(he).expect("field")).expect("field");
                }
            }
            let b: Vec<Matrix> = (1..=interior)
                .map(|i| {
                    Matrix::from_fn(field, vd(i), vd(i + 1), |r, c| {
                        x[offsets[i - 1] + r * vd(i + 1) + c].clone()
                    })
                })
                .collect();
            let rep = QuiverRep::springer(field, n, k, a.clone(), b, gamma.clone())
                .expect("sampled shapes agree");
            debug_assert!(rep.is_admissible());
            if rep.is_stable() {
                return Some(rep);
            }
        }
    }
    None
}

/// The enlarged representation whose framing sits entirely at the first
/// vertex: `W_0` is the full `n`-dimensional space on the standard basis
/// `(e_1 .. e_{n-k}, f_1 .. f_k)` and `W_i = V_i + <e_1 .. e_{n-k-i}> +
/// <f_1 .. f_{k-i}>`.  Stored as a single chain of forward and backward
/// maps; the map `W_0 -> W_1` plays the role of the framing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TildeRep {
    field: FieldSpec,
    n: usize,
    k: usize,
    dims: Vec<usize>,
    /// `a[i] : W_i -> W_{i+1}` for `i = 0 .. n-2`.
    a: Vec<Matrix>,
    /// `b[i] : W_{i+1} -> W_i` for `i = 0 .. n-2`.
    b: Vec<Matrix>,
}

/// `(dim V_i, #e-slots, #f-slots)` of the enlarged space `W_i`.
fn tilde_slots(n: usize, k: usize, i: usize) -> (usize, usize, usize) {
    (
        vdim(n, k, i),
        (n - k).saturating_sub(i),
        k.saturating_sub(i),
    )
}

impl TildeRep {
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn forward(&self, i: usize) -> &Matrix {
        &self.a[i]
    }

    pub fn backward(&self, i: usize) -> &Matrix {
        &self.b[i]
    }

    /// Composite `W_p -> W_q` of forward maps.
    pub fn forward_path(&self, p: usize, q: usize) -> Matrix {
        assert!(p <= q && q < self.n, "path out of range");
        let mut acc = Matrix::identity(self.field, self.dims[p]);
        for t in p..q {
            acc = self.a[t].try_mul(&acc).expect("path shapes agree");
        }
        acc
    }
}

/// Build the enlarged chain from a representation.  Forward maps send the
/// lowest `e`/`f` slot into the next `V` along the framing paths and
/// shift the other slots down; backward maps embed the slots
/// label-preservingly and send `V` onto the highest slots along the paths
/// to the framing.
pub fn build_tilde(rep: &QuiverRep) -> TildeRep {
    let (n, k, field) = (rep.n, rep.k, rep.field);
    let dims: Vec<usize> = (0..n)
        .map(|i| {
            let (v, ne, nf) = tilde_slots(n, k, i);
            v + ne + nf
        })
        .collect();
    let mut a = Vec::with_capacity(n.saturating_sub(1));
    let mut b = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n.saturating_sub(1) {
        let (va, nea, nfa) = tilde_slots(n, k, i);
        let (vb, neb, nfb) = tilde_slots(n, k, i + 1);
        let (da, db) = (dims[i], dims[i + 1]);
        let mut fwd = Matrix::zero(field, db, da);
        let ai = rep.a_map(i);
        for r in 0..vb {
            for c in 0..va {
                fwd.set(r, c, ai.get(r, c).clone());
            }
        }
        if nea >= 1 {
            let ge = rep.gamma_into_e(i + 1);
            for r in 0..vb {
                fwd.set(r, va, ge.get(r, 0).clone());
            }
            for s in 2..=nea {
                // e_s -> e_{s-1}
                fwd.set(vb + s - 2, va + s - 1, Scalar::one(field));
            }
        }
        if nfa >= 1 {
            let gf = rep.gamma_into_f(i + 1);
            for r in 0..vb {
                fwd.set(r, va + nea, gf.get(r, 0).clone());
            }
            for s in 2..=nfa {
                fwd.set(vb + neb + s - 2, va + nea + s - 1, Scalar::one(field));
            }
        }
        a.push(fwd);

        let mut bwd = Matrix::zero(field, da, db);
        let bi = rep.b_map(i);
        for r in 0..va {
            for c in 0..vb {
                bwd.set(r, c, bi.get(r, c).clone());
            }
        }
        if nea >= 1 {
            let de = rep.delta_from_e(i + 1);
            for c in 0..vb {
                bwd.set(va + nea - 1, c, de.get(0, c).clone());
            }
        }
        if nfa >= 1 {
            let df = rep.delta_from_f(i + 1);
            for c in 0..vb {
                bwd.set(va + nea + nfa - 1, c, df.get(0, c).clone());
            }
        }
        for s in 1..=neb {
            bwd.set(va + s - 1, vb + s - 1, Scalar::one(field));
        }
        for s in 1..=nfb {
            bwd.set(va + nea + s - 1, vb + neb + s - 1, Scalar::one(field));
        }
        b.push(bwd);
    }
    TildeRep {
        field,
        n,
        k,
        dims,
        a,
        b,
    }
}

/// Verdicts for the five structural conditions the enlarged chain of a
/// well-formed representation must satisfy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TildeChecks {
    /// The slot-block of each round trip, minus the down-shift, commutes
    /// with the raising operator of the slot grading.
    pub commutes_with_lowering: bool,
    /// Prescribed entries (zeros and identities) of the block pattern.
    pub entry_pattern: bool,
    /// Moment-map equations of the enlarged chain.
    pub admissible: bool,
    /// Surjectivity of every forward map.
    pub stable: bool,
    /// Round trips from the framing through the quiver and back vanish.
    pub round_trips_vanish: bool,
}

impl TildeChecks {
    pub fn all(&self) -> bool {
        self.commutes_with_lowering
            && self.entry_pattern
            && self.admissible
            && self.stable
            && self.round_trips_vanish
    }
}

fn submatrix(m: &Matrix, r0: usize, rows: usize, c0: usize, cols: usize) -> Matrix {
    Matrix::from_fn(m.field(), rows, cols, |r, c| m.get(r0 + r, c0 + c).clone())
}

/// Check the enlarged chain of a representation against all structural
/// conditions.
pub fn check_tilde(rep: &QuiverRep) -> TildeChecks {
    let t = build_tilde(rep);
    let (n, k, field) = (rep.n, rep.k, rep.field);

    // Moment maps: backward-forward equals forward-backward one step
    // earlier (with zero beyond the last vertex).
    let mut admissible = true;
    for i in 1..n {
        let lhs = if i <= n.saturating_sub(2) {
            t.b[i].try_mul(&t.a[i]).expect("shape")
        } else {
            Matrix::zero(field, t.dims[i], t.dims[i])
        };
        let rhs = t.a[i - 1].try_mul(&t.b[i - 1]).expect("shape");
        if lhs != rhs {
            admissible = false;
        }
    }

    let mut stable = true;
    for i in 0..n.saturating_sub(1) {
        if t.a[i].rank() != t.dims[i + 1] {
            stable = false;
        }
    }

    // Round trips from the framing into the quiver and back.
    let mut round_trips_vanish = true;
    for i in 2..n {
        for &j_in in rep.gamma.keys() {
            for &j_out in rep.delta.keys() {
                let trip = rep
                    .delta_path(i, j_out)
                    .try_mul(&rep.gamma_path(j_in, i))
                    .expect("shape");
                if !trip.is_zero() {
                    round_trips_vanish = false;
                }
            }
        }
    }

    // The slot block of each round trip at a vertex, compared with the
    // canonical nilpotent pair on the slot spaces.
    let mut commutes_with_lowering = true;
    for i in 0..n.saturating_sub(1) {
        let (va, nea, nfa) = tilde_slots(n, k, i);
        let d = nea + nfa;
        if d == 0 {
            continue;
        }
        let ba = t.b[i].try_mul(&t.a[i]).expect("shape");
        let block = submatrix(&ba, va, d, va, d);
        let mut x = Matrix::zero(field, d, d);
        let mut y = Matrix::zero(field, d, d);
        for h in 2..=nea {
            x.set(h - 2, h - 1, Scalar::one(field));
        }
        for h in 2..=nfa {
            x.set(nea + h - 2, nea + h - 1, Scalar::one(field));
        }
        for h in 1..nea {
            y.set(h, h - 1, Scalar::from_i64(field, (h * (nea - h)) as i64));
        }
        for h in 1..nfa {
            y.set(
                nea + h,
                nea + h - 1,
                Scalar::from_i64(field, (h * (nfa - h)) as i64),
            );
        }
        let c = block.try_sub(&x).expect("shape");
        let comm = c
            .try_mul(&y)
            .expect("shape")
            .try_sub(&y.try_mul(&c).expect("shape"))
            .expect("shape");
        if !comm.is_zero() {
            commutes_with_lowering = false;
        }
    }

    // Entry pattern of each forward and backward map.
    let mut entry_pattern = true;
    let one = Scalar::one(field);
    let zero = Scalar::zero(field);
    let surplus = 2 * k as isize - n as isize;
    for i in 0..n.saturating_sub(1) {
        let (va, nea, nfa) = tilde_slots(n, k, i);
        let (vb, neb, nfb) = tilde_slots(n, k, i + 1);
        let fwd = &t.a[i];
        // Source slots of W_i, target slots of W_{i+1}.
        for bslot in 1..=nea {
            let col = va + bslot - 1;
            // Into V rows: free only from the lowest slot.
            if bslot != 1 {
                for r in 0..vb {
                    if fwd.get(r, col) != &zero {
                        entry_pattern = false;
                    }
                }
            }
            for aslot in 1..=neb {
                let want = match bslot as isize - aslot as isize {
                    d if d > 1 => Some(&zero),
                    1 => Some(&one),
                    _ => None,
                };
                if let Some(w) = want {
                    if fwd.get(vb + aslot - 1, col) != w {
                        entry_pattern = false;
                    }
                }
            }
            for aslot in 1..=nfb {
                // e source into f target vanishes from level a+1 upward.
                if bslot as isize >= aslot as isize + 1
                    && fwd.get(vb + neb + aslot - 1, col) != &zero
                {
                    entry_pattern = false;
                }
            }
        }
        for bslot in 1..=nfa {
            let col = va + nea + bslot - 1;
            if bslot != 1 {
                for r in 0..vb {
                    if fwd.get(r, col) != &zero {
                        entry_pattern = false;
                    }
                }
            }
            for aslot in 1..=nfb {
                let want = match bslot as isize - aslot as isize {
                    d if d > 1 => Some(&zero),
                    1 => Some(&one),
                    _ => None,
                };
                if let Some(w) = want {
                    if fwd.get(vb + neb + aslot - 1, col) != w {
                        entry_pattern = false;
                    }
                }
            }
            for aslot in 1..=neb {
                // f source into e target vanishes once b >= a + 1 + (2k - n).
                if bslot as isize >= aslot as isize + 1 + surplus
                    && fwd.get(vb + aslot - 1, col) != &zero
                {
                    entry_pattern = false;
                }
            }
        }
        // V columns never feed slots directly in the forward map.
        for col in 0..va {
            for r in vb..vb + neb + nfb {
                if fwd.get(r, col) != &zero {
                    entry_pattern = false;
                }
            }
        }

        let bwd = &t.b[i];
        // Source = W_{i+1}, target = W_i.
        for bslot in 1..=neb {
            let col = vb + bslot - 1;
            // Slots never feed V in the backward map.
            for r in 0..va {
                if bwd.get(r, col) != &zero {
                    entry_pattern = false;
                }
            }
            for aslot in 1..=nea {
                let want = match bslot as isize - aslot as isize {
                    d if d > 0 => Some(&zero),
                    0 => Some(&one),
                    _ => None,
                };
                if let Some(w) = want {
                    if bwd.get(va + aslot - 1, col) != w {
                        entry_pattern = false;
                    }
                }
            }
            for aslot in 1..=nfa {
                if bslot >= aslot && bwd.get(va + nea + aslot - 1, col) != &zero {
                    entry_pattern = false;
                }
            }
        }
        for bslot in 1..=nfb {
            let col = vb + neb + bslot - 1;
            for r in 0..va {
                if bwd.get(r, col) != &zero {
                    entry_pattern = false;
                }
            }
            for aslot in 1..=nfa {
                let want = match bslot as isize - aslot as isize {
                    d if d > 0 => Some(&zero),
                    0 => Some(&one),
                    _ => None,
                };
                if let Some(w) = want {
                    if bwd.get(va + nea + aslot - 1, col) != w {
                        entry_pattern = false;
                    }
                }
            }
            for aslot in 1..=nea {
                if bslot as isize >= aslot as isize + surplus
                    && bwd.get(va + aslot - 1, col) != &zero
                {
                    entry_pattern = false;
                }
            }
        }
        // V columns feed only the highest slot of each letter.
        for col in 0..vb {
            for aslot in 1..=nea {
                if aslot as isize != (n - k) as isize - i as isize
                    && bwd.get(va + aslot - 1, col) != &zero
                {
                    entry_pattern = false;
                }
            }
            for aslot in 1..=nfa {
                if aslot as isize != k as isize - i as isize
                    && bwd.get(va + nea + aslot - 1, col) != &zero
                {
                    entry_pattern = false;
                }
            }
        }
    }

    TildeChecks {
        commutes_with_lowering,
        entry_pattern,
        admissible,
        stable,
        round_trips_vanish,
    }
}

/// The complete flag attached to a representation: `F_i` is the kernel of
/// the composite forward path `W_0 -> W_i` of the enlarged chain, read in
/// the standard basis `(e_1 .. e_{n-k}, f_1 .. f_k)`.  Requires a stable
/// admissible representation with `Delta = 0` (otherwise the kernels need
/// not have the right dimensions).
pub fn maffei_flag(rep: &QuiverRep) -> Result<Flag, QuiverError> {
    let t = build_tilde(rep);
    let n = rep.n;
    let mut inner = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        let f = kernel(&t.forward_path(0, i));
        if f.dim() != i {
            return Err(QuiverError::NotStable(format!(
                "kernel at step {i} has dimension {}, expected {i}",
                f.dim()
            )));
        }
        inner.push(f);
    }
    Ok(Flag::from_inner(rep.field, n, inner)?)
}
