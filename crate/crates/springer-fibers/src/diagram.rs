//! Crossingless cup diagrams and their marked, folded variants.
//!
//! A *cup diagram* on `n` vertices consists of `k` disjoint cups (arcs
//! joining two vertices) and `n - 2k` rays (vertical lines), drawn without
//! crossings and with no ray strictly inside a cup.  These diagrams index
//! the irreducible components of two-row Springer fibers in type A.
//!
//! A *marked cup diagram* on `m` vertices additionally allows markers on
//! cups and rays that can reach the right edge of the diagram without
//! crossing anything: a marked cup must have no ray to its right and no
//! enclosing cup, and a marked ray must be the rightmost ray.  Marked
//! diagrams index the type-D components.
//!
//! Folding relates the two: a symmetric type-A diagram on `n = 2m`
//! vertices is repeatedly folded at the central axis, each step producing
//! an unmarked and a marked outcome, until no cup crosses the axis; the
//! surviving left half is a marked cup diagram.

use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("({0},{1}) is not a two-row type D partition")]
    NotTypeDPartition(usize, usize),
    #[error("no cup crosses the central axis")]
    NoAxisCrossingCup,
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("syntax error in diagram literal: {0}")]
    Syntax(String),
    #[error("invalid diagram: {0}")]
    Validation(String),
}

/// Check that two cups given by `(left, right)` endpoints do not cross.
fn crossingless(a: (usize, usize), b: (usize, usize)) -> bool {
    let ((_, j), (p, q)) = if a.0 < b.0 { (a, b) } else { (b, a) };
    // Either disjoint or nested.
    j < p || q < j
}

/// An unmarked crossingless cup diagram on `n` vertices (type A).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CupDiagram {
    n: usize,
    /// Cups `(i, j)` with `i < j`, sorted by left endpoint.
    cups: Vec<(usize, usize)>,
}

/// A marked crossingless cup diagram on `m` vertices (type D half
/// diagram).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkedCupDiagram {
    m: usize,
    /// Cups `(i, j, marked)`, sorted by left endpoint.
    cups: Vec<(usize, usize, bool)>,
    /// Rays `(i, marked)`, sorted.
    rays: Vec<(usize, bool)>,
}

/// A symmetric marked diagram on `n` vertices, the intermediate stage of
/// folding.  Symmetry is with respect to `i -> n + 1 - i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymmetricDiagram {
    n: usize,
    cups: Vec<(usize, usize, bool)>,
    rays: Vec<(usize, bool)>,
}

/// Any of the supported diagram kinds, as returned by the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagram {
    TypeA(CupDiagram),
    TypeD(MarkedCupDiagram),
    Symmetric(SymmetricDiagram),
}

fn check_partition(
    n: usize,
    cup_endpoints: impl Iterator<Item = usize>,
    ray_positions: impl Iterator<Item = usize>,
) -> Result<(), DiagramError> {
    let mut seen = BTreeSet::new();
    for v in cup_endpoints.chain(ray_positions) {
        if v < 1 || v > n {
            return Err(DiagramError::Validation(format!(
                "vertex {v} out of range 1..={n}"
            )));
        }
        if !seen.insert(v) {
            return Err(DiagramError::Validation(format!(
                "vertex {v} used more than once"
            )));
        }
    }
    if seen.len() != n {
        return Err(DiagramError::SizeMismatch(format!(
            "{} of {} vertices covered",
            seen.len(),
            n
        )));
    }
    Ok(())
}

fn check_cups_and_rays(
    cups: &[(usize, usize)],
    rays: &[usize],
) -> Result<(), DiagramError> {
    for &(i, j) in cups {
        if i >= j {
            return Err(DiagramError::Validation(format!(
                "cup ({i},{j}) must have left endpoint below right endpoint"
            )));
        }
    }
    for (idx, &a) in cups.iter().enumerate() {
        for &b in &cups[idx + 1..] {
            if !crossingless(a, b) {
                return Err(DiagramError::Validation(format!(
                    "cups ({},{}) and ({},{}) cross",
                    a.0, a.1, b.0, b.1
                )));
            }
        }
    }
    for &r in rays {
        for &(i, j) in cups {
            if i < r && r < j {
                return Err(DiagramError::Validation(format!(
                    "ray {r} lies inside cup ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

impl CupDiagram {
    pub fn new(n: usize, mut cups: Vec<(usize, usize)>) -> Result<Self, DiagramError> {
        cups.sort_unstable();
        let rays: Vec<usize> = {
            let used: BTreeSet<usize> = cups.iter().flat_map(|&(i, j)| [i, j]).collect();
            (1..=n).filter(|v| !used.contains(v)).collect()
        };
        check_partition(
            n,
            cups.iter().flat_map(|&(i, j)| [i, j]),
            rays.iter().copied(),
        )?;
        check_cups_and_rays(&cups, &rays)?;
        Ok(CupDiagram { n, cups })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of cups.
    pub fn k(&self) -> usize {
        self.cups.len()
    }

    pub fn cups(&self) -> &[(usize, usize)] {
        &self.cups
    }

    pub fn rays(&self) -> Vec<usize> {
        let used: BTreeSet<usize> = self.cups.iter().flat_map(|&(i, j)| [i, j]).collect();
        (1..=self.n).filter(|v| !used.contains(v)).collect()
    }

    /// Number of rays at positions `<= i`.
    pub fn rho(&self, i: usize) -> usize {
        self.rays().iter().filter(|&&r| r <= i).count()
    }

    /// Number of complete cups strictly to the left of a ray vertex `i`
    /// (only meaningful where `i - rho(i)` is even, in particular at ray
    /// vertices).
    pub fn cups_left_of(&self, i: usize) -> usize {
        (i - self.rho(i)) / 2
    }

    /// The cup partner of a vertex, if it lies on a cup.
    pub fn partner(&self, v: usize) -> Option<usize> {
        for &(i, j) in &self.cups {
            if i == v {
                return Some(j);
            }
            if j == v {
                return Some(i);
            }
        }
        None
    }

    /// Midpoint vertex of the cup through `v`: `floor((v + partner) / 2)`.
    pub fn cup_midpoint(&self, v: usize) -> Option<usize> {
        self.partner(v).map(|w| (v + w) / 2)
    }

    /// The reflected diagram under `i -> n + 1 - i`.
    pub fn mirror(&self) -> CupDiagram {
        let n = self.n;
        let cups = self
            .cups
            .iter()
            .map(|&(i, j)| (n + 1 - j, n + 1 - i))
            .collect();
        CupDiagram::new(n, cups).expect("mirror of a valid diagram is valid")
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.mirror()
    }
}

impl MarkedCupDiagram {
    pub fn new(
        m: usize,
        mut cups: Vec<(usize, usize, bool)>,
        mut rays: Vec<(usize, bool)>,
    ) -> Result<Self, DiagramError> {
        cups.sort_unstable();
        rays.sort_unstable();
        let plain_cups: Vec<(usize, usize)> = cups.iter().map(|&(i, j, _)| (i, j)).collect();
        let plain_rays: Vec<usize> = rays.iter().map(|&(i, _)| i).collect();
        check_partition(
            m,
            plain_cups.iter().flat_map(|&(i, j)| [i, j]),
            plain_rays.iter().copied(),
        )?;
        check_cups_and_rays(&plain_cups, &plain_rays)?;
        // Marker accessibility: a marker must reach the right edge.
        for &(i, j, marked) in &cups {
            if !marked {
                continue;
            }
            if let Some(&r) = plain_rays.iter().find(|&&r| r > j) {
                return Err(DiagramError::Validation(format!(
                    "marked cup ({i},{j}) is blocked by the ray at {r}"
                )));
            }
            if let Some(&(a, b)) = plain_cups.iter().find(|&&(a, b)| a < i && b > j) {
                return Err(DiagramError::Validation(format!(
                    "marked cup ({i},{j}) is blocked by the enclosing cup ({a},{b})"
                )));
            }
        }
        for &(i, marked) in &rays {
            if !marked {
                continue;
            }
            if let Some(&r) = plain_rays.iter().find(|&&r| r > i) {
                return Err(DiagramError::Validation(format!(
                    "marked ray {i} is blocked by the ray at {r}"
                )));
            }
        }
        Ok(MarkedCupDiagram { m, cups, rays })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cups(&self) -> &[(usize, usize, bool)] {
        &self.cups
    }

    pub fn rays(&self) -> &[(usize, bool)] {
        &self.rays
    }

    pub fn num_cups(&self) -> usize {
        self.cups.len()
    }

    /// The two-row shape `(n - k, k)` indexed by this diagram: `n = 2m`,
    /// and the diagram has `floor(k / 2)` cups.  Diagrams with at most one
    /// ray belong to the equal-blocks shape `(m, m)`.
    pub fn shape(&self) -> (usize, usize) {
        let c = self.cups.len();
        if self.rays.len() <= 1 {
            (self.m, self.m)
        } else {
            let k = 2 * c + 1;
            (2 * self.m - k, k)
        }
    }

    /// Number of rays at positions `<= i`.
    pub fn rho(&self, i: usize) -> usize {
        self.rays.iter().filter(|&&(r, _)| r <= i).count()
    }

    /// Number of complete cups strictly to the left of a ray vertex.
    pub fn cups_left_of(&self, i: usize) -> usize {
        (i - self.rho(i)) / 2
    }

    /// Position of the rightmost ray, if any.
    pub fn rightmost_ray(&self) -> Option<usize> {
        self.rays.iter().map(|&(i, _)| i).max()
    }

    /// The feature at a vertex: `(partner, marked)` for a cup endpoint,
    /// `(vertex, marked)` for a ray.
    pub fn feature_at(&self, v: usize) -> Option<(usize, bool)> {
        for &(i, j, marked) in &self.cups {
            if i == v {
                return Some((j, marked));
            }
            if j == v {
                return Some((i, marked));
            }
        }
        self.rays
            .iter()
            .find(|&&(i, _)| i == v)
            .map(|&(i, marked)| (i, marked))
    }

    /// Forget all markers, keeping the underlying half diagram.
    pub fn unmarked(&self) -> MarkedCupDiagram {
        MarkedCupDiagram::new(
            self.m,
            self.cups.iter().map(|&(i, j, _)| (i, j, false)).collect(),
            self.rays.iter().map(|&(i, _)| (i, false)).collect(),
        )
        .expect("forgetting markers preserves validity")
    }
}

impl SymmetricDiagram {
    pub fn new(
        n: usize,
        mut cups: Vec<(usize, usize, bool)>,
        mut rays: Vec<(usize, bool)>,
    ) -> Result<Self, DiagramError> {
        if n % 2 != 0 {
            return Err(DiagramError::InvalidShape(format!(
                "symmetric diagram needs an even vertex count, got {n}"
            )));
        }
        cups.sort_unstable();
        rays.sort_unstable();
        let m = n / 2;
        let plain_cups: Vec<(usize, usize)> = cups.iter().map(|&(i, j, _)| (i, j)).collect();
        let plain_rays: Vec<usize> = rays.iter().map(|&(i, _)| i).collect();
        check_partition(
            n,
            plain_cups.iter().flat_map(|&(i, j)| [i, j]),
            plain_rays.iter().copied(),
        )?;
        check_cups_and_rays(&plain_cups, &plain_rays)?;
        // Symmetry under reflection, markers included.
        let refl_cup = |&(i, j, mk): &(usize, usize, bool)| (n + 1 - j, n + 1 - i, mk);
        let mut reflected: Vec<(usize, usize, bool)> = cups.iter().map(refl_cup).collect();
        reflected.sort_unstable();
        if reflected != cups {
            return Err(DiagramError::Validation(
                "cups are not symmetric about the central axis".into(),
            ));
        }
        let mut refl_rays: Vec<(usize, bool)> =
            rays.iter().map(|&(i, mk)| (n + 1 - i, mk)).collect();
        refl_rays.sort_unstable();
        if refl_rays != rays {
            return Err(DiagramError::Validation(
                "rays are not symmetric about the central axis".into(),
            ));
        }
        // Markers must reach the central axis; axis-crossing cups carry no
        // marker.
        for &(i, j, marked) in &cups {
            if !marked {
                continue;
            }
            if i <= m && j > m {
                return Err(DiagramError::Validation(format!(
                    "axis-crossing cup ({i},{j}) cannot carry a marker"
                )));
            }
            let (lo, hi) = if j <= m { (i, j) } else { (n + 1 - j, n + 1 - i) };
            if let Some(&r) = plain_rays.iter().find(|&&r| r > hi && r <= m) {
                return Err(DiagramError::Validation(format!(
                    "marked cup ({i},{j}) is blocked from the axis by the ray at {r}"
                )));
            }
            if plain_cups
                .iter()
                .any(|&(a, b)| a < lo && hi < b && b <= m)
            {
                return Err(DiagramError::Validation(format!(
                    "marked cup ({i},{j}) is blocked from the axis by an enclosing cup"
                )));
            }
        }
        for &(i, marked) in &rays {
            if !marked {
                continue;
            }
            let lo = if i <= m { i } else { n + 1 - i };
            if plain_rays.iter().any(|&r| r > lo && r <= m) {
                return Err(DiagramError::Validation(format!(
                    "marked ray {i} is blocked from the axis by another ray"
                )));
            }
        }
        Ok(SymmetricDiagram { n, cups, rays })
    }

    /// View an unmarked symmetric type-A diagram as a symmetric diagram.
    pub fn from_type_a(a: &CupDiagram) -> Result<Self, DiagramError> {
        if !a.is_symmetric() {
            return Err(DiagramError::Validation(
                "diagram is not symmetric about the central axis".into(),
            ));
        }
        SymmetricDiagram::new(
            a.n(),
            a.cups().iter().map(|&(i, j)| (i, j, false)).collect(),
            a.rays().iter().map(|&i| (i, false)).collect(),
        )
    }

    /// Glue a half diagram with its mirror image into a symmetric diagram
    /// on `2m` vertices.
    pub fn glue(half: &MarkedCupDiagram) -> SymmetricDiagram {
        let m = half.m();
        let n = 2 * m;
        let mut cups: Vec<(usize, usize, bool)> = half.cups().to_vec();
        cups.extend(
            half.cups()
                .iter()
                .map(|&(i, j, mk)| (n + 1 - j, n + 1 - i, mk)),
        );
        let mut rays: Vec<(usize, bool)> = half.rays().to_vec();
        rays.extend(half.rays().iter().map(|&(i, mk)| (n + 1 - i, mk)));
        SymmetricDiagram::new(n, cups, rays).expect("gluing a valid half diagram")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cups(&self) -> &[(usize, usize, bool)] {
        &self.cups
    }

    pub fn rays(&self) -> &[(usize, bool)] {
        &self.rays
    }

    /// Cups whose endpoints lie on opposite sides of the central axis,
    /// innermost (largest left endpoint) first.
    pub fn axis_crossing_cups(&self) -> Vec<(usize, usize)> {
        let m = self.n / 2;
        let mut out: Vec<(usize, usize)> = self
            .cups
            .iter()
            .filter(|&&(i, j, _)| i <= m && j > m)
            .map(|&(i, j, _)| (i, j))
            .collect();
        out.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        out
    }

    pub fn is_fully_folded(&self) -> bool {
        self.axis_crossing_cups().is_empty()
    }

    /// Extract the left half of a fully folded diagram.
    pub fn crop(&self) -> Result<MarkedCupDiagram, DiagramError> {
        if !self.is_fully_folded() {
            return Err(DiagramError::Validation(
                "cannot crop: a cup still crosses the central axis".into(),
            ));
        }
        let m = self.n / 2;
        let cups = self
            .cups
            .iter()
            .filter(|&&(_, j, _)| j <= m)
            .copied()
            .collect();
        let rays = self
            .rays
            .iter()
            .filter(|&&(i, _)| i <= m)
            .copied()
            .collect();
        MarkedCupDiagram::new(m, cups, rays)
    }
}

/// One folding step at the central axis.  Returns the unmarked and the
/// marked outcome.
///
/// * If exactly one cup crosses the axis, it connects `i + 1` and
///   `n - i`; both endpoints become rays (unmarked in the first outcome,
///   marked in the second).
/// * If at least two cups cross, the two innermost ones connect
///   `i + 1, n - i` and `j + 1, n - j` with `i < j`; they are replaced by
///   the side-by-side cups `(i + 1, j + 1)` and `(n - j, n - i)`
///   (unmarked in the first outcome, both marked in the second).
pub fn fold_step(
    s: &SymmetricDiagram,
) -> Result<(SymmetricDiagram, SymmetricDiagram), DiagramError> {
    let crossing = s.axis_crossing_cups();
    if crossing.is_empty() {
        return Err(DiagramError::NoAxisCrossingCup);
    }
    let n = s.n;
    let rebuild = |new_cups: Vec<(usize, usize, bool)>, new_rays: Vec<(usize, bool)>| {
        SymmetricDiagram::new(n, new_cups, new_rays).expect("fold step preserves validity")
    };
    if crossing.len() == 1 {
        let (a, b) = crossing[0];
        let kept: Vec<(usize, usize, bool)> = s
            .cups
            .iter()
            .filter(|&&(i, j, _)| (i, j) != (a, b))
            .copied()
            .collect();
        let make = |marked: bool| {
            let mut rays = s.rays.clone();
            rays.push((a, marked));
            rays.push((b, marked));
            rebuild(kept.clone(), rays)
        };
        Ok((make(false), make(true)))
    } else {
        let (inner_l, inner_r) = crossing[0];
        let (outer_l, outer_r) = crossing[1];
        debug_assert!(outer_l < inner_l && inner_r < outer_r);
        let kept: Vec<(usize, usize, bool)> = s
            .cups
            .iter()
            .filter(|&&(i, j, _)| (i, j) != (inner_l, inner_r) && (i, j) != (outer_l, outer_r))
            .copied()
            .collect();
        let make = |marked: bool| {
            let mut cups = kept.clone();
            cups.push((outer_l, inner_l, marked));
            cups.push((inner_r, outer_r, marked));
            rebuild(cups, s.rays.clone())
        };
        Ok((make(false), make(true)))
    }
}

/// All marked cup diagrams obtained from a symmetric type-A diagram by
/// folding to completion (both outcomes at every step), deduplicated and
/// sorted.
pub fn fold_closure(a: &CupDiagram) -> Result<Vec<MarkedCupDiagram>, DiagramError> {
    let start = SymmetricDiagram::from_type_a(a)?;
    let mut out = BTreeSet::new();
    let mut stack = vec![start];
    while let Some(s) = stack.pop() {
        if s.is_fully_folded() {
            out.insert(s.crop()?);
        } else {
            let (plain, marked) = fold_step(&s)?;
            stack.push(plain);
            stack.push(marked);
        }
    }
    Ok(out.into_iter().collect())
}

/// Does the half diagram arise from folding the given symmetric type-A
/// diagram?
pub fn unfolds_to(half: &MarkedCupDiagram, a: &CupDiagram) -> Result<bool, DiagramError> {
    Ok(fold_closure(a)?.contains(half))
}

/// Binomial coefficient (exact, for the small parameters used here).
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for t in 0..k.min(n - k) {
        acc = acc * (n - t) as u128 / (t + 1) as u128;
    }
    acc
}

/// All type-A cup diagrams on `n` vertices with `k` cups, sorted.  Their
/// number is `C(n, k) - C(n, k - 1)`.
pub fn enumerate_type_a(n: usize, k: usize) -> Result<Vec<CupDiagram>, DiagramError> {
    if 2 * k > n {
        return Err(DiagramError::InvalidShape(format!(
            "need n >= 2k, got n = {n}, k = {k}"
        )));
    }
    let mut out = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut cups: Vec<(usize, usize)> = Vec::new();
    fn recurse(
        v: usize,
        n: usize,
        k: usize,
        open: &mut Vec<usize>,
        cups: &mut Vec<(usize, usize)>,
        out: &mut Vec<CupDiagram>,
    ) {
        if v > n {
            if open.is_empty() && cups.len() == k {
                out.push(CupDiagram::new(n, cups.clone()).expect("generated diagrams are valid"));
            }
            return;
        }
        // Close the innermost open cup.
        if let Some(&left) = open.last() {
            open.pop();
            cups.push((left, v));
            recurse(v + 1, n, k, open, cups, out);
            cups.pop();
            open.push(left);
        }
        // Open a new cup at v.
        if cups.len() + open.len() < k {
            open.push(v);
            recurse(v + 1, n, k, open, cups, out);
            open.pop();
        }
        // Leave v as a ray: only legal outside every cup.
        if open.is_empty() {
            recurse(v + 1, n, k, open, cups, out);
        }
    }
    recurse(1, n, k, &mut open, &mut cups, &mut out);
    out.sort_unstable();
    Ok(out)
}

/// Is `(n - k, k)` a valid two-row type D shape?  Either both block sizes
/// are odd, or the blocks are equal.
pub fn is_type_d_shape(n_minus_k: usize, k: usize) -> bool {
    if k > n_minus_k || k == 0 {
        return false;
    }
    (n_minus_k % 2 == 1 && k % 2 == 1) || n_minus_k == k
}

/// All marked cup diagrams for the type D shape `(n - k, k)`, sorted.
/// The diagrams live on `m = (n - k + k) / 2` vertices and have
/// `floor(k / 2)` cups.
pub fn enumerate_type_d(n_minus_k: usize, k: usize) -> Result<Vec<MarkedCupDiagram>, DiagramError> {
    if !is_type_d_shape(n_minus_k, k) {
        return Err(DiagramError::NotTypeDPartition(n_minus_k, k));
    }
    let n = n_minus_k + k;
    let m = n / 2;
    let cups = k / 2;
    let shapes = enumerate_type_a(m, cups)?;
    let mut out = Vec::new();
    for shape in shapes {
        let base_cups: Vec<(usize, usize)> = shape.cups().to_vec();
        let base_rays: Vec<usize> = shape.rays();
        // Independent marker choices: which cups and rays may be marked.
        let markable_cups: Vec<usize> = (0..base_cups.len())
            .filter(|&c| {
                let (i, j) = base_cups[c];
                base_rays.iter().all(|&r| r < j)
                    && !base_cups.iter().any(|&(a, b)| a < i && b > j)
            })
            .collect();
        let markable_rays: Vec<usize> = (0..base_rays.len())
            .filter(|&r| base_rays.iter().all(|&p| p <= base_rays[r]))
            .collect();
        let mc = markable_cups.len();
        let mr = markable_rays.len();
        for mask in 0u32..(1 << (mc + mr)) {
            let mut cup_marks = vec![false; base_cups.len()];
            let mut ray_marks = vec![false; base_rays.len()];
            for (bit, &c) in markable_cups.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    cup_marks[c] = true;
                }
            }
            for (bit, &r) in markable_rays.iter().enumerate() {
                if mask & (1 << (mc + bit)) != 0 {
                    ray_marks[r] = true;
                }
            }
            let d = MarkedCupDiagram::new(
                m,
                base_cups
                    .iter()
                    .zip(&cup_marks)
                    .map(|(&(i, j), &mk)| (i, j, mk))
                    .collect(),
                base_rays
                    .iter()
                    .zip(&ray_marks)
                    .map(|(&i, &mk)| (i, mk))
                    .collect(),
            )
            .expect("marker choices were checked");
            out.push(d);
        }
        let _ = mr;
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Diagram literals
// ---------------------------------------------------------------------------

fn parse_header_field(part: &str, key: &str) -> Result<usize, DiagramError> {
    let rest = part
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| DiagramError::Syntax(format!("expected {key}=<number>, got {part:?}")))?;
    rest.parse()
        .map_err(|_| DiagramError::Syntax(format!("invalid number in {part:?}")))
}

#[derive(Debug)]
enum Item {
    Cup(usize, usize, bool),
    Ray(usize, bool),
}

fn parse_items(src: &str) -> Result<Vec<Item>, DiagramError> {
    let src = src.trim();
    if src.is_empty() {
        return Ok(Vec::new());
    }
    src.split(',')
        .map(|raw| {
            let raw = raw.trim();
            let (body, marked) = match raw.strip_suffix('*') {
                Some(b) => (b.trim(), true),
                None => (raw, false),
            };
            if let Some((l, r)) = body.split_once('-') {
                let i = l.trim().parse().map_err(|_| {
                    DiagramError::Syntax(format!("invalid cup endpoint in {raw:?}"))
                })?;
                let j = r.trim().parse().map_err(|_| {
                    DiagramError::Syntax(format!("invalid cup endpoint in {raw:?}"))
                })?;
                Ok(Item::Cup(i, j, marked))
            } else {
                let i = body
                    .parse()
                    .map_err(|_| DiagramError::Syntax(format!("invalid ray vertex in {raw:?}")))?;
                Ok(Item::Ray(i, marked))
            }
        })
        .collect()
}

/// Parse a diagram literal.
///
/// * Type A: `A n=6 k=3: 1-2, 3-4, 5-6` (cups only; rays are implied).
/// * Type D: `D m=3 cups=1: 2-3, 1*` (all vertices listed; `*` marks).
/// * Symmetric: `S n=6: 1-6, 2-3*, 4-5*`.
pub fn parse_diagram(input: &str) -> Result<Diagram, DiagramError> {
    let t = input.trim();
    let (header, items_src) = t
        .split_once(':')
        .ok_or_else(|| DiagramError::Syntax("missing ':' after the header".into()))?;
    let mut header_parts = header.split_whitespace();
    let kind = header_parts
        .next()
        .ok_or_else(|| DiagramError::Syntax("empty header".into()))?;
    let fields: Vec<&str> = header_parts.collect();
    let items = parse_items(items_src)?;
    match kind {
        "A" => {
            if fields.len() != 2 {
                return Err(DiagramError::Syntax(
                    "type A header needs n=<n> k=<k>".into(),
                ));
            }
            let n = parse_header_field(fields[0], "n")?;
            let k = parse_header_field(fields[1], "k")?;
            let mut cups = Vec::new();
            for item in items {
                match item {
                    Item::Cup(i, j, false) => cups.push((i, j)),
                    Item::Cup(i, j, true) => {
                        return Err(DiagramError::Validation(format!(
                            "type A cup ({i},{j}) cannot carry a marker"
                        )))
                    }
                    Item::Ray(i, _) => {
                        return Err(DiagramError::Validation(format!(
                            "type A literals list cups only (found ray {i})"
                        )))
                    }
                }
            }
            if cups.len() != k {
                return Err(DiagramError::SizeMismatch(format!(
                    "declared k={k} but listed {} cups",
                    cups.len()
                )));
            }
            Ok(Diagram::TypeA(CupDiagram::new(n, cups)?))
        }
        "D" => {
            if fields.len() != 2 {
                return Err(DiagramError::Syntax(
                    "type D header needs m=<m> cups=<c>".into(),
                ));
            }
            let m = parse_header_field(fields[0], "m")?;
            let c = parse_header_field(fields[1], "cups")?;
            let mut cups = Vec::new();
            let mut rays = Vec::new();
            for item in items {
                match item {
                    Item::Cup(i, j, mk) => cups.push((i, j, mk)),
                    Item::Ray(i, mk) => rays.push((i, mk)),
                }
            }
            if cups.len() != c {
                return Err(DiagramError::SizeMismatch(format!(
                    "declared cups={c} but listed {}",
                    cups.len()
                )));
            }
            Ok(Diagram::TypeD(MarkedCupDiagram::new(m, cups, rays)?))
        }
        "S" => {
            if fields.len() != 1 {
                return Err(DiagramError::Syntax("symmetric header needs n=<n>".into()));
            }
            let n = parse_header_field(fields[0], "n")?;
            let mut cups = Vec::new();
            let mut rays = Vec::new();
            for item in items {
                match item {
                    Item::Cup(i, j, mk) => cups.push((i, j, mk)),
                    Item::Ray(i, mk) => rays.push((i, mk)),
                }
            }
            Ok(Diagram::Symmetric(SymmetricDiagram::new(n, cups, rays)?))
        }
        other => Err(DiagramError::Syntax(format!(
            "unknown diagram kind {other:?} (expected A, D or S)"
        ))),
    }
}

fn fmt_features(
    f: &mut fmt::Formatter<'_>,
    cups: &[(usize, usize, bool)],
    rays: &[(usize, bool)],
) -> fmt::Result {
    let mut items: Vec<(usize, String)> = cups
        .iter()
        .map(|&(i, j, mk)| (i, format!("{i}-{j}{}", if mk { "*" } else { "" })))
        .chain(
            rays.iter()
                .map(|&(i, mk)| (i, format!("{i}{}", if mk { "*" } else { "" }))),
        )
        .collect();
    items.sort_unstable();
    for (idx, (_, s)) in items.iter().enumerate() {
        if idx > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{s}")?;
    }
    Ok(())
}

impl fmt::Display for CupDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A n={} k={}:", self.n, self.k())?;
        if !self.cups.is_empty() {
            write!(f, " ")?;
            let cups: Vec<(usize, usize, bool)> =
                self.cups.iter().map(|&(i, j)| (i, j, false)).collect();
            fmt_features(f, &cups, &[])?;
        }
        Ok(())
    }
}

impl fmt::Display for MarkedCupDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D m={} cups={}:", self.m, self.cups.len())?;
        if self.m > 0 {
            write!(f, " ")?;
            fmt_features(f, &self.cups, &self.rays)?;
        }
        Ok(())
    }
}

impl fmt::Display for SymmetricDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S n={}:", self.n)?;
        if self.n > 0 {
            write!(f, " ")?;
            fmt_features(f, &self.cups, &self.rays)?;
        }
        Ok(())
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagram::TypeA(d) => d.fmt(f),
            Diagram::TypeD(d) => d.fmt(f),
            Diagram::Symmetric(d) => d.fmt(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(src: &str) -> MarkedCupDiagram {
        match parse_diagram(src).unwrap() {
            Diagram::TypeD(d) => d,
            _ => panic!("expected a type D literal"),
        }
    }

    fn a(src: &str) -> CupDiagram {
        match parse_diagram(src).unwrap() {
            Diagram::TypeA(d) => d,
            _ => panic!("expected a type A literal"),
        }
    }

    #[test]
    fn type_a_counts_match_closed_formula() {
        for n in 1..=10 {
            for k in 0..=(n / 2) {
                let count = enumerate_type_a(n, k).unwrap().len() as u128;
                assert_eq!(
                    count,
                    binomial(n, k) - binomial(n, k.wrapping_sub(1).min(n + 1)),
                    "n = {n}, k = {k}"
                );
            }
        }
    }

    #[test]
    fn type_a_validation() {
        assert!(CupDiagram::new(4, vec![(1, 2), (3, 4)]).is_ok());
        // Crossing cups.
        assert!(CupDiagram::new(4, vec![(1, 3), (2, 4)]).is_err());
        // Ray 2 inside the cup (1, 4) — wait, rays 2 and 3 both inside.
        assert!(CupDiagram::new(4, vec![(1, 4)]).is_err());
        // Nested cups are fine.
        assert!(CupDiagram::new(4, vec![(1, 4), (2, 3)]).is_ok());
        // Duplicate endpoint.
        assert!(CupDiagram::new(4, vec![(1, 2), (2, 3)]).is_err());
    }

    #[test]
    fn marker_accessibility() {
        // Marked cup blocked by a ray to its right.
        assert!(MarkedCupDiagram::new(3, vec![(1, 2, true)], vec![(3, false)]).is_err());
        // Marked cup with a ray to its left is fine.
        assert!(MarkedCupDiagram::new(3, vec![(2, 3, true)], vec![(1, false)]).is_ok());
        // A marked ray must be the rightmost ray.
        assert!(MarkedCupDiagram::new(3, vec![(2, 3, false)], vec![(1, true)]).is_ok());
        assert!(MarkedCupDiagram::new(2, vec![], vec![(1, true), (2, false)]).is_err());
        assert!(MarkedCupDiagram::new(2, vec![], vec![(1, false), (2, true)]).is_ok());
        // Marked cup blocked by an enclosing cup.
        assert!(MarkedCupDiagram::new(4, vec![(1, 4, false), (2, 3, true)], vec![]).is_err());
        assert!(MarkedCupDiagram::new(4, vec![(1, 4, true), (2, 3, false)], vec![]).is_ok());
        // A cup to the right never blocks.
        assert!(MarkedCupDiagram::new(4, vec![(1, 2, true), (3, 4, false)], vec![]).is_ok());
    }

    #[test]
    fn type_d_counts_frozen() {
        for ((nk, k), expected) in [
            ((1, 1), 2),
            ((2, 2), 2),
            ((3, 1), 2),
            ((3, 3), 6),
            ((5, 1), 2),
            ((5, 3), 8),
            ((4, 4), 6),
            ((5, 5), 20),
        ] {
            let ds = enumerate_type_d(nk, k).unwrap();
            assert_eq!(ds.len(), expected, "shape ({nk},{k})");
            // Every enumerated diagram recovers its shape.
            for di in &ds {
                assert_eq!(di.shape(), (nk, k));
            }
        }
        assert_eq!(
            enumerate_type_d(4, 2).unwrap_err(),
            DiagramError::NotTypeDPartition(4, 2)
        );
        assert!(enumerate_type_d(2, 3).is_err());
    }

    #[test]
    fn parse_and_display_roundtrip() {
        for src in [
            "A n=6 k=3: 1-2, 3-4, 5-6",
            "A n=5 k=1: 2-3",
            "A n=1 k=0:",
            "D m=3 cups=1: 1*, 2-3",
            "D m=4 cups=1: 1, 2, 3-4*",
            "S n=6: 1-6, 2-3*, 4-5*",
        ] {
            let d = parse_diagram(src).unwrap();
            assert_eq!(d.to_string(), src);
            assert_eq!(parse_diagram(&d.to_string()).unwrap(), d);
        }
        // Canonical output sorts features by leftmost vertex.
        assert_eq!(
            parse_diagram("D m=3 cups=1: 2-3, 1*").unwrap().to_string(),
            "D m=3 cups=1: 1*, 2-3"
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_diagram("A n=6 k=2: 1-2, 3-4, 5-6"),
            Err(DiagramError::SizeMismatch(_))
        ));
        assert!(matches!(
            parse_diagram("D m=3 cups=1: 2-3"),
            Err(DiagramError::SizeMismatch(_))
        ));
        assert!(matches!(
            parse_diagram("B n=2 k=1: 1-2"),
            Err(DiagramError::Syntax(_))
        ));
        assert!(matches!(
            parse_diagram("A n=2 k=1 1-2"),
            Err(DiagramError::Syntax(_))
        ));
        // Marker on a type A cup is rejected.
        assert!(parse_diagram("A n=2 k=1: 1-2*").is_err());
    }

    #[test]
    fn stats_on_examples() {
        let diagram = a("A n=6 k=2: 2-3, 4-5");
        assert_eq!(diagram.rays(), vec![1, 6]);
        assert_eq!(diagram.rho(1), 1);
        assert_eq!(diagram.rho(5), 1);
        assert_eq!(diagram.rho(6), 2);
        assert_eq!(diagram.cups_left_of(6), 2);
        assert_eq!(diagram.partner(2), Some(3));
        assert_eq!(diagram.partner(5), Some(4));
        assert_eq!(diagram.partner(1), None);
        assert_eq!(diagram.cup_midpoint(2), Some(2));
        // Nested cups: the midpoint of the outer cup.
        let nested = a("A n=4 k=2: 1-4, 2-3");
        assert_eq!(nested.cup_midpoint(1), Some(2));
        assert_eq!(nested.cup_midpoint(4), Some(2));
    }

    #[test]
    fn shape_recovery() {
        assert_eq!(d("D m=3 cups=1: 1, 2-3").shape(), (3, 3));
        assert_eq!(d("D m=2 cups=1: 1-2").shape(), (2, 2));
        assert_eq!(d("D m=4 cups=1: 1, 2, 3-4").shape(), (5, 3));
        assert_eq!(d("D m=3 cups=0: 1, 2, 3").shape(), (5, 1));
    }

    #[test]
    fn folding_six_into_three() {
        // The three symmetric diagrams with all six vertices cupped.
        let m1 = a("A n=6 k=3: 1-2, 3-4, 5-6");
        let m3 = a("A n=6 k=3: 1-6, 2-5, 3-4");
        let m4 = a("A n=6 k=3: 1-6, 2-3, 4-5");
        assert!(m1.is_symmetric() && m3.is_symmetric() && m4.is_symmetric());
        // The non-symmetric members of the same family cannot be folded.
        let ns = a("A n=6 k=3: 1-2, 3-6, 4-5");
        assert!(!ns.is_symmetric());
        assert!(fold_closure(&ns).is_err());

        let f1 = fold_closure(&m1).unwrap();
        assert_eq!(
            f1,
            vec![d("D m=3 cups=1: 1-2, 3"), d("D m=3 cups=1: 1-2, 3*")]
        );
        let f4 = fold_closure(&m4).unwrap();
        assert_eq!(
            f4,
            vec![d("D m=3 cups=1: 1, 2-3"), d("D m=3 cups=1: 1*, 2-3")]
        );
        let f3 = fold_closure(&m3).unwrap();
        assert_eq!(
            f3,
            vec![
                d("D m=3 cups=1: 1, 2-3"),
                d("D m=3 cups=1: 1*, 2-3"),
                d("D m=3 cups=1: 1, 2-3*"),
                d("D m=3 cups=1: 1*, 2-3*"),
            ]
        );
        // Together the closures cover all six type D diagrams for (3,3).
        let mut union: BTreeSet<MarkedCupDiagram> = BTreeSet::new();
        union.extend(f1);
        union.extend(f3);
        union.extend(f4);
        let all = enumerate_type_d(3, 3).unwrap();
        assert_eq!(union.into_iter().collect::<Vec<_>>(), all);
    }

    #[test]
    fn fold_step_cases() {
        // One axis-crossing cup: it becomes two rays.
        let s = SymmetricDiagram::from_type_a(&a("A n=6 k=3: 1-2, 3-4, 5-6")).unwrap();
        let (plain, marked) = fold_step(&s).unwrap();
        assert_eq!(plain.to_string(), "S n=6: 1-2, 3, 4, 5-6");
        assert_eq!(marked.to_string(), "S n=6: 1-2, 3*, 4*, 5-6");
        assert!(plain.is_fully_folded());
        // Two nested axis-crossing cups become side-by-side cups.
        let s = SymmetricDiagram::from_type_a(&a("A n=6 k=3: 1-6, 2-5, 3-4")).unwrap();
        let (plain, marked) = fold_step(&s).unwrap();
        assert_eq!(plain.to_string(), "S n=6: 1-6, 2-3, 4-5");
        assert_eq!(marked.to_string(), "S n=6: 1-6, 2-3*, 4-5*");
        assert!(!plain.is_fully_folded());
        // Fully folded diagrams cannot be folded further.
        let done = parse_diagram("S n=6: 1-2, 3, 4, 5-6").unwrap();
        if let Diagram::Symmetric(sd) = done {
            assert_eq!(fold_step(&sd).unwrap_err(), DiagramError::NoAxisCrossingCup);
            assert_eq!(sd.crop().unwrap(), d("D m=3 cups=1: 1-2, 3"));
        } else {
            unreachable!()
        }
    }

    #[test]
    fn unfold_membership() {
        let a123 = a("A n=6 k=3: 1-6, 2-3, 4-5");
        assert!(unfolds_to(&d("D m=3 cups=1: 1, 2-3"), &a123).unwrap());
        assert!(unfolds_to(&d("D m=3 cups=1: 1*, 2-3"), &a123).unwrap());
        assert!(!unfolds_to(&d("D m=3 cups=1: 1-2, 3"), &a123).unwrap());
        assert!(!unfolds_to(&d("D m=3 cups=1: 1, 2-3*"), &a123).unwrap());
    }

    #[test]
    fn glue_and_crop_are_inverse() {
        for (nk, k) in [(3, 3), (5, 3), (4, 4), (5, 5), (5, 1)] {
            for half in enumerate_type_d(nk, k).unwrap() {
                let glued = SymmetricDiagram::glue(&half);
                assert!(glued.is_fully_folded());
                assert_eq!(glued.crop().unwrap(), half);
            }
        }
    }

    #[test]
    fn marked_diagram_equals_fold_closure_union() {
        // Every type D diagram arises from folding some symmetric type A
        // diagram of the doubled shape, and vice versa.
        for (nk, k_d, n, k_a) in [(3, 3, 6, 3), (2, 2, 4, 2), (3, 1, 4, 1), (4, 4, 8, 4)] {
            let mut union: BTreeSet<MarkedCupDiagram> = BTreeSet::new();
            for cand in enumerate_type_a(n, k_a).unwrap() {
                if cand.is_symmetric() {
                    union.extend(fold_closure(&cand).unwrap());
                }
            }
            let all: BTreeSet<MarkedCupDiagram> =
                enumerate_type_d(nk, k_d).unwrap().into_iter().collect();
            assert_eq!(union, all, "shape ({nk},{k_d})");
        }
    }

    #[test]
    fn symmetric_validation() {
        assert!(parse_diagram("S n=6: 1-6, 2-5, 3-4").is_ok());
        // Asymmetric cups.
        assert!(parse_diagram("S n=6: 1-2, 3-4, 5, 6").is_err());
        // Marker on an axis-crossing cup.
        assert!(parse_diagram("S n=6: 1-6*, 2-5, 3-4").is_err());
        // Asymmetric markers.
        assert!(parse_diagram("S n=6: 1-6, 2-3*, 4-5").is_err());
        // Odd vertex count.
        assert!(matches!(
            parse_diagram("S n=3: 1, 2, 3"),
            Err(DiagramError::InvalidShape(_))
        ));
    }
}
