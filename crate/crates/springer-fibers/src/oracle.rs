//! Brute-force ground truth over finite fields.
//!
//! Everything else in this crate describes Springer fibers through closed
//! formulas: component relations, parameter maps, quotient isometries.
//! This module checks those descriptions against reality by exhaustively
//! enumerating all x-stable (and, in type D, isotropic) complete flags
//! over a small prime field and tabulating which component relations each
//! flag satisfies.
//!
//! Enumeration is recursive: the next space always lies in the preimage
//! of the previous one, so each step ranges over the lines of a small
//! subspace.  Type D only generates the bottom half of a flag and mirrors
//! the top by orthogonal complements, which the defining conditions make
//! redundant.  Characteristic 2 replaces the bilinear isotropy condition
//! by the vanishing of its quadratic refinement.

use crate::diagram::{is_type_d_shape, CupDiagram, Diagram, MarkedCupDiagram};
use crate::flag::{
    combine, complete_isotropic_flag, gram_matrix, in_type_a_component, in_type_d_component,
    inverse_image_power, quadratic_value, Flag, FlagError, TwoBlockNilpotent,
};
use exact_linalg::subspace::LinalgError;
use exact_linalg::{image, FieldSpec, Matrix, Scalar, Subspace};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration exceeded the cap of {0} flags")]
    CapExceeded(u64),
    #[error("invalid task: {0}")]
    Validation(String),
    #[error(transparent)]
    Flag(#[from] FlagError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One exhaustive enumeration job: a two-row shape, a prime field, the
/// flag variety type, and a safety cap on the number of flags produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationTask {
    pub lambda: (usize, usize),
    pub q: u64,
    pub type_d: bool,
    pub max_count: u64,
}

pub const DEFAULT_MAX_COUNT: u64 = 10_000_000;

impl EnumerationTask {
    pub fn new(lambda: (usize, usize), q: u64, type_d: bool) -> EnumerationTask {
        EnumerationTask {
            lambda,
            q,
            type_d,
            max_count: DEFAULT_MAX_COUNT,
        }
    }

    pub fn field(&self) -> FieldSpec {
        FieldSpec::Prime(self.q)
    }

    fn validate(&self) -> Result<(), OracleError> {
        if !is_prime(self.q) {
            return Err(OracleError::Validation(format!(
                "{} is not a prime",
                self.q
            )));
        }
        if self.q >= 1 << 8 {
            return Err(OracleError::Validation(format!(
                "exhaustive enumeration is restricted to q < 256, got {}",
                self.q
            )));
        }
        let (a, b) = self.lambda;
        if a < b || a + b == 0 {
            return Err(OracleError::Validation(format!(
                "({a},{b}) is not a two-row shape"
            )));
        }
        if self.type_d && !is_type_d_shape(a, b) {
            return Err(OracleError::Validation(format!(
                "({a},{b}) is not a type D shape"
            )));
        }
        Ok(())
    }
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Visit every complete flag fixed by the Springer condition of the task:
/// type A visits all `x`-stable full flags, type D all isotropic
/// `x`-stable flags.  Returns the number of flags visited.
pub fn enumerate_stable_flags<F>(task: &EnumerationTask, visit: &mut F) -> Result<u64, OracleError>
where
    F: FnMut(&Flag) -> Result<(), OracleError>,
{
    task.validate()?;
    let field = task.field();
    let (nk, k) = task.lambda;
    let x = TwoBlockNilpotent::new(field, nk, k);
    let mut count = 0u64;
    let mut half: Vec<Subspace> = Vec::new();
    if task.type_d {
        let g = gram_matrix(field, nk, k)?;
        recurse_type_d(task, &x, &g, &mut half, &mut count, visit)?;
    } else {
        recurse_type_a(task, &x, &mut half, &mut count, visit)?;
    }
    Ok(count)
}

/// Collect the enumeration into a vector (small shapes only).
pub fn collect_stable_flags(task: &EnumerationTask) -> Result<Vec<Flag>, OracleError> {
    let mut out = Vec::new();
    enumerate_stable_flags(task, &mut |fl| {
        out.push(fl.clone());
        Ok(())
    })?;
    Ok(out)
}

fn last_space(field: FieldSpec, n: usize, half: &[Subspace]) -> Subspace {
    match half.last() {
        Some(s) => s.clone(),
        None => Subspace::zero(field, n),
    }
}

fn recurse_type_a<F>(
    task: &EnumerationTask,
    x: &TwoBlockNilpotent,
    half: &mut Vec<Subspace>,
    count: &mut u64,
    visit: &mut F,
) -> Result<(), OracleError>
where
    F: FnMut(&Flag) -> Result<(), OracleError>,
{
    let field = task.field();
    let n = x.n();
    let prev = last_space(field, n, half);
    if half.len() + 1 == n || n == 1 {
        // The top space is forced; the last stability condition says the
        // image of x lies in the penultimate space.
        if prev.contains(&image(x.matrix())) {
            let fl = Flag::from_inner(field, n, half.clone())?;
            *count += 1;
            if *count > task.max_count {
                return Err(OracleError::CapExceeded(task.max_count));
            }
            visit(&fl)?;
        }
        return Ok(());
    }
    let candidates = inverse_image_power(x.matrix(), 1, &prev);
    for_each_new_line(&candidates, &prev, task.q, &mut |v| {
        half.push(prev.sum_vector(&v));
        let r = recurse_type_a(task, x, half, count, visit);
        half.pop();
        r
    })
}

fn recurse_type_d<F>(
    task: &EnumerationTask,
    x: &TwoBlockNilpotent,
    g: &Matrix,
    half: &mut Vec<Subspace>,
    count: &mut u64,
    visit: &mut F,
) -> Result<(), OracleError>
where
    F: FnMut(&Flag) -> Result<(), OracleError>,
{
    let field = task.field();
    let n = x.n();
    let m = n / 2;
    if half.len() == m {
        let fl = complete_isotropic_flag(field, g, half)?;
        *count += 1;
        if *count > task.max_count {
            return Err(OracleError::CapExceeded(task.max_count));
        }
        return visit(&fl);
    }
    let prev = last_space(field, n, half);
    let candidates = inverse_image_power(x.matrix(), 1, &prev).intersect(&prev.orth_complement(g)?)?;
    let char2 = field.characteristic() == 2;
    for_each_new_line(&candidates, &prev, task.q, &mut |v| {
        if !pairing(g, &v, &v).is_zero() {
            return Ok(());
        }
        if char2 && !quadratic_value(g, &v).is_zero() {
            return Ok(());
        }
        half.push(prev.sum_vector(&v));
        let r = recurse_type_d(task, x, g, half, count, visit);
        half.pop();
        r
    })
}

/// Visit one representative vector for every line of the quotient
/// `sub / smaller`: distinct representatives extend `smaller` to distinct
/// subspaces.  The representatives range over the nonzero normalised
/// combinations (first nonzero coefficient one) of a complement basis of
/// `smaller` inside `sub`.
fn for_each_new_line<F>(
    sub: &Subspace,
    smaller: &Subspace,
    q: u64,
    f: &mut F,
) -> Result<(), OracleError>
where
    F: FnMut(Vec<Scalar>) -> Result<(), OracleError>,
{
    let field = sub.field();
    let basis = smaller.extension_vectors(sub);
    let d = basis.len();
    for pivot in 0..d {
        let free = d - pivot - 1;
        let mut digits = vec![0u64; free];
        'tuples: loop {
            let mut v = basis[pivot].clone();
            for (t, &c) in digits.iter().enumerate() {
                if c != 0 {
                    v = combine(
                        &Scalar::one(field),
                        &v,
                        &Scalar::from_i64(field, c as i64),
                        &basis[pivot + 1 + t],
                    );
                }
            }
            debug_assert!(!smaller.contains_vector(&v));
            f(v)?;
            let mut t = free;
            loop {
                if t == 0 {
                    break 'tuples;
                }
                t -= 1;
                digits[t] += 1;
                if digits[t] < q {
                    break;
                }
                digits[t] = 0;
            }
        }
    }
    Ok(())
}

fn pairing(g: &Matrix, u: &[Scalar], v: &[Scalar]) -> Scalar {
    let gu = g.apply(v);
    let mut acc = Scalar::zero(g.field());
    for (a, b) in u.iter().zip(&gu) {
        acc = &acc + &(a * b);
    }
    acc
}

/// Overlap of two component point sets, by diagram labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapEntry {
    pub first: String,
    pub second: String,
    pub count: u64,
}

/// The result of classifying every enumerated flag against a list of
/// components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionReport {
    pub total_flags: u64,
    /// Component label (the diagram rendered as text) to point count.
    pub per_component: BTreeMap<String, u64>,
    /// Flags satisfying no component's relations.
    pub uncovered: Vec<Flag>,
    /// Nonzero pairwise intersections of component point sets.
    pub overlaps: Vec<OverlapEntry>,
    /// Type D only: distribution of `dim(F_m` intersected with the long
    /// chain span`) mod 2`, separating the two connected components of
    /// the orthogonal flag variety.  Informational.
    pub middle_parity_counts: [u64; 2],
}

impl DecompositionReport {
    /// Number of flags lying in at least one component; by construction
    /// `total_flags = covered + uncovered.len()`.
    pub fn covered(&self) -> u64 {
        self.total_flags - self.uncovered.len() as u64
    }
}

fn tabulate<F>(
    task: &EnumerationTask,
    labels: &[String],
    mut verdicts: F,
    parity: Option<(TwoBlockNilpotent, Subspace)>,
) -> Result<DecompositionReport, OracleError>
where
    F: FnMut(&Flag) -> Result<Vec<bool>, OracleError>,
{
    let mut per: BTreeMap<String, u64> = labels.iter().map(|l| (l.clone(), 0)).collect();
    if per.len() != labels.len() {
        return Err(OracleError::Validation("duplicate diagram labels".into()));
    }
    let mut pair_counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut uncovered = Vec::new();
    let mut parity_counts = [0u64; 2];
    let total = enumerate_stable_flags(task, &mut |fl| {
        let hits = verdicts(fl)?;
        let members: Vec<usize> = (0..hits.len()).filter(|&i| hits[i]).collect();
        for &i in &members {
            *per.get_mut(&labels[i]).expect("initialised") += 1;
        }
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                *pair_counts.entry((members[a], members[b])).or_insert(0) += 1;
            }
        }
        if members.is_empty() {
            uncovered.push(fl.clone());
        }
        if let Some((ref x, ref span)) = parity {
            let mid = fl.space(x.n() / 2).intersect(span)?;
            parity_counts[mid.dim() % 2] += 1;
        }
        Ok(())
    })?;
    let overlaps = pair_counts
        .into_iter()
        .map(|((a, b), count)| OverlapEntry {
            first: labels[a].clone(),
            second: labels[b].clone(),
            count,
        })
        .collect();
    Ok(DecompositionReport {
        total_flags: total,
        per_component: per,
        uncovered,
        overlaps,
        middle_parity_counts: parity_counts,
    })
}

/// Classify every isotropic x-stable flag of the task against the listed
/// type D components.
pub fn decompose_type_d(
    task: &EnumerationTask,
    diagrams: &[MarkedCupDiagram],
) -> Result<DecompositionReport, OracleError> {
    if !task.type_d {
        return Err(OracleError::Validation(
            "type D decomposition needs a type D task".into(),
        ));
    }
    task.validate()?;
    let field = task.field();
    let (nk, k) = task.lambda;
    let x = TwoBlockNilpotent::new(field, nk, k);
    let labels: Vec<String> = diagrams.iter().map(|d| d.to_string()).collect();
    let span = x.coordinate_space(nk, 0);
    let x_parity = TwoBlockNilpotent::new(field, nk, k);
    tabulate(
        task,
        &labels,
        |fl| {
            diagrams
                .iter()
                .map(|d| Ok(in_type_d_component(fl, &x, d)?.all_hold))
                .collect()
        },
        Some((x_parity, span)),
    )
}

/// Classify every x-stable full flag of the task against the listed
/// type A components.
pub fn decompose_type_a(
    task: &EnumerationTask,
    diagrams: &[CupDiagram],
) -> Result<DecompositionReport, OracleError> {
    if task.type_d {
        return Err(OracleError::Validation(
            "type A decomposition needs a type A task".into(),
        ));
    }
    task.validate()?;
    let field = task.field();
    let (nk, k) = task.lambda;
    let x = TwoBlockNilpotent::new(field, nk, k);
    let labels: Vec<String> = diagrams.iter().map(|d| d.to_string()).collect();
    tabulate(
        task,
        &labels,
        |fl| {
            diagrams
                .iter()
                .map(|d| Ok(in_type_a_component(fl, &x, d)?))
                .collect()
        },
        None,
    )
}

/// Count the rational points of one component over `F_q` by filtering
/// the exhaustive enumeration.
pub fn count_component(diagram: &Diagram, q: u64) -> Result<u64, OracleError> {
    match diagram {
        Diagram::TypeA(a) => {
            let task = EnumerationTask::new((a.n() - a.k(), a.k()), q, false);
            let x = TwoBlockNilpotent::new(task.field(), a.n() - a.k(), a.k());
            let mut hits = 0u64;
            enumerate_stable_flags(&task, &mut |fl| {
                if in_type_a_component(fl, &x, a)? {
                    hits += 1;
                }
                Ok(())
            })?;
            Ok(hits)
        }
        Diagram::TypeD(d) => {
            let (nk, k) = d.shape();
            let task = EnumerationTask::new((nk, k), q, true);
            let x = TwoBlockNilpotent::new(task.field(), nk, k);
            let mut hits = 0u64;
            enumerate_stable_flags(&task, &mut |fl| {
                if in_type_d_component(fl, &x, d)?.all_hold {
                    hits += 1;
                }
                Ok(())
            })?;
            Ok(hits)
        }
        Diagram::Symmetric(_) => Err(OracleError::Validation(
            "partially folded diagrams do not index components".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{enumerate_type_a, enumerate_type_d, parse_diagram};

    fn type_d(src: &str) -> MarkedCupDiagram {
        match parse_diagram(src).unwrap() {
            Diagram::TypeD(d) => d,
            _ => panic!("expected type D"),
        }
    }

    fn type_a(src: &str) -> CupDiagram {
        match parse_diagram(src).unwrap() {
            Diagram::TypeA(d) => d,
            _ => panic!("expected type A"),
        }
    }

    #[test]
    fn smallest_type_d_shape_has_two_flags_over_f2() {
        let task = EnumerationTask::new((1, 1), 2, true);
        let flags = collect_stable_flags(&task).unwrap();
        assert_eq!(flags.len(), 2);
        let report = decompose_type_d(&task, &enumerate_type_d(1, 1).unwrap()).unwrap();
        assert_eq!(report.total_flags, 2);
        assert!(report.uncovered.is_empty());
        assert!(report.overlaps.is_empty());
        for (_, count) in &report.per_component {
            assert_eq!(*count, 1);
        }
    }

    #[test]
    fn one_cup_equal_blocks_split_into_two_disjoint_components() {
        let task = EnumerationTask::new((2, 2), 3, true);
        let report = decompose_type_d(&task, &enumerate_type_d(2, 2).unwrap()).unwrap();
        assert_eq!(report.total_flags, 8);
        assert!(report.uncovered.is_empty());
        assert!(report.overlaps.is_empty());
        for (_, count) in &report.per_component {
            assert_eq!(*count, 4);
        }
        // The two families lie in the two connected components of the
        // orthogonal flag variety, visible through the parity of the
        // middle space's intersection with the long chain span.
        let over5 = decompose_type_d(
            &EnumerationTask::new((2, 2), 5, true),
            &enumerate_type_d(2, 2).unwrap(),
        )
        .unwrap();
        assert_eq!(over5.middle_parity_counts, [6, 6]);
    }

    #[test]
    fn type_a_hook_shape_decomposes_with_full_cover() {
        let task = EnumerationTask::new((2, 1), 2, false);
        let diagrams = enumerate_type_a(3, 1).unwrap();
        let report = decompose_type_a(&task, &diagrams).unwrap();
        assert!(report.uncovered.is_empty());
        for (_, count) in &report.per_component {
            assert_eq!(*count, 3);
        }
        assert_eq!(report.covered() + report.uncovered.len() as u64, report.total_flags);
    }

    #[test]
    fn component_counts_follow_the_cup_count() {
        assert_eq!(
            count_component(&Diagram::TypeD(type_d("D m=2 cups=1: 1-2*")), 3).unwrap(),
            4
        );
        assert_eq!(
            count_component(&Diagram::TypeD(type_d("D m=2 cups=0: 1, 2")), 5).unwrap(),
            1
        );
        assert_eq!(
            count_component(&Diagram::TypeA(type_a("A n=2 k=1: 1-2")), 2).unwrap(),
            3
        );
    }

    #[test]
    fn enumeration_matches_the_parameter_map_pointwise() {
        let adot = type_d("D m=2 cups=1: 1-2*");
        let task = EnumerationTask::new((2, 2), 5, true);
        let x = TwoBlockNilpotent::new(task.field(), 2, 2);
        let mut filtered = Vec::new();
        enumerate_stable_flags(&task, &mut |fl| {
            if in_type_d_component(fl, &x, &adot)?.all_hold {
                filtered.push(fl.clone());
            }
            Ok(())
        })
        .unwrap();
        let built: Vec<Flag> = crate::bundle::enumerate_component(&adot, task.field())
            .unwrap()
            .into_iter()
            .map(|(_, fl)| fl)
            .collect();
        assert_eq!(filtered.len(), built.len());
        for fl in &built {
            assert!(filtered.contains(fl));
        }
    }

    #[test]
    fn task_validation_rejects_bad_input() {
        assert!(matches!(
            collect_stable_flags(&EnumerationTask::new((2, 2), 4, true)),
            Err(OracleError::Validation(_))
        ));
        assert!(matches!(
            collect_stable_flags(&EnumerationTask::new((2, 2), 257, true)),
            Err(OracleError::Validation(_))
        ));
        assert!(matches!(
            collect_stable_flags(&EnumerationTask::new((3, 2), 5, true)),
            Err(OracleError::Validation(_))
        ));
        let mut capped = EnumerationTask::new((2, 2), 3, true);
        capped.max_count = 1;
        assert!(matches!(
            collect_stable_flags(&capped),
            Err(OracleError::CapExceeded(1))
        ));
    }
}
