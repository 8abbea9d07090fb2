//! JSON wire formats for fixtures and reports.
//!
//! Scalars travel as exact strings (`"2/3"`, `"1-2i"`, `"4"`), matrices
//! and subspace bases as arrays of scalar-string rows, and diagrams in
//! their textual form.  All maps are ordered, so serialising the same
//! value twice produces identical bytes.

use crate::bundle::BundleReport;
use crate::flag::{Flag, FlagError, RelationReport};
use crate::oracle::DecompositionReport;
use crate::quiver::{framing_vertices, QuiverError, QuiverRep};
use exact_linalg::matrix::MatrixError;
use exact_linalg::scalar::sqrt_minus_one;
use exact_linalg::subspace::LinalgError;
use exact_linalg::{FieldSpec, Matrix, Scalar, Subspace};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("cannot parse {0:?} as {1}")]
    Parse(String, &'static str),
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
    #[error(transparent)]
    Flag(#[from] FlagError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Parse a field name: `Q`, `Qi`, or a prime field as `Fp:5` or `F5`.
pub fn parse_field(s: &str) -> Result<FieldSpec, JsonError> {
    match s {
        "Q" => Ok(FieldSpec::Rationals),
        "Qi" => Ok(FieldSpec::GaussianRationals),
        _ => {
            let digits = s
                .strip_prefix("Fp:")
                .or_else(|| s.strip_prefix('F'))
                .ok_or_else(|| JsonError::Parse(s.to_string(), "field name"))?;
            let p: u64 = digits
                .parse()
                .map_err(|_| JsonError::Parse(s.to_string(), "field name"))?;
            Ok(FieldSpec::Prime(p))
        }
    }
}

pub fn field_string(field: FieldSpec) -> String {
    field.to_string()
}

/// Parse an exact scalar: an optionally signed sum of terms, each a
/// rational `num` or `num/den` with an optional `i` suffix (Gaussian
/// rationals only).  Accepts everything the `Display` form produces.
pub fn parse_scalar(field: FieldSpec, s: &str) -> Result<Scalar, JsonError> {
    let text = s.trim();
    if text.is_empty() {
        return Err(JsonError::Parse(s.to_string(), "scalar"));
    }
    let bad = || JsonError::Parse(s.to_string(), "scalar");
    let mut total = Scalar::zero(field);
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    while pos < chars.len() {
        let negative = match chars[pos] {
            '+' => {
                pos += 1;
                false
            }
            '-' => {
                pos += 1;
                true
            }
            _ => false,
        };
        let start = pos;
        while pos < chars.len() && chars[pos] != '+' && chars[pos] != '-' {
            pos += 1;
        }
        let term: String = chars[start..pos].iter().collect();
        if term.is_empty() {
            return Err(bad());
        }
        let (body, imaginary) = match term.strip_suffix('i') {
            Some(rest) => (rest.to_string(), true),
            None => (term, false),
        };
        let mut value = if body.is_empty() {
            if !imaginary {
                return Err(bad());
            }
            Scalar::one(field)
        } else if let Some((num, den)) = body.split_once('/') {
            let num: i64 = num.parse().map_err(|_| bad())?;
            let den: i64 = den.parse().map_err(|_| bad())?;
            Scalar::from_fraction(field, num, den).map_err(|_| bad())?
        } else {
            let num: i64 = body.parse().map_err(|_| bad())?;
            Scalar::from_i64(field, num)
        };
        if imaginary {
            let unit = sqrt_minus_one(field).ok_or_else(bad)?;
            if field != FieldSpec::GaussianRationals {
                // Only the Gaussian rationals spell their imaginary unit
                // "i"; other fields must use their own residues.
                return Err(bad());
            }
            value = &value * &unit;
        }
        if negative {
            value = value.negate();
        }
        total = &total + &value;
    }
    Ok(total)
}

pub fn scalar_string(s: &Scalar) -> String {
    s.to_string()
}

pub fn matrix_strings(m: &Matrix) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j).to_string()).collect())
        .collect()
}

/// Parse a matrix from rows of scalar strings; all rows must have the
/// same length and there must be at least one row.
pub fn parse_matrix(field: FieldSpec, rows: &[Vec<String>]) -> Result<Matrix, JsonError> {
    if rows.is_empty() {
        return Err(JsonError::Parse(
            "[]".to_string(),
            "matrix (needs at least one row)",
        ));
    }
    let cols = rows[0].len();
    let mut parsed = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != cols {
            return Err(JsonError::Parse(format!("{row:?}"), "matrix (ragged rows)"));
        }
        let mut out = Vec::with_capacity(cols);
        for cell in row {
            out.push(parse_scalar(field, cell)?);
        }
        parsed.push(out);
    }
    Ok(Matrix::from_rows(field, parsed)?)
}

/// A quiver representation fixture: interior arrow matrices in vertex
/// order plus the framing arrows, all as scalar-string rows.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct QuiverFixture {
    pub field: String,
    pub n: usize,
    pub k: usize,
    #[serde(default)]
    pub a: Vec<Vec<Vec<String>>>,
    #[serde(default)]
    pub b: Vec<Vec<Vec<String>>>,
    #[serde(default)]
    pub gamma: BTreeMap<String, Vec<Vec<String>>>,
}

impl QuiverFixture {
    pub fn to_rep(&self) -> Result<QuiverRep, JsonError> {
        let field = parse_field(&self.field)?;
        let a = self
            .a
            .iter()
            .map(|rows| parse_matrix(field, rows))
            .collect::<Result<Vec<_>, _>>()?;
        let b = self
            .b
            .iter()
            .map(|rows| parse_matrix(field, rows))
            .collect::<Result<Vec<_>, _>>()?;
        let mut gamma = Vec::new();
        for (vertex, rows) in &self.gamma {
            let j: usize = vertex
                .parse()
                .map_err(|_| JsonError::Parse(vertex.clone(), "framing vertex"))?;
            gamma.push((j, parse_matrix(field, rows)?));
        }
        Ok(QuiverRep::springer(field, self.n, self.k, a, b, gamma)?)
    }

    pub fn from_rep(rep: &QuiverRep) -> QuiverFixture {
        let n = rep.n();
        let k = rep.k();
        let interior = n.saturating_sub(2);
        let a = (1..=interior).map(|i| matrix_strings(&rep.a_map(i))).collect();
        let b = (1..=interior).map(|i| matrix_strings(&rep.b_map(i))).collect();
        let gamma = framing_vertices(n, k)
            .into_iter()
            .filter_map(|j| rep.gamma(j).map(|m| (j.to_string(), matrix_strings(m))))
            .collect();
        QuiverFixture {
            field: rep.field().to_string(),
            n,
            k,
            a,
            b,
            gamma,
        }
    }
}

/// A flag fixture: the proper subspaces `F_1, ..., F_{n-1}` as basis
/// rows, plus the two-row shape giving the nilpotent context.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FlagFixture {
    pub field: String,
    pub shape: [usize; 2],
    pub spaces: Vec<Vec<Vec<String>>>,
}

impl FlagFixture {
    pub fn to_flag(&self) -> Result<Flag, JsonError> {
        let field = parse_field(&self.field)?;
        let n = self.shape[0] + self.shape[1];
        let mut inner = Vec::with_capacity(self.spaces.len());
        for rows in &self.spaces {
            let mut vectors = Vec::with_capacity(rows.len());
            for row in rows {
                let mut v = Vec::with_capacity(row.len());
                for cell in row {
                    v.push(parse_scalar(field, cell)?);
                }
                vectors.push(v);
            }
            inner.push(Subspace::from_vectors(field, n, &vectors)?);
        }
        Ok(Flag::from_inner(field, n, inner)?)
    }

    pub fn from_flag(shape: (usize, usize), flag: &Flag) -> FlagFixture {
        let n = flag.ambient();
        let spaces = (1..n)
            .map(|i| {
                flag.space(i)
                    .basis_vectors()
                    .iter()
                    .map(|v| v.iter().map(|s| s.to_string()).collect())
                    .collect()
            })
            .collect();
        FlagFixture {
            field: flag.field().to_string(),
            shape: [shape.0, shape.1],
            spaces,
        }
    }
}

/// Wire form of a relation report: labelled verdicts in test order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RelationReportWire {
    pub items: Vec<(String, bool)>,
    pub all_hold: bool,
}

impl RelationReportWire {
    pub fn from_report(r: &RelationReport) -> RelationReportWire {
        RelationReportWire {
            items: r.items.clone(),
            all_hold: r.all_hold,
        }
    }
}

/// Wire form of a bundle verification report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BundleReportWire {
    pub case: String,
    pub items: Vec<(String, bool)>,
    pub all_hold: bool,
}

impl BundleReportWire {
    pub fn from_report(r: &BundleReport) -> BundleReportWire {
        BundleReportWire {
            case: r.case.clone(),
            items: r.items.clone(),
            all_hold: r.all_hold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct OverlapWire {
    pub first: String,
    pub second: String,
    pub count: u64,
}

/// Wire form of a decomposition report; uncovered flags are embedded as
/// flag fixtures so that failures are reproducible.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DecompositionWire {
    pub total_flags: u64,
    pub covered: u64,
    pub per_component: BTreeMap<String, u64>,
    pub overlaps: Vec<OverlapWire>,
    pub uncovered: Vec<FlagFixture>,
    pub middle_parity_counts: [u64; 2],
}

impl DecompositionWire {
    pub fn from_report(shape: (usize, usize), r: &DecompositionReport) -> DecompositionWire {
        DecompositionWire {
            total_flags: r.total_flags,
            covered: r.covered(),
            per_component: r.per_component.clone(),
            overlaps: r
                .overlaps
                .iter()
                .map(|o| OverlapWire {
                    first: o.first.clone(),
                    second: o.second.clone(),
                    count: o.count,
                })
                .collect(),
            uncovered: r
                .uncovered
                .iter()
                .map(|fl| FlagFixture::from_flag(shape, fl))
                .collect(),
            middle_parity_counts: r.middle_parity_counts,
        }
    }
}

/// Serialise any wire value as pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, JsonError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    const QQ: FieldSpec = FieldSpec::Rationals;
    const QI: FieldSpec = FieldSpec::GaussianRationals;
    const F5: FieldSpec = FieldSpec::Prime(5);

    #[test]
    fn scalars_round_trip_through_their_display_form() {
        let samples = [
            Scalar::from_i64(QQ, 0),
            Scalar::from_i64(QQ, -7),
            Scalar::from_fraction(QQ, 2, 3).unwrap(),
            Scalar::from_fraction(QQ, -9, 4).unwrap(),
            Scalar::from_i64(F5, 3),
            sqrt_minus_one(QI).unwrap(),
            sqrt_minus_one(QI).unwrap().negate(),
            &Scalar::from_i64(QI, 2) + &sqrt_minus_one(QI).unwrap(),
            &Scalar::from_fraction(QI, 1, 2).unwrap()
                + &(&Scalar::from_fraction(QI, -3, 4).unwrap() * &sqrt_minus_one(QI).unwrap()),
        ];
        for s in &samples {
            let text = scalar_string(s);
            let back = parse_scalar(s.field(), &text).unwrap();
            assert_eq!(*s, back, "{text}");
        }
        assert!(parse_scalar(QQ, "i").is_err());
        assert!(parse_scalar(F5, "2i").is_err());
        assert!(parse_scalar(QQ, "").is_err());
        assert!(parse_scalar(QQ, "1//2").is_err());
    }

    #[test]
    fn field_names_round_trip() {
        for field in [QQ, QI, F5, FieldSpec::Prime(17)] {
            assert_eq!(parse_field(&field_string(field)).unwrap(), field);
        }
        assert_eq!(parse_field("Fp:7").unwrap(), FieldSpec::Prime(7));
        assert!(parse_field("R").is_err());
    }

    #[test]
    fn quiver_fixture_round_trips() {
        let rep = QuiverRep::springer(
            QQ,
            4,
            2,
            vec![
                Matrix::from_i64_rows(QQ, &[&[1], &[0]]),
                Matrix::from_i64_rows(QQ, &[&[0, 1]]),
            ],
            vec![
                Matrix::from_i64_rows(QQ, &[&[0, 1]]),
                Matrix::from_i64_rows(QQ, &[&[1], &[0]]),
            ],
            vec![(2, Matrix::identity(QQ, 2))],
        )
        .unwrap();
        let fixture = QuiverFixture::from_rep(&rep);
        let json = to_json_string(&fixture).unwrap();
        let parsed: QuiverFixture = serde_json::from_str(&json).unwrap();
        let back = parsed.to_rep().unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn flag_fixture_round_trips() {
        let adot = match crate::diagram::parse_diagram("D m=2 cups=1: 1-2*").unwrap() {
            crate::diagram::Diagram::TypeD(d) => d,
            _ => unreachable!(),
        };
        let fl = crate::bundle::build_flag(
            F5,
            &adot,
            &[(Scalar::from_i64(F5, 1), Scalar::from_i64(F5, 3))],
        )
        .unwrap();
        let fixture = FlagFixture::from_flag((2, 2), &fl);
        let json = to_json_string(&fixture).unwrap();
        let parsed: FlagFixture = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.to_flag().unwrap(), fl);
    }

    #[test]
    fn serialisation_is_deterministic() {
        let task = crate::oracle::EnumerationTask::new((2, 2), 3, true);
        let diagrams = crate::diagram::enumerate_type_d(2, 2).unwrap();
        let report = crate::oracle::decompose_type_d(&task, &diagrams).unwrap();
        let wire = DecompositionWire::from_report((2, 2), &report);
        let first = to_json_string(&wire).unwrap();
        let second = to_json_string(&DecompositionWire::from_report((2, 2), &report)).unwrap();
        assert_eq!(first, second);
        assert!(first.contains("\"total_flags\": 8"));
    }
}
