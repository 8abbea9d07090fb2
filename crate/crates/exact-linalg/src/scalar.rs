//! Field elements with exact arithmetic.
//!
//! Three coefficient fields are supported:
//! * `Q` — arbitrary-precision rationals,
//! * `Qi` — Gaussian rationals `a + b*i`,
//! * `Fp:p` — the prime field of `p` elements for an odd or even prime
//!   `p < 2^31`, stored as canonical residues in `0..p`.

use num::bigint::BigInt;
use num::integer::Integer;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Largest admissible prime modulus (exclusive bound `2^31`).
pub const MAX_PRIME: u64 = 1 << 31;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: {left} vs {right}")]
    FieldMismatch { left: FieldSpec, right: FieldSpec },
    #[error("cannot parse {input:?} as an element of {field}: {reason}")]
    Parse {
        input: String,
        field: FieldSpec,
        reason: String,
    },
    #[error("invalid modulus {0}: must be a prime below 2^31")]
    InvalidModulus(u64),
    #[error("cannot parse {0:?} as a field (expected Q, Qi or Fp:<p>)")]
    ParseField(String),
}

/// A coefficient field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldSpec {
    /// The rational numbers.
    Rationals,
    /// The Gaussian rationals `Q(i)`.
    GaussianRationals,
    /// The prime field with the given number of elements.
    Prime(u64),
}

impl FieldSpec {
    /// Checked constructor for a prime field.
    pub fn prime(p: u64) -> Result<Self, ScalarError> {
        if p < 2 || p >= MAX_PRIME || !is_prime(p) {
            return Err(ScalarError::InvalidModulus(p));
        }
        Ok(FieldSpec::Prime(p))
    }

    /// The characteristic of the field (0 for `Q` and `Q(i)`).
    pub fn characteristic(&self) -> u64 {
        match self {
            FieldSpec::Prime(p) => *p,
            _ => 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, FieldSpec::Prime(_))
    }

    /// Returns an error unless the modulus (if any) is a valid prime.
    pub fn validate(&self) -> Result<(), ScalarError> {
        match self {
            FieldSpec::Prime(p) => {
                FieldSpec::prime(*p)?;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn zero(&self) -> Scalar {
        Scalar::zero(*self)
    }

    pub fn one(&self) -> Scalar {
        Scalar::one(*self)
    }

    /// All elements of a finite field, in residue order.  Panics for
    /// infinite fields.
    pub fn elements(&self) -> Vec<Scalar> {
        match self {
            FieldSpec::Prime(p) => (0..*p).map(|r| Scalar::from_residue(*p, r)).collect(),
            _ => panic!("cannot enumerate an infinite field"),
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Rationals => write!(f, "Q"),
            FieldSpec::GaussianRationals => write!(f, "Qi"),
            FieldSpec::Prime(p) => write!(f, "Fp:{p}"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "Q" => Ok(FieldSpec::Rationals),
            "Qi" | "Q(i)" => Ok(FieldSpec::GaussianRationals),
            _ => {
                if let Some(rest) = t.strip_prefix("Fp:") {
                    let p: u64 = rest
                        .trim()
                        .parse()
                        .map_err(|_| ScalarError::ParseField(s.to_string()))?;
                    FieldSpec::prime(p)
                } else {
                    Err(ScalarError::ParseField(s.to_string()))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Value {
    Rat(BigRational),
    /// Real and imaginary part of a Gaussian rational.
    Gauss(BigRational, BigRational),
    /// Canonical residue in `0..p`.
    Mod(u64),
}

/// An element of one of the supported fields.  The carrying field is part
/// of the value; mixing fields in arithmetic is an error.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    field: FieldSpec,
    value: Value,
}

impl Scalar {
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn zero(field: FieldSpec) -> Scalar {
        Scalar::from_i64(field, 0)
    }

    pub fn one(field: FieldSpec) -> Scalar {
        Scalar::from_i64(field, 1)
    }

    pub fn from_i64(field: FieldSpec, v: i64) -> Scalar {
        match field {
            FieldSpec::Rationals => Scalar {
                field,
                value: Value::Rat(BigRational::from_integer(BigInt::from(v))),
            },
            FieldSpec::GaussianRationals => Scalar {
                field,
                value: Value::Gauss(
                    BigRational::from_integer(BigInt::from(v)),
                    BigRational::zero(),
                ),
            },
            FieldSpec::Prime(p) => {
                let r = v.rem_euclid(p as i64);
                Scalar::from_residue(p, r as u64)
            }
        }
    }

    /// The rational `num/den` as an element of `Q` or `Q(i)`; for `F_p`
    /// this is `num * den^{-1}`.  Fails if `den` is zero (or divides the
    /// characteristic).
    pub fn from_fraction(field: FieldSpec, num: i64, den: i64) -> Result<Scalar, ScalarError> {
        let n = Scalar::from_i64(field, num);
        let d = Scalar::from_i64(field, den);
        n.try_div(&d)
    }

    /// The Gaussian rational `re + im*i`.
    pub fn gaussian(re: BigRational, im: BigRational) -> Scalar {
        Scalar {
            field: FieldSpec::GaussianRationals,
            value: Value::Gauss(re, im),
        }
    }

    pub fn rational(r: BigRational) -> Scalar {
        Scalar {
            field: FieldSpec::Rationals,
            value: Value::Rat(r),
        }
    }

    /// The canonical residue `r mod p`.  `r` may be any value; it is
    /// reduced.
    pub fn from_residue(p: u64, r: u64) -> Scalar {
        Scalar {
            field: FieldSpec::Prime(p),
            value: Value::Mod(r % p),
        }
    }

    /// The residue in `0..p` for prime-field elements.
    pub fn residue(&self) -> Option<u64> {
        match &self.value {
            Value::Mod(r) => Some(*r),
            _ => None,
        }
    }

    /// Real/imaginary parts as rationals (imaginary part zero outside
    /// `Q(i)`); `None` for prime fields.
    pub fn rational_parts(&self) -> Option<(BigRational, BigRational)> {
        match &self.value {
            Value::Rat(r) => Some((r.clone(), BigRational::zero())),
            Value::Gauss(a, b) => Some((a.clone(), b.clone())),
            Value::Mod(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.value {
            Value::Rat(r) => r.is_zero(),
            Value::Gauss(a, b) => a.is_zero() && b.is_zero(),
            Value::Mod(r) => *r == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.value {
            Value::Rat(r) => r.is_one(),
            Value::Gauss(a, b) => a.is_one() && b.is_zero(),
            Value::Mod(r) => *r == 1,
        }
    }

    fn check_same_field(&self, other: &Scalar) -> Result<(), ScalarError> {
        if self.field != other.field {
            return Err(ScalarError::FieldMismatch {
                left: self.field,
                right: other.field,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.check_same_field(other)?;
        let value = match (&self.value, &other.value) {
            (Value::Rat(a), Value::Rat(b)) => Value::Rat(a + b),
            (Value::Gauss(a, b), Value::Gauss(c, d)) => Value::Gauss(a + c, b + d),
            (Value::Mod(a), Value::Mod(b)) => {
                let p = self.field.characteristic();
                Value::Mod((a + b) % p)
            }
            _ => unreachable!("value variant matches field"),
        };
        Ok(Scalar {
            field: self.field,
            value,
        })
    }

    pub fn try_sub(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.try_add(&other.negate())
    }

    pub fn try_mul(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.check_same_field(other)?;
        let value = match (&self.value, &other.value) {
            (Value::Rat(a), Value::Rat(b)) => Value::Rat(a * b),
            (Value::Gauss(a, b), Value::Gauss(c, d)) => {
                Value::Gauss(a * c - b * d, a * d + b * c)
            }
            (Value::Mod(a), Value::Mod(b)) => {
                let p = self.field.characteristic();
                Value::Mod((a * b) % p)
            }
            _ => unreachable!("value variant matches field"),
        };
        Ok(Scalar {
            field: self.field,
            value,
        })
    }

    pub fn try_div(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.try_mul(&other.inverse()?)
    }

    pub fn negate(&self) -> Scalar {
        let value = match &self.value {
            Value::Rat(a) => Value::Rat(-a),
            Value::Gauss(a, b) => Value::Gauss(-a, -b),
            Value::Mod(a) => {
                let p = self.field.characteristic();
                Value::Mod(if *a == 0 { 0 } else { p - a })
            }
        };
        Scalar {
            field: self.field,
            value,
        }
    }

    pub fn inverse(&self) -> Result<Scalar, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let value = match &self.value {
            Value::Rat(a) => Value::Rat(a.recip()),
            Value::Gauss(a, b) => {
                // (a + bi)^{-1} = (a - bi) / (a^2 + b^2)
                let norm = a * a + b * b;
                Value::Gauss(a / &norm, -b / &norm)
            }
            Value::Mod(a) => {
                let p = self.field.characteristic();
                Value::Mod(modpow(*a, p - 2, p))
            }
        };
        Ok(Scalar {
            field: self.field,
            value,
        })
    }

    /// Integer power (negative exponents invert first).
    pub fn pow(&self, e: i64) -> Result<Scalar, ScalarError> {
        let base = if e < 0 {
            self.inverse()?
        } else {
            self.clone()
        };
        let mut acc = Scalar::one(self.field);
        for _ in 0..e.unsigned_abs() {
            acc = acc.try_mul(&base)?;
        }
        Ok(acc)
    }

    /// A square root in the same field, if one exists.  The returned root
    /// is canonical: for `Q`/`Q(i)` the root with positive real part (or
    /// positive imaginary part if the real part vanishes), for `F_p` the
    /// numerically smaller residue.
    pub fn sqrt(&self) -> Option<Scalar> {
        match &self.value {
            Value::Rat(r) => {
                if r.is_negative() {
                    return None;
                }
                sqrt_nonneg_rational(r).map(Scalar::rational)
            }
            Value::Gauss(a, b) => {
                if b.is_zero() {
                    if a.is_negative() {
                        let s = sqrt_nonneg_rational(&-a)?;
                        Some(Scalar::gaussian(BigRational::zero(), s))
                    } else {
                        let s = sqrt_nonneg_rational(a)?;
                        Some(Scalar::gaussian(s, BigRational::zero()))
                    }
                } else {
                    // (x + yi)^2 = a + bi  with  x^2 = (a + r)/2,
                    // y = b / (2x),  r = sqrt(a^2 + b^2).
                    let norm = a * a + b * b;
                    let r = sqrt_nonneg_rational(&norm)?;
                    let half = BigRational::new(BigInt::one(), BigInt::from(2));
                    let xsq = (a + &r) * &half;
                    let x = sqrt_nonneg_rational(&xsq)?;
                    if x.is_zero() {
                        return None;
                    }
                    let y = b / (BigRational::from_integer(BigInt::from(2)) * &x);
                    Some(Scalar::gaussian(x, y))
                }
            }
            Value::Mod(v) => {
                let p = self.field.characteristic();
                sqrt_mod_p(*v, p).map(|r| Scalar::from_residue(p, r))
            }
        }
    }
}

/// A canonical square root of `-1` in the given field, if one exists.
///
/// * `Q`: none.
/// * `Q(i)`: the imaginary unit `i`.
/// * `F_2`: `1`.
/// * `F_p`, `p = 1 mod 4`: the smaller of the two roots.
/// * `F_p`, `p = 3 mod 4`: none.
pub fn sqrt_minus_one(field: FieldSpec) -> Option<Scalar> {
    Scalar::from_i64(field, -1).sqrt()
}

/// `b^e mod p` (valid for `p < 2^31`).
pub fn modpow(mut b: u64, mut e: u64, p: u64) -> u64 {
    b %= p;
    let mut acc = 1 % p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// Deterministic primality test by trial division (sufficient below
/// `2^31`).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn sqrt_nonneg_rational(r: &BigRational) -> Option<BigRational> {
    debug_assert!(!r.is_negative());
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}

/// Square root modulo a prime via Tonelli–Shanks; returns the smaller of
/// the two roots.
fn sqrt_mod_p(v: u64, p: u64) -> Option<u64> {
    if p == 2 || v == 0 {
        return Some(v % p);
    }
    if modpow(v, (p - 1) / 2, p) != 1 {
        return None;
    }
    // p - 1 = q * 2^s with q odd.
    let mut q = p - 1;
    let mut s = 0u32;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let r = if s == 1 {
        modpow(v, (p + 1) / 4, p)
    } else {
        // Smallest quadratic non-residue.
        let mut z = 2;
        while modpow(z, (p - 1) / 2, p) != p - 1 {
            z += 1;
        }
        let mut m = s;
        let mut c = modpow(z, q, p);
        let mut t = modpow(v, q, p);
        let mut r = modpow(v, (q + 1) / 2, p);
        while t != 1 {
            let mut i = 0;
            let mut t2 = t;
            while t2 != 1 {
                t2 = t2 * t2 % p;
                i += 1;
            }
            let b = modpow(c, 1 << (m - i - 1), p);
            m = i;
            c = b * b % p;
            t = t * c % p;
            r = r * b % p;
        }
        r
    };
    Some(r.min(p - r))
}

/// Parse a scalar literal in the syntax of the given field.
///
/// * `Q`: `7`, `-3/4`
/// * `Qi`: `2+5i`, `-1/2-3i`, `i`, `-i`, `3i`, `1/2`
/// * `Fp:p`: `3`, `-3`, `7 mod 13` (the stated modulus must match)
pub fn parse_scalar(input: &str, field: FieldSpec) -> Result<Scalar, ScalarError> {
    let err = |reason: &str| ScalarError::Parse {
        input: input.to_string(),
        field,
        reason: reason.to_string(),
    };
    let t = input.trim();
    if t.is_empty() {
        return Err(err("empty literal"));
    }
    match field {
        FieldSpec::Rationals => parse_rational(t)
            .map(Scalar::rational)
            .ok_or_else(|| err("expected an integer or a fraction")),
        FieldSpec::GaussianRationals => parse_gaussian(t).ok_or_else(|| {
            err("expected a rational, an imaginary term or a sum such as 2+5i")
        }),
        FieldSpec::Prime(p) => {
            let (num_part, modulus) = match t.split_once("mod") {
                Some((a, b)) => (a.trim(), Some(b.trim())),
                None => (t, None),
            };
            if let Some(m) = modulus {
                let q: u64 = m.parse().map_err(|_| err("invalid modulus"))?;
                if q != p {
                    return Err(err(&format!("literal modulus {q} does not match field")));
                }
            }
            let v = BigInt::from_str(num_part).map_err(|_| err("expected an integer"))?;
            let r = v.mod_floor(&BigInt::from(p));
            Ok(Scalar::from_residue(p, r.to_u64().expect("residue fits")))
        }
    }
}

fn parse_rational(t: &str) -> Option<BigRational> {
    match t.split_once('/') {
        Some((n, d)) => {
            let num = BigInt::from_str(n.trim()).ok()?;
            let den = BigInt::from_str(d.trim()).ok()?;
            if den.is_zero() {
                return None;
            }
            Some(BigRational::new(num, den))
        }
        None => {
            let num = BigInt::from_str(t).ok()?;
            Some(BigRational::from_integer(num))
        }
    }
}

/// A single real or imaginary term, e.g. `-3/4` or `5i` or `-i`.
fn parse_gaussian_term(t: &str) -> Option<(BigRational, bool)> {
    if let Some(coeff) = t.strip_suffix('i') {
        let c = match coeff.trim_end() {
            "" | "+" => BigRational::one(),
            "-" => -BigRational::one(),
            other => parse_rational(other)?,
        };
        Some((c, true))
    } else {
        Some((parse_rational(t)?, false))
    }
}

fn parse_gaussian(t: &str) -> Option<Scalar> {
    // Split at the last top-level '+'/'-' that is not a leading sign and
    // not part of a fraction; the syntax has no parentheses, so this is a
    // simple scan.
    let bytes = t.as_bytes();
    let mut split_at = None;
    for (idx, &ch) in bytes.iter().enumerate().skip(1) {
        if ch == b'+' || ch == b'-' {
            let prev = bytes[idx - 1];
            if prev == b'/' || prev == b'+' || prev == b'-' {
                continue;
            }
            split_at = Some(idx);
        }
    }
    let (first, second) = match split_at {
        Some(idx) => (&t[..idx], Some(&t[idx..])),
        None => (t, None),
    };
    let (c1, im1) = parse_gaussian_term(first.trim())?;
    let mut re = BigRational::zero();
    let mut im = BigRational::zero();
    if im1 {
        im += &c1;
    } else {
        re += &c1;
    }
    if let Some(sec) = second {
        let sec = sec.trim();
        let (sign, rest) = match sec.as_bytes()[0] {
            b'+' => (BigRational::one(), &sec[1..]),
            b'-' => (-BigRational::one(), &sec[1..]),
            _ => return None,
        };
        let (c2, im2) = parse_gaussian_term(rest.trim())?;
        if im2 == im1 {
            // Two real or two imaginary terms.
            return None;
        }
        let c2 = sign * c2;
        if im2 {
            im += &c2;
        } else {
            re += &c2;
        }
    }
    Some(Scalar::gaussian(re, im))
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Value::Rat(r) => write!(f, "{}", fmt_rational(r)),
            Value::Gauss(a, b) => {
                if b.is_zero() {
                    write!(f, "{}", fmt_rational(a))
                } else if a.is_zero() {
                    write!(f, "{}", fmt_imaginary(b))
                } else {
                    let im = fmt_imaginary(b);
                    if im.starts_with('-') {
                        write!(f, "{}{}", fmt_rational(a), im)
                    } else {
                        write!(f, "{}+{}", fmt_rational(a), im)
                    }
                }
            }
            Value::Mod(r) => write!(f, "{r}"),
        }
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn fmt_imaginary(b: &BigRational) -> String {
    if b.is_one() {
        "i".to_string()
    } else if (-b).is_one() {
        "-i".to_string()
    } else {
        format!("{}i", fmt_rational(b))
    }
}

impl std::ops::Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        self.try_add(rhs).expect("scalar addition")
    }
}

impl std::ops::Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self.try_sub(rhs).expect("scalar subtraction")
    }
}

impl std::ops::Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        self.try_mul(rhs).expect("scalar multiplication")
    }
}

impl std::ops::Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.negate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QQ: FieldSpec = FieldSpec::Rationals;
    const QI: FieldSpec = FieldSpec::GaussianRationals;
    const F5: FieldSpec = FieldSpec::Prime(5);

    #[test]
    fn field_spec_roundtrip() {
        for f in [QQ, QI, F5, FieldSpec::Prime(2147483647)] {
            let s = f.to_string();
            assert_eq!(s.parse::<FieldSpec>().unwrap(), f);
        }
        assert!("Fp:4".parse::<FieldSpec>().is_err());
        assert!("Fp:2147483659".parse::<FieldSpec>().is_err());
        assert!("R".parse::<FieldSpec>().is_err());
    }

    #[test]
    fn rational_arithmetic() {
        let a = parse_scalar("3/4", QQ).unwrap();
        let b = parse_scalar("-1/2", QQ).unwrap();
        assert_eq!((&a + &b).to_string(), "1/4");
        assert_eq!((&a * &b).to_string(), "-3/8");
        assert_eq!(a.try_div(&b).unwrap().to_string(), "-3/2");
        assert_eq!(
            Scalar::zero(QQ).inverse().unwrap_err(),
            ScalarError::DivisionByZero
        );
    }

    #[test]
    fn gaussian_arithmetic() {
        let a = parse_scalar("2+5i", QI).unwrap();
        let b = parse_scalar("1-i", QI).unwrap();
        assert_eq!((&a * &b).to_string(), "7+3i");
        assert_eq!((&a + &b).to_string(), "3+4i");
        let i = parse_scalar("i", QI).unwrap();
        assert_eq!((&i * &i).to_string(), "-1");
        assert_eq!(i.inverse().unwrap().to_string(), "-i");
        let q = a.try_div(&a).unwrap();
        assert!(q.is_one());
    }

    #[test]
    fn gaussian_parse_forms() {
        for (input, display) in [
            ("i", "i"),
            ("-i", "-i"),
            ("3i", "3i"),
            ("-1/2-3i", "-1/2-3i"),
            ("1/2+1/3i", "1/2+1/3i"),
            ("4", "4"),
            ("0", "0"),
            ("2-i", "2-i"),
        ] {
            let s = parse_scalar(input, QI).unwrap();
            assert_eq!(s.to_string(), display, "input {input}");
            let back = parse_scalar(&s.to_string(), QI).unwrap();
            assert_eq!(back, s);
        }
        assert!(parse_scalar("1+2", QI).is_err());
        assert!(parse_scalar("i+i", QI).is_err());
    }

    #[test]
    fn prime_field_arithmetic() {
        let a = parse_scalar("7 mod 13", FieldSpec::Prime(13)).unwrap();
        assert_eq!(a.residue(), Some(7));
        let b = parse_scalar("-1", FieldSpec::Prime(13)).unwrap();
        assert_eq!(b.residue(), Some(12));
        assert_eq!((&a * &b).residue(), Some(6));
        assert_eq!(a.inverse().unwrap().residue(), Some(2));
        assert!(parse_scalar("7 mod 11", FieldSpec::Prime(13)).is_err());
    }

    #[test]
    fn field_mismatch_detected() {
        let a = Scalar::one(QQ);
        let b = Scalar::one(F5);
        assert!(matches!(
            a.try_add(&b),
            Err(ScalarError::FieldMismatch { .. })
        ));
    }

    #[test]
    fn sqrt_minus_one_table() {
        assert!(sqrt_minus_one(QQ).is_none());
        assert_eq!(sqrt_minus_one(QI).unwrap().to_string(), "i");
        assert_eq!(
            sqrt_minus_one(FieldSpec::Prime(2)).unwrap().residue(),
            Some(1)
        );
        assert_eq!(
            sqrt_minus_one(FieldSpec::Prime(5)).unwrap().residue(),
            Some(2)
        );
        assert_eq!(
            sqrt_minus_one(FieldSpec::Prime(13)).unwrap().residue(),
            Some(5)
        );
        assert_eq!(
            sqrt_minus_one(FieldSpec::Prime(17)).unwrap().residue(),
            Some(4)
        );
        for p in [3u64, 7, 11, 19, 23] {
            assert!(sqrt_minus_one(FieldSpec::Prime(p)).is_none(), "p = {p}");
        }
    }

    #[test]
    fn sqrt_mod_p_exhaustive_small_primes() {
        // Cross-check Tonelli–Shanks against exhaustive squaring.
        for p in (2u64..=97).filter(|&p| is_prime(p)) {
            let field = FieldSpec::Prime(p);
            for v in 0..p {
                let by_search = (0..p).find(|r| r * r % p == v).map(|r| r.min(p - r));
                let by_alg = Scalar::from_residue(p, v).sqrt().map(|s| s.residue().unwrap());
                assert_eq!(by_alg, by_search, "p = {p}, v = {v}");
                if let Some(r) = by_alg {
                    let s = Scalar::from_residue(p, r);
                    assert_eq!((&s * &s), Scalar::from_residue(p, v));
                }
            }
            let _ = field;
        }
    }

    #[test]
    fn sqrt_rational_and_gaussian() {
        assert_eq!(
            parse_scalar("9/4", QQ).unwrap().sqrt().unwrap().to_string(),
            "3/2"
        );
        assert!(parse_scalar("2", QQ).unwrap().sqrt().is_none());
        assert!(parse_scalar("-1", QQ).unwrap().sqrt().is_none());
        // (1 + i)^2 = 2i.
        assert_eq!(
            parse_scalar("2i", QI).unwrap().sqrt().unwrap().to_string(),
            "1+i"
        );
        // sqrt(-9/4) = 3/2 i.
        assert_eq!(
            parse_scalar("-9/4", QI).unwrap().sqrt().unwrap().to_string(),
            "3/2i"
        );
        // 2 is still not a square in Q(i).
        assert!(parse_scalar("2", QI).unwrap().sqrt().is_none());
        // sqrt(-1/2) exists in F_3 (= 1) and F_17, not in F_5 or Q(i).
        let half_neg = |f: FieldSpec| Scalar::from_fraction(f, -1, 2).unwrap();
        assert_eq!(half_neg(FieldSpec::Prime(3)).sqrt().unwrap().residue(), Some(1));
        assert!(half_neg(FieldSpec::Prime(17)).sqrt().is_some());
        assert!(half_neg(FieldSpec::Prime(5)).sqrt().is_none());
        assert!(half_neg(QI).sqrt().is_none());
    }

    #[test]
    fn sqrt_squares_back() {
        for v in [
            parse_scalar("3-4i", QI).unwrap(),
            parse_scalar("-5+12i", QI).unwrap(),
        ] {
            let s = v.sqrt().expect("root exists");
            assert_eq!(&s * &s, v);
        }
        // i itself is not a square in Q(i): it would need real part 1/sqrt(2).
        assert!(parse_scalar("i", QI).unwrap().sqrt().is_none());
        // 3 - 4i = (2 - i)^2; the canonical root has positive real part.
        assert_eq!(
            parse_scalar("3-4i", QI).unwrap().sqrt().unwrap().to_string(),
            "2-i"
        );
    }

    #[test]
    fn pow_and_negate() {
        let a = parse_scalar("2", F5).unwrap();
        assert_eq!(a.pow(4).unwrap().residue(), Some(1));
        assert_eq!(a.pow(-1).unwrap().residue(), Some(3));
        assert_eq!(a.negate().residue(), Some(3));
    }
}
