//! Exact scalars for tiling geometry.
//!
//! Basis entries of the built-in tilings involve square roots (√3, √(2/3)), but
//! the Gram matrix MᵀM of every built-in basis is rational. Entries are parsed
//! into single-term surds `q·√r`; products of two such terms are again single
//! terms, so the Gram matrix can be assembled exactly and checked for
//! rationality. All geometric predicates then run over `Q` or, for user specs
//! that contain floats, over `Approx` with a fixed tolerance.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = Ratio<i128>;

/// Tolerance used by predicates on float specs.
pub const FLOAT_TOL: f64 = 1e-9;

/// `coef · √rad` with `rad` squarefree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Surd {
    pub coef: Q,
    pub rad: u64,
}

fn squarefree_split(mut r: u128) -> (u128, u128) {
    let mut outside = 1u128;
    let mut p = 2u128;
    while p * p <= r {
        while r % (p * p) == 0 {
            r /= p * p;
            outside *= p;
        }
        p += 1;
    }
    (outside, r)
}

impl Surd {
    pub fn rational(coef: Q) -> Self {
        Surd { coef, rad: 1 }
    }

    fn from_parts(coef: Q, rad: u128) -> Result<Self> {
        if Zero::is_zero(&coef) || rad == 0 {
            return Ok(Surd::rational(<Q as Zero>::zero()));
        }
        let (out, r) = squarefree_split(rad);
        let rad = u64::try_from(r).map_err(|_| Error::Parse(format!("radicand {r} too large")))?;
        Ok(Surd {
            coef: coef * Q::from_integer(out as i128),
            rad,
        })
    }

    /// √q for a non-negative rational (and rational-valued) surd.
    pub fn sqrt(self) -> Result<Self> {
        if self.rad != 1 || self.coef.is_negative() {
            return Err(Error::Parse("sqrt of a non-rational or negative value".into()));
        }
        // √(a/b) = √(ab)/b
        let a = *self.coef.numer();
        let b = *self.coef.denom();
        let ab = (a as u128)
            .checked_mul(b as u128)
            .ok_or_else(|| Error::Parse("radicand overflow".into()))?;
        Surd::from_parts(Q::new(1, b), ab)
    }

    pub fn mul(self, o: Surd) -> Result<Self> {
        let rr = (self.rad as u128) * (o.rad as u128);
        Surd::from_parts(self.coef * o.coef, rr)
    }

    pub fn div(self, o: Surd) -> Result<Self> {
        if Zero::is_zero(&o.coef) {
            return Err(Error::Parse("division by zero".into()));
        }
        // q1√r1 / (q2√r2) = q1/(q2 r2) · √(r1 r2)
        let rr = (self.rad as u128) * (o.rad as u128);
        Surd::from_parts(self.coef / (o.coef * Q::from_integer(o.rad as i128)), rr)
    }

    pub fn neg(self) -> Self {
        Surd {
            coef: -self.coef,
            rad: self.rad,
        }
    }

    pub fn to_f64(self) -> f64 {
        q_to_f64(&self.coef) * (self.rad as f64).sqrt()
    }

    pub fn is_rational(&self) -> bool {
        self.rad == 1
    }

    /// Parses expressions such as `3/2`, `-sqrt(3)/2`, `1/(2*sqrt(3))`, `sqrt(2/3)`.
    pub fn parse(s: &str) -> Result<Self> {
        let toks: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = SurdParser { t: &toks, i: 0, src: s };
        let v = p.expr()?;
        if p.i != toks.len() {
            return Err(Error::Parse(s.to_string()));
        }
        Ok(v)
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.coef.numer();
        let d = self.coef.denom();
        if self.rad == 1 {
            return if *d == 1 { write!(f, "{n}") } else { write!(f, "{n}/{d}") };
        }
        let head = match *n {
            1 => String::new(),
            -1 => "-".to_string(),
            _ => format!("{n}*"),
        };
        if *d == 1 {
            write!(f, "{head}sqrt({})", self.rad)
        } else {
            write!(f, "{head}sqrt({})/{d}", self.rad)
        }
    }
}

struct SurdParser<'a> {
    t: &'a [char],
    i: usize,
    src: &'a str,
}

impl SurdParser<'_> {
    fn err(&self) -> Error {
        Error::Parse(self.src.to_string())
    }

    fn peek(&self) -> Option<char> {
        self.t.get(self.i).copied()
    }

    fn expr(&mut self) -> Result<Surd> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                '*' => {
                    self.i += 1;
                    acc = acc.mul(self.unary()?)?;
                }
                '/' => {
                    self.i += 1;
                    acc = acc.div(self.unary()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Surd> {
        match self.peek() {
            Some('-') => {
                self.i += 1;
                Ok(self.unary()?.neg())
            }
            Some('+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Surd> {
        match self.peek() {
            Some('(') => {
                self.i += 1;
                let v = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err());
                }
                self.i += 1;
                Ok(v)
            }
            Some('s') => {
                let word: String = self.t[self.i..].iter().take(5).collect();
                if word != "sqrt(" {
                    return Err(self.err());
                }
                self.i += 5;
                let v = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err());
                }
                self.i += 1;
                v.sqrt()
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.i;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.i += 1;
                }
                if self.peek() == Some('.') {
                    return Err(self.err());
                }
                let s: String = self.t[start..self.i].iter().collect();
                let v: i128 = s.parse().map_err(|_| self.err())?;
                Ok(Surd::rational(Q::from_integer(v)))
            }
            _ => Err(self.err()),
        }
    }
}

pub fn q_to_f64(q: &Q) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

pub fn q_floor(q: &Q) -> i128 {
    q.numer().div_floor(q.denom())
}

/// A scalar literal from a spec file: exact surd or plain float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scalar {
    Exact(Surd),
    Float(f64),
}

impl Scalar {
    pub fn int(v: i64) -> Self {
        Scalar::Exact(Surd::rational(Q::from_integer(v as i128)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Scalar::Exact(Surd::rational(Q::new(n as i128, d as i128)))
    }

    pub fn parse(s: &str) -> Result<Self> {
        match Surd::parse(s) {
            Ok(v) => Ok(Scalar::Exact(v)),
            Err(_) => s
                .trim()
                .parse::<f64>()
                .map(Scalar::Float)
                .map_err(|_| Error::Parse(s.to_string())),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(s) => s.to_f64(),
            Scalar::Float(v) => *v,
        }
    }

    pub fn as_rational(&self) -> Option<Q> {
        match self {
            Scalar::Exact(s) if s.is_rational() => Some(s.coef),
            _ => None,
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(v) => s.serialize_str(&v.to_string()),
            Scalar::Float(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) => Scalar::parse(&s).map_err(serde::de::Error::custom),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Scalar::int(i))
                } else {
                    Ok(Scalar::Float(n.as_f64().unwrap_or(f64::NAN)))
                }
            }
            other => Err(serde::de::Error::custom(format!("expected scalar, got {other}"))),
        }
    }
}

/// Field operations used by the geometric predicates.
pub trait Field: Clone + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn from_i64(v: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    /// -1, 0 or 1; floats within tolerance of zero count as zero.
    fn sign(&self) -> i32;
    fn floor(&self) -> i64;
    fn to_f64(&self) -> f64;

    fn is_zero(&self) -> bool {
        self.sign() == 0
    }
    fn is_integer(&self) -> bool {
        self.sub(&Self::from_i64(self.floor())).is_zero()
    }
    fn cmp_f(&self, o: &Self) -> std::cmp::Ordering {
        self.sub(o).sign().cmp(&0)
    }
}

impl Field for Q {
    fn zero() -> Self {
        <Q as Zero>::zero()
    }
    fn from_i64(v: i64) -> Self {
        Q::from_integer(v as i128)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> i32 {
        if Zero::is_zero(self) {
            0
        } else if self.is_negative() {
            -1
        } else {
            1
        }
    }
    fn floor(&self) -> i64 {
        q_floor(self) as i64
    }
    fn to_f64(&self) -> f64 {
        q_to_f64(self)
    }
}

/// Float with tolerant comparisons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Approx(pub f64);

impl Field for Approx {
    fn zero() -> Self {
        Approx(0.0)
    }
    fn from_i64(v: i64) -> Self {
        Approx(v as f64)
    }
    fn add(&self, o: &Self) -> Self {
        Approx(self.0 + o.0)
    }
    fn sub(&self, o: &Self) -> Self {
        Approx(self.0 - o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Approx(self.0 * o.0)
    }
    fn div(&self, o: &Self) -> Self {
        Approx(self.0 / o.0)
    }
    fn sign(&self) -> i32 {
        if self.0.abs() < FLOAT_TOL {
            0
        } else if self.0 < 0.0 {
            -1
        } else {
            1
        }
    }
    fn floor(&self) -> i64 {
        (self.0 + FLOAT_TOL).floor() as i64
    }
    fn to_f64(&self) -> f64 {
        self.0
    }
}

/// Solves `a x = b` by Gaussian elimination over a field; `None` if singular.
pub fn solve_field<F: Field>(a: &[Vec<F>], b: &[F]) -> Option<Vec<F>> {
    let n = a.len();
    let mut m: Vec<Vec<F>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for k in col..=n {
            m[col][k] = m[col][k].div(&p);
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for k in col..=n {
                    let t = f.mul(&m[col][k]);
                    m[r][k] = m[r][k].sub(&t);
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}
