//! Unital normed algebras: real scalars, dense n×n matrices with the
//! ∞-norm, and finite diagonal sequences with the sup norm.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative pivot threshold below which an element counts as singular.
pub const SINGULAR_RTOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlgebraKind {
    Scalar,
    Matrix(usize),
    Diag(usize),
}

impl AlgebraKind {
    /// Number of stored coefficients.
    pub fn len(self) -> usize {
        match self {
            AlgebraKind::Scalar => 1,
            AlgebraKind::Matrix(n) => n * n,
            AlgebraKind::Diag(n) => n,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn dim(self) -> usize {
        match self {
            AlgebraKind::Scalar => 1,
            AlgebraKind::Matrix(n) | AlgebraKind::Diag(n) => n,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            AlgebraKind::Scalar => "scalar",
            AlgebraKind::Matrix(_) => "matrix",
            AlgebraKind::Diag(_) => "diag",
        }
    }
}

/// An element of one of the supported algebras. Matrix data is row-major.
#[derive(Clone, PartialEq)]
pub struct Element {
    kind: AlgebraKind,
    data: Vec<f64>,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.kind.tag(), self.data)
    }
}

impl Element {
    pub fn identity(kind: AlgebraKind) -> Element {
        let mut e = Element::zero(kind);
        match kind {
            AlgebraKind::Scalar => e.data[0] = 1.0,
            AlgebraKind::Matrix(n) => (0..n).for_each(|i| e.data[i * n + i] = 1.0),
            AlgebraKind::Diag(_) => e.data.iter_mut().for_each(|x| *x = 1.0),
        }
        e
    }

    pub fn zero(kind: AlgebraKind) -> Element {
        Element { kind, data: vec![0.0; kind.len()] }
    }

    pub fn scalar(v: f64) -> Element {
        Element { kind: AlgebraKind::Scalar, data: vec![v] }
    }

    pub fn from_vec(kind: AlgebraKind, data: Vec<f64>) -> Result<Element> {
        if data.len() != kind.len() {
            return Err(Error::InvalidInput(format!(
                "{} of size {} needs {} coefficients, got {}",
                kind.tag(),
                kind.dim(),
                kind.len(),
                data.len()
            )));
        }
        Ok(Element { kind, data })
    }

    /// Dense matrix from rows; all rows must share the outer length.
    pub fn matrix(rows: &[&[f64]]) -> Result<Element> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::InvalidInput("matrix must be square".into()));
            }
            data.extend_from_slice(r);
        }
        Element::from_vec(AlgebraKind::Matrix(n), data)
    }

    pub fn diag(entries: Vec<f64>) -> Element {
        Element { kind: AlgebraKind::Diag(entries.len()), data: entries }
    }

    /// Unit vector e^k (0-based) of a diagonal sequence algebra.
    pub fn diag_unit(n: usize, k: usize) -> Element {
        let mut e = Element::zero(AlgebraKind::Diag(n));
        e.data[k] = 1.0;
        e
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Scalar value; panics on other kinds.
    pub fn as_scalar(&self) -> f64 {
        assert_eq!(self.kind, AlgebraKind::Scalar, "not a scalar");
        self.data[0]
    }

    /// Entry (i, j) in matrix view: diagonal kinds report zero off the diagonal.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            AlgebraKind::Scalar => self.data[0],
            AlgebraKind::Matrix(n) => self.data[i * n + j],
            AlgebraKind::Diag(_) => {
                if i == j {
                    self.data[i]
                } else {
                    0.0
                }
            }
        }
    }

    fn check(&self, other: &Element) -> Result<()> {
        if self.kind == other.kind {
            Ok(())
        } else {
            Err(Error::KindMismatch(self.kind, other.kind))
        }
    }

    pub fn norm(&self) -> f64 {
        match self.kind {
            AlgebraKind::Scalar => self.data[0].abs(),
            AlgebraKind::Matrix(n) => self
                .data
                .chunks(n.max(1))
                .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            AlgebraKind::Diag(_) => self.data.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn try_add(&self, other: &Element) -> Result<Element> {
        self.check(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Element { kind: self.kind, data })
    }

    pub fn try_sub(&self, other: &Element) -> Result<Element> {
        self.check(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Element { kind: self.kind, data })
    }

    pub fn try_mul(&self, other: &Element) -> Result<Element> {
        self.check(other)?;
        let data = match self.kind {
            AlgebraKind::Scalar | AlgebraKind::Diag(_) => {
                self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect()
            }
            AlgebraKind::Matrix(n) => {
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for k in 0..n {
                        let a = self.data[i * n + k];
                        if a == 0.0 {
                            continue;
                        }
                        let row = &other.data[k * n..(k + 1) * n];
                        for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                            *o += a * b;
                        }
                    }
                }
                out
            }
        };
        Ok(Element { kind: self.kind, data })
    }

    pub fn scale(&self, c: f64) -> Element {
        Element { kind: self.kind, data: self.data.iter().map(|x| c * x).collect() }
    }

    /// ‖self − other‖.
    pub fn dist(&self, other: &Element) -> f64 {
        (self - other).norm()
    }

    /// Distance to the identity, ‖self − I‖.
    pub fn dist_identity(&self) -> f64 {
        self.dist(&Element::identity(self.kind))
    }

    /// x·y − y·x.
    pub fn commutator(&self, other: &Element) -> Result<Element> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    pub fn transpose(&self) -> Element {
        match self.kind {
            AlgebraKind::Matrix(n) => {
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[j * n + i] = self.data[i * n + j];
                    }
                }
                Element { kind: self.kind, data: out }
            }
            _ => self.clone(),
        }
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Element> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        let thresh = SINGULAR_RTOL * self.norm();
        match self.kind {
            AlgebraKind::Scalar | AlgebraKind::Diag(_) => {
                let mut data = Vec::with_capacity(self.data.len());
                for &d in &self.data {
                    if d == 0.0 || d.abs() < thresh {
                        return Err(Error::Singular { pivot: d.abs() });
                    }
                    data.push(1.0 / d);
                }
                Ok(Element { kind: self.kind, data })
            }
            AlgebraKind::Matrix(n) => {
                let mut a = self.data.clone();
                let mut inv = Element::identity(self.kind).data;
                for col in 0..n {
                    let (piv, pval) = (col..n)
                        .map(|r| (r, a[r * n + col].abs()))
                        .fold((col, -1.0), |best, c| if c.1 > best.1 { c } else { best });
                    if pval == 0.0 || pval < thresh {
                        return Err(Error::Singular { pivot: pval });
                    }
                    if piv != col {
                        for j in 0..n {
                            a.swap(piv * n + j, col * n + j);
                            inv.swap(piv * n + j, col * n + j);
                        }
                    }
                    let p = a[col * n + col];
                    for j in 0..n {
                        a[col * n + j] /= p;
                        inv[col * n + j] /= p;
                    }
                    for r in 0..n {
                        if r == col {
                            continue;
                        }
                        let f = a[r * n + col];
                        if f == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            a[r * n + j] -= f * a[col * n + j];
                            inv[r * n + j] -= f * inv[col * n + j];
                        }
                    }
                }
                Ok(Element { kind: self.kind, data: inv })
            }
        }
    }

    /// Exponential. Matrices use scaling and squaring on a Taylor series
    /// (‖x‖/2^s ≤ 1/2); commutative kinds are exponentiated per coefficient.
    pub fn exp(&self) -> Result<Element> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        let out = match self.kind {
            AlgebraKind::Scalar | AlgebraKind::Diag(_) => {
                Element { kind: self.kind, data: self.data.iter().map(|x| x.exp()).collect() }
            }
            AlgebraKind::Matrix(_) => {
                let nrm = self.norm();
                let mut s = 0i32;
                while nrm / 2f64.powi(s) > 0.5 {
                    s += 1;
                }
                let y = self.scale(2f64.powi(-s));
                let mut sum = Element::identity(self.kind);
                let mut term = sum.clone();
                for k in 1..64 {
                    term = (&term * &y).scale(1.0 / k as f64);
                    sum = &sum + &term;
                    if term.norm() < 1e-18 * sum.norm() {
                        break;
                    }
                }
                for _ in 0..s {
                    sum = &sum * &sum;
                }
                sum
            }
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Logarithm by the series of log(I + y), y = x − I; needs ‖y‖ < 1.
    pub fn log(&self) -> Result<Element> {
        let id = Element::identity(self.kind);
        let y = self - &id;
        let r = y.norm();
        if !(r < 1.0) {
            return Err(Error::OutOfDomain(r));
        }
        match self.kind {
            AlgebraKind::Scalar | AlgebraKind::Diag(_) => Ok(Element {
                kind: self.kind,
                data: y.data.iter().map(|v| v.ln_1p()).collect(),
            }),
            AlgebraKind::Matrix(_) => {
                let mut sum = y.clone();
                let mut pow = y.clone();
                for k in 2..200_000 {
                    pow = &pow * &y;
                    let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                    let term = pow.scale(sign / k as f64);
                    sum = &sum + &term;
                    if pow.norm() < 1e-18 * sum.norm().max(f64::MIN_POSITIVE) {
                        break;
                    }
                }
                Ok(sum)
            }
        }
    }

    /// Componentwise closeness, max |x_i − y_i| ≤ tol.
    pub fn approx_eq(&self, other: &Element, tol: f64) -> bool {
        self.kind == other.kind
            && self.data.iter().zip(&other.data).all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        self.try_add(rhs).expect("algebra kind mismatch in +")
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        self.try_sub(rhs).expect("algebra kind mismatch in -")
    }
}

impl Mul for &Element {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        self.try_mul(rhs).expect("algebra kind mismatch in *")
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scale(-1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    kind: String,
    n: usize,
    data: Vec<f64>,
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr { kind: self.kind.tag().into(), n: self.kind.dim(), data: self.data.clone() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Element, D::Error> {
        let r = ElementRepr::deserialize(d)?;
        let kind = match r.kind.as_str() {
            "scalar" => AlgebraKind::Scalar,
            "matrix" => AlgebraKind::Matrix(r.n),
            "diag" => AlgebraKind::Diag(r.n),
            other => return Err(serde::de::Error::custom(format!("unknown kind {other}"))),
        };
        Element::from_vec(kind, r.data).map_err(serde::de::Error::custom)
    }
}
