//! Named mappings and families with known closed-form behaviour.
//!
//! | name     | shape                     | notes                                        |
//! |----------|---------------------------|----------------------------------------------|
//! | ex201    | family on Λ₁              | (−1)^{n₀+n₁}/((n₀+1)(n₁+1))·z                |
//! | ex301    | step mapping on Λ₁ ∪ {b}  | (−2)^{n₀+n₁+2}/((n₀+1)(n₁+1))·z, z_b = 0     |
//! | ex302    | step mapping on Λ₁ ∪ {b}  | 2^{n₀+n₁+2}/((n₀+1)²(n₁+1)²)·z, z_b = 0      |
//! | ex32     | step mapping on a ladder  | alternating sums with parameters q, C        |
//! | ex33     | step mapping on a ladder  | Σ (−1)^{k+1}/(√(k+1) log(k+1))               |
//! | ex401    | right-regulated           | truncated at m series terms, I on Z_m        |
//! | sqrtcos  | continuous scalar         | √t cos(π/t)                                  |
//! | linear   | continuous                | t·z                                          |
//! | constant | continuous                | z                                            |

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use serde_json::Value;

use crate::algebra::{AlgebraKind, Element};
use crate::error::{Error, Result};
use crate::ordinal::{OrdinalIndex, WellOrderedSet};
use crate::stepmap::{RegulatedSample, StepMapping};
use crate::transfinite::Family;

pub const NAMES: &[&str] = &["ex201", "ex301", "ex302", "ex32", "ex33", "ex401", "sqrtcos", "linear", "constant"];

/// Default truncation order of ex401.
pub const EX401_TERMS: usize = 200;

#[derive(Clone, Debug)]
pub enum CatalogEntry {
    Step(StepMapping),
    Regulated(RegulatedSample),
    Family(Family),
}

fn sign(k: u64) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Lazily extended table of partial sums S_n = Σ_{k=1}^n a_k, S_0 = 0.
#[derive(Clone)]
pub struct PrefixSums {
    term: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    table: Arc<Mutex<Vec<f64>>>,
}

impl PrefixSums {
    pub fn new(term: impl Fn(u64) -> f64 + Send + Sync + 'static) -> PrefixSums {
        PrefixSums { term: Arc::new(term), table: Arc::new(Mutex::new(vec![0.0])) }
    }

    pub fn get(&self, n: u64) -> f64 {
        let mut t = self.table.lock().unwrap();
        while t.len() as u64 <= n {
            let k = t.len() as u64;
            let next = t[k as usize - 1] + (self.term)(k);
            t.push(next);
        }
        t[n as usize]
    }

    pub fn term(&self, k: u64) -> f64 {
        (self.term)(k)
    }
}

/// Σ_{k=1}^N a_k averaged three times over consecutive N; the tail of an
/// alternating series with smooth decreasing |a_k| cancels to high order.
fn alternating_limit(p: &PrefixSums, n: u64) -> f64 {
    let mut s: Vec<f64> = (0..4).map(|i| p.get(n + i)).collect();
    while s.len() > 1 {
        s = s.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    s[0]
}

fn param_f64(p: &Value, key: &str, default: f64) -> Result<f64> {
    match p.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| Error::InvalidInput(format!("parameter {key} must be a number"))),
    }
}

fn param_z(p: &Value) -> Result<Element> {
    match p.get("z") {
        None | Some(Value::Null) => Ok(Element::scalar(1.0)),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::InvalidInput(format!("parameter z: {e}"))),
    }
}

/// x_{α(n₀,n₁)} = (−1)^{n₀+n₁}/((n₀+1)(n₁+1))·z on Λ₁ over [0, 1].
pub fn ex201(z: Element) -> Family {
    Family::new(WellOrderedSet::tower(1, 0.0, 1.0), z.kind(), move |i| {
        let (a, b) = (i.coords[0], i.coords[1]);
        z.scale(sign(a + b) / ((a + 1) as f64 * (b + 1) as f64))
    })
}

/// z_α = (−2)^{n₀+n₁+2}/((n₀+1)(n₁+1))·z on Λ₁ ∪ {1}, z_1 = 0.
pub fn ex301(z: Element) -> StepMapping {
    let kind = z.kind();
    let zw = z.clone();
    StepMapping::new(
        WellOrderedSet::tower(1, 0.0, 1.0),
        kind,
        move |i| {
            let (a, b) = (i.coords[0], i.coords[1]);
            let k = (a + b + 2) as i32;
            z.scale(sign(a + b) * 2f64.powi(k) / ((a + 1) as f64 * (b + 1) as f64))
        },
        Element::zero(kind),
    )
    .with_weighted(move |i| {
        let (a, b) = (i.coords[0], i.coords[1]);
        zw.scale(sign(a + b) / ((a + 1) as f64 * (b + 1) as f64))
    })
}

/// z_α = 2^{n₀+n₁+2}/((n₀+1)²(n₁+1)²)·z on Λ₁ ∪ {1}, z_1 = 0.
pub fn ex302(z: Element) -> StepMapping {
    let kind = z.kind();
    let zw = z.clone();
    StepMapping::new(
        WellOrderedSet::tower(1, 0.0, 1.0),
        kind,
        move |i| {
            let (a, b) = ((i.coords[0] + 1) as f64, (i.coords[1] + 1) as f64);
            let k = (i.coords[0] + i.coords[1] + 2) as i32;
            z.scale(2f64.powi(k) / (a * a * b * b))
        },
        Element::zero(kind),
    )
    .with_weighted(move |i| {
        let (a, b) = ((i.coords[0] + 1) as f64, (i.coords[1] + 1) as f64);
        zw.scale(1.0 / (a * a * b * b))
    })
}

/// Ladder step mapping with z_{α(n)} = S_n·z for the partial sums S_n of
/// `prefix` and z_b = limit·z.
fn ladder_partial_sums(a: f64, b: f64, prefix: PrefixSums, limit: f64, z: Element) -> StepMapping {
    let kind = z.kind();
    let top = z.scale(limit);
    StepMapping::new(WellOrderedSet::ladder(a, b), kind, move |i| z.scale(prefix.get(i.coords[0])), top)
}

/// Jump terms of ex32: (−1)^{k+1}/(C(k+(−1)^{k+1}/2)^{1/q} + (−1)^k/2).
pub fn ex32_term(q: f64, c: f64, k: u64) -> f64 {
    let s = sign(k + 1);
    s / (c * (k as f64 + s / 2.0).powf(1.0 / q) - s / 2.0)
}

/// lim S_n for ex32, summed in pairs: Σ_{j≥0} 1/(D_j² − 1/4), D_j = C(2j+3/2)^{1/q}.
pub fn ex32_limit(q: f64, c: f64) -> f64 {
    let pair = move |x: f64| {
        let d = c * (2.0 * x + 1.5).powf(1.0 / q);
        1.0 / (d * d - 0.25)
    };
    const J: u64 = 1 << 16;
    let head: f64 = (0..J).rev().map(|j| pair(j as f64)).sum();
    // Midpoint-rule tail: Σ_{j≥J} f(j) ≈ ∫_{J−1/2}^∞ f, substituted x = (J − 1/2)/u.
    let x0 = J as f64 - 0.5;
    let tail = quadrature::integrate(|u: f64| if u <= 0.0 { 0.0 } else { pair(x0 / u) * x0 / (u * u) }, 0.0, 1.0, 1e-16)
        .integral;
    head + tail
}

/// The ex32 mapping on the ladder over [a, b]; q ∈ (0, 2), C > (2/3)^{1/q}/2.
pub fn ex32(q: f64, c: f64, a: f64, b: f64, z: Element) -> Result<StepMapping> {
    if !(q > 0.0 && q < 2.0) {
        return Err(Error::InvalidInput(format!("ex32 needs q in (0, 2), got {q}")));
    }
    if !(c > 0.5 * (2.0f64 / 3.0).powf(1.0 / q)) {
        return Err(Error::InvalidInput(format!("ex32 needs C > (2/3)^(1/q)/2, got {c}")));
    }
    let prefix = PrefixSums::new(move |k| ex32_term(q, c, k));
    Ok(ladder_partial_sums(a, b, prefix, ex32_limit(q, c), z))
}

pub fn ex33_term(k: u64) -> f64 {
    let m = (k + 1) as f64;
    sign(k + 1) / (m.sqrt() * m.ln())
}

/// The ex33 mapping on the ladder over [a, b].
pub fn ex33(a: f64, b: f64, z: Element) -> StepMapping {
    let prefix = PrefixSums::new(ex33_term);
    let limit = alternating_limit(&prefix, 1 << 20);
    ladder_partial_sums(a, b, prefix, limit, z)
}

fn ex401_g(u: f64) -> f64 {
    let w = PI / (2.0 * u);
    2.0 * u * w.cos() + 0.5 * PI * w.sin()
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-12 * x.abs().max(1.0)
}

/// t ∈ Z_m = {i/j : j ≤ m}.
pub fn in_z_m(t: f64, m: usize) -> bool {
    (1..=m).any(|j| near_integer(t * j as f64))
}

/// ex401 truncated to `m` series terms: A_m(t) = z on Z_m and the m-th
/// partial sum elsewhere; A_m(t+) replaces u = nt − ⌈nt⌉ by −1 where nt ∈ ℤ.
pub fn ex401(m: usize, z: Element) -> RegulatedSample {
    let kind = z.kind();
    let z2 = z.clone();
    let value = move |t: f64| {
        if in_z_m(t, m) {
            return z.clone();
        }
        let s: f64 = (1..=m)
            .map(|n| {
                let x = n as f64 * t;
                ex401_g(x - x.ceil()) / (n * n) as f64
            })
            .sum();
        z.scale(s)
    };
    let right = move |t: f64| {
        let s: f64 = (1..=m)
            .map(|n| {
                let x = n as f64 * t;
                let u = if near_integer(x) { -1.0 } else { x - x.ceil() };
                ex401_g(u) / (n * n) as f64
            })
            .sum();
        z2.scale(s)
    };
    RegulatedSample::new(kind, 0.0, 1.0, value, right)
}

/// Bound on ‖A − A_m‖: Σ_{n>m} (2 + π/2)/n² < (2 + π/2)/m.
pub fn ex401_tail_bound(m: usize) -> f64 {
    (2.0 + 0.5 * PI) / m as f64
}

/// F(t) = √t cos(π/t), F(0) = 0, on [0, 1].
pub fn sqrtcos() -> RegulatedSample {
    RegulatedSample::continuous(AlgebraKind::Scalar, 0.0, 1.0, |t| {
        Element::scalar(if t == 0.0 { 0.0 } else { t.sqrt() * (PI / t).cos() })
    })
}

/// F′(t) = cos(π/t)/(2√t) + π sin(π/t)/t^{3/2} on (0, 1].
pub fn sqrtcos_derivative(t: f64) -> f64 {
    (PI / t).cos() / (2.0 * t.sqrt()) + PI * (PI / t).sin() / t.powf(1.5)
}

pub fn linear(a: f64, b: f64, z: Element) -> RegulatedSample {
    RegulatedSample::continuous(z.kind(), a, b, move |t| z.scale(t))
}

pub fn constant(a: f64, b: f64, z: Element) -> RegulatedSample {
    RegulatedSample::continuous(z.kind(), a, b, move |_| z.clone())
}

/// Looks up a catalog entry; `params` may carry z, a, b, q, C, m.
pub fn catalog(name: &str, params: &Value) -> Result<CatalogEntry> {
    let z = param_z(params)?;
    let a = param_f64(params, "a", 0.0)?;
    let b = param_f64(params, "b", 1.0)?;
    Ok(match name {
        "ex201" => CatalogEntry::Family(ex201(z)),
        "ex301" => CatalogEntry::Step(ex301(z)),
        "ex302" => CatalogEntry::Step(ex302(z)),
        "ex32" => {
            let q = param_f64(params, "q", 1.0)?;
            let c = param_f64(params, "C", 1.0)?;
            CatalogEntry::Step(ex32(q, c, a, b, z)?)
        }
        "ex33" => CatalogEntry::Step(ex33(a, b, z)),
        "ex401" => {
            let m = param_f64(params, "m", EX401_TERMS as f64)?;
            if !(m >= 1.0) {
                return Err(Error::InvalidInput("ex401 needs m >= 1".into()));
            }
            CatalogEntry::Regulated(ex401(m as usize, z))
        }
        "sqrtcos" => CatalogEntry::Regulated(sqrtcos()),
        "linear" => CatalogEntry::Regulated(linear(a, b, z)),
        "constant" => CatalogEntry::Regulated(constant(a, b, z)),
        other => return Err(Error::UnknownCatalog(other.to_string())),
    })
}

/// Index α(n) of the outer ladder point n of a ladder set.
pub fn ladder_index(n: u64) -> OrdinalIndex {
    OrdinalIndex::new(vec![n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepmap::Mapping;

    #[test]
    fn ex301_at_zero() {
        let m = ex301(Element::scalar(1.0));
        assert_eq!(m.evaluate(0.0).unwrap().as_scalar(), 4.0);
        assert_eq!(m.evaluate(1.0).unwrap().as_scalar(), 0.0);
        // Second ladder point of block 0 sits at 1/4; (−2)^3/2 = −4.
        assert_eq!(m.evaluate(0.25).unwrap().as_scalar(), -4.0);
    }

    #[test]
    fn ex301_weighted_matches_gap_times_value() {
        let m = ex301(Element::scalar(1.0));
        let w = m.gap_weighted();
        for c in [[0u64, 0], [1, 2], [3, 4]] {
            let i = OrdinalIndex::new(c.to_vec());
            let direct = m.z(&i).as_scalar() * m.set.gap(&i).unwrap();
            assert!((w.term(&i).as_scalar() - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn ex32_value_on_a_step() {
        let m = ex32(1.0, 1.0, 0.0, 1.0, Element::scalar(1.0)).unwrap();
        // Midpoint of [α(2), α(3)] = [0.75, 0.875]; S_2 = 1/1 − 1/2.
        assert!((m.evaluate(0.8125).unwrap().as_scalar() - 0.5).abs() < 1e-15);
        assert!((m.top_value().as_scalar() - 2f64.ln()).abs() < 1e-12);
        assert!(ex32(2.5, 1.0, 0.0, 1.0, Element::scalar(1.0)).is_err());
        assert!(ex32(1.0, 0.2, 0.0, 1.0, Element::scalar(1.0)).is_err());
    }

    #[test]
    fn ex32_limit_for_other_parameters() {
        let pair = |q: f64, c: f64, j: u64| {
            let d = c * (2.0 * j as f64 + 1.5).powf(1.0 / q);
            1.0 / (d * d - 0.25)
        };
        let n = 1u64 << 22;
        // q = 1: the tail integral is (1/2c) ln((cu+1/2)/(cu−1/2)), u = 2(N − 1/2) + 1.5.
        let c = 2.0;
        let direct: f64 = (0..n).rev().map(|j| pair(1.0, c, j)).sum();
        let u = 2.0 * (n as f64 - 0.5) + 1.5;
        let tail = ((c * u + 0.5) / (c * u - 0.5)).ln() / (2.0 * c);
        assert!((ex32_limit(1.0, c) - direct - tail).abs() < 1e-12);
        // q = 1.5: the remainder beyond 2^22 is positive and of order N^{-1/3}.
        let direct: f64 = (0..n).rev().map(|j| pair(1.5, 0.8, j)).sum();
        let r = ex32_limit(1.5, 0.8) - direct;
        assert!(r > 0.005 && r < 0.02, "{r}");
    }

    #[test]
    fn ex33_conventions() {
        let m = ex33(0.0, 1.0, Element::scalar(1.0));
        assert_eq!(m.z(&OrdinalIndex::new(vec![0])).as_scalar(), 0.0);
        let z1 = 1.0 / (2f64.sqrt() * 2f64.ln());
        assert!((m.z(&OrdinalIndex::new(vec![1])).as_scalar() - z1).abs() < 1e-15);
        // The alternating limit lies between consecutive partial sums.
        let p = PrefixSums::new(ex33_term);
        let (lo, hi) = (p.get(1001), p.get(1000));
        let l = m.top_value().as_scalar();
        assert!(lo.min(hi) < l && l < lo.max(hi));
    }

    #[test]
    fn ex401_identity_on_z_m_and_bounded() {
        let a = ex401(EX401_TERMS, Element::scalar(1.0));
        assert_eq!(a.eval(0.5).unwrap().as_scalar(), 1.0);
        assert_eq!(a.eval(1.0 / 3.0).unwrap().as_scalar(), 1.0);
        let bound = (2.0 + 0.5 * PI) * PI * PI / 6.0;
        for k in 0..500 {
            let t = (k as f64 + 0.37) / 500.0 * 0.999;
            assert!(a.eval(t).unwrap().norm() <= bound);
        }
    }

    #[test]
    fn ex401_right_limit_is_approached() {
        let a = ex401(20, Element::scalar(1.0));
        let t = 0.5;
        let r = a.right_limit(t).unwrap().as_scalar();
        let near = a.eval(t + 1e-9).unwrap().as_scalar();
        assert!((r - near).abs() < 1e-5, "{r} {near}");
    }

    #[test]
    fn sqrtcos_values() {
        let f = sqrtcos();
        assert_eq!(f.eval(0.0).unwrap().as_scalar(), 0.0);
        assert!((f.eval(1.0).unwrap().as_scalar() + 1.0).abs() < 1e-15);
        // Derivative against a central difference.
        let t = 0.37;
        let h = 1e-6;
        let fd = (f.eval(t + h).unwrap().as_scalar() - f.eval(t - h).unwrap().as_scalar()) / (2.0 * h);
        assert!((fd - sqrtcos_derivative(t)).abs() < 1e-4);
    }

    #[test]
    fn catalog_lookup() {
        let p = serde_json::json!({});
        for n in NAMES {
            assert!(catalog(n, &p).is_ok(), "{n}");
        }
        assert!(matches!(catalog("nope", &p), Err(Error::UnknownCatalog(_))));
        let p = serde_json::json!({"z": {"kind": "matrix", "n": 2, "data": [0, 1, 0, 0]}});
        match catalog("ex301", &p).unwrap() {
            CatalogEntry::Step(m) => assert_eq!(m.kind, AlgebraKind::Matrix(2)),
            _ => panic!(),
        }
    }
}
