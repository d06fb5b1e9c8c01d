//! Step mappings over well-ordered step sets, right-regulated mappings given
//! by closures, and their ε-approximation by finite step mappings.

pub mod catalog;
pub mod input;

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{AlgebraKind, Element};
use crate::error::{Error, Result};
use crate::ordinal::{OrdinalIndex, WellOrderedSet};
use crate::transfinite::{Family, Generator};

/// A mapping [a, b] → algebra that can be evaluated pointwise.
pub trait Mapping: Send + Sync {
    fn kind(&self) -> AlgebraKind;
    fn interval(&self) -> (f64, f64);
    fn eval(&self, t: f64) -> Result<Element>;
    /// A(t+); defaults to A(t) for right-continuous mappings.
    fn right_limit(&self, t: f64) -> Result<Element> {
        self.eval(t)
    }
    /// A(t−), approximated by A(t − 2^{−40}(b − a)) unless overridden.
    fn left_limit(&self, t: f64) -> Result<Element> {
        let (a, b) = self.interval();
        check_interval(t, (a, b))?;
        self.eval((t - (b - a) * 2f64.powi(-40)).max(a))
    }
}

fn check_interval(t: f64, (a, b): (f64, f64)) -> Result<()> {
    if t >= a && t <= b {
        Ok(())
    } else {
        Err(Error::OutOfInterval { t, a, b })
    }
}

/// A(t) = z_α on [α, S(α)) for α in the step set, A(b) = z_b.
#[derive(Clone)]
pub struct StepMapping {
    pub set: WellOrderedSet,
    pub kind: AlgebraKind,
    values: Generator,
    top_value: Element,
    /// Closed form of (S(α) − α)·z_α where z_α itself would overflow.
    weighted: Option<Generator>,
}

impl std::fmt::Debug for StepMapping {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StepMapping").field("set", &self.set).field("kind", &self.kind).finish()
    }
}

impl StepMapping {
    pub fn new(
        set: WellOrderedSet,
        kind: AlgebraKind,
        values: impl Fn(&OrdinalIndex) -> Element + Send + Sync + 'static,
        top_value: Element,
    ) -> StepMapping {
        StepMapping { set, kind, values: Arc::new(values), top_value, weighted: None }
    }

    /// Finite step mapping; `values[i]` is taken on [points[i], points[i+1])
    /// and the last value at b.
    pub fn finite(points: Vec<f64>, values: Vec<Element>) -> Result<StepMapping> {
        if points.len() != values.len() {
            return Err(Error::InvalidInput("one value per point is required".into()));
        }
        let set = WellOrderedSet::finite(points)?;
        let kind = values[0].kind();
        if let Some(v) = values.iter().find(|v| v.kind() != kind) {
            return Err(Error::KindMismatch(kind, v.kind()));
        }
        let top = values.last().unwrap().clone();
        let vals = Arc::new(values);
        Ok(StepMapping::new(set, kind, move |i| vals[i.coords[0] as usize].clone(), top))
    }

    /// Two-value mapping: z_a on [a, b), z_b at b.
    pub fn two_value(a: f64, b: f64, z_a: Element, z_b: Element) -> Result<StepMapping> {
        StepMapping::finite(vec![a, b], vec![z_a, z_b])
    }

    pub fn with_weighted(mut self, w: impl Fn(&OrdinalIndex) -> Element + Send + Sync + 'static) -> StepMapping {
        self.weighted = Some(Arc::new(w));
        self
    }

    /// z_α, or z_b at the top.
    pub fn z(&self, idx: &OrdinalIndex) -> Element {
        if idx.is_top() {
            self.top_value.clone()
        } else {
            (self.values)(idx)
        }
    }

    pub fn top_value(&self) -> &Element {
        &self.top_value
    }

    pub fn evaluate(&self, t: f64) -> Result<Element> {
        Ok(self.z(&self.set.locate(t)?))
    }

    /// (S(α) − α)·z_α over the members below b.
    pub fn gap_weighted(&self) -> Family {
        match &self.weighted {
            Some(w) => {
                let w = w.clone();
                Family::new(self.set.clone(), self.kind, move |i| w(i))
            }
            None => {
                let set = self.set.clone();
                let v = self.values.clone();
                Family::new(self.set.clone(), self.kind, move |i| v(i).scale(set.gap(i).expect("gap below top")))
            }
        }
    }

    /// (z_α) over the whole set, top included.
    pub fn values_family(&self) -> Family {
        let me = self.clone();
        Family::new(self.set.clone(), self.kind, move |i| me.z(i)).with_top(true)
    }

    /// Restriction to [c, b], c the k-th point of the outermost ladder.
    pub fn tail_from(&self, k: u64) -> Result<StepMapping> {
        let set = self.set.tail_from(k)?;
        let shift = move |i: &OrdinalIndex| {
            let mut c = i.coords.clone();
            c[0] += k;
            OrdinalIndex::new(c)
        };
        let v = self.values.clone();
        let mut out = StepMapping::new(set, self.kind, move |i| v(&shift(i)), self.top_value.clone());
        if let Some(w) = &self.weighted {
            let w = w.clone();
            if self.set.is_finite_set() {
                out.weighted = None;
            } else {
                out.weighted = Some(Arc::new(move |i| w(&shift(i))));
            }
        }
        Ok(out)
    }
}

impl Mapping for StepMapping {
    fn kind(&self) -> AlgebraKind {
        self.kind
    }
    fn interval(&self) -> (f64, f64) {
        (self.set.a(), self.set.b())
    }
    fn eval(&self, t: f64) -> Result<Element> {
        self.evaluate(t)
    }
    fn left_limit(&self, t: f64) -> Result<Element> {
        let idx = self.set.locate(t)?;
        let at_point = idx.is_top() || self.set.value(&idx)? == t;
        if !at_point {
            return Ok(self.z(&idx));
        }
        if let Some(p) = self.set.predecessor(&idx) {
            return Ok(self.z(&p));
        }
        if self.set.is_limit(&idx) {
            // Deep member of the canonical approaching sequence.
            return Ok(self.z(&self.set.approach(&idx, 40)?));
        }
        Ok(self.z(&idx))
    }
}

pub type PointFn = Arc<dyn Fn(f64) -> Element + Send + Sync>;

/// A right-regulated mapping given by closures for A(t) and A(t+).
#[derive(Clone)]
pub struct RegulatedSample {
    pub kind: AlgebraKind,
    pub a: f64,
    pub b: f64,
    eval: PointFn,
    right: PointFn,
}

impl std::fmt::Debug for RegulatedSample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegulatedSample").field("kind", &self.kind).field("a", &self.a).field("b", &self.b).finish()
    }
}

impl RegulatedSample {
    /// A continuous mapping: right limits coincide with values.
    pub fn continuous(kind: AlgebraKind, a: f64, b: f64, f: impl Fn(f64) -> Element + Send + Sync + 'static) -> Self {
        let f: PointFn = Arc::new(f);
        RegulatedSample { kind, a, b, eval: f.clone(), right: f }
    }

    pub fn new(
        kind: AlgebraKind,
        a: f64,
        b: f64,
        eval: impl Fn(f64) -> Element + Send + Sync + 'static,
        right: impl Fn(f64) -> Element + Send + Sync + 'static,
    ) -> Self {
        RegulatedSample { kind, a, b, eval: Arc::new(eval), right: Arc::new(right) }
    }
}

impl Mapping for RegulatedSample {
    fn kind(&self) -> AlgebraKind {
        self.kind
    }
    fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }
    fn eval(&self, t: f64) -> Result<Element> {
        check_interval(t, (self.a, self.b))?;
        Ok((self.eval)(t))
    }
    fn right_limit(&self, t: f64) -> Result<Element> {
        check_interval(t, (self.a, self.b))?;
        Ok((self.right)(t))
    }
}

/// Coefficientwise running min/max of sampled values.
struct Range {
    lo: Vec<f64>,
    hi: Vec<f64>,
    kind: AlgebraKind,
}

impl Range {
    fn new(kind: AlgebraKind) -> Range {
        Range { lo: vec![f64::INFINITY; kind.len()], hi: vec![f64::NEG_INFINITY; kind.len()], kind }
    }

    fn add(&mut self, x: &Element) {
        for (i, v) in x.data().iter().enumerate() {
            self.lo[i] = self.lo[i].min(*v);
            self.hi[i] = self.hi[i].max(*v);
        }
    }

    /// Upper bound on sup ‖A(s) − A(t)‖ over the sampled points; exact for
    /// scalars and diagonal sequences.
    fn diam(&self) -> f64 {
        if self.lo[0] > self.hi[0] {
            return 0.0;
        }
        let w: Vec<f64> = self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect();
        match self.kind {
            AlgebraKind::Scalar | AlgebraKind::Diag(_) => w.iter().cloned().fold(0.0, f64::max),
            AlgebraKind::Matrix(n) => w.chunks(n).map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max),
        }
    }
}

/// G_ε(x): sup of y such that A oscillates by at most ε on (x, y), located
/// on a `grid`-point scan of (x, b) followed by bisection.
pub fn g_epsilon(a: &dyn Mapping, x: f64, eps: f64, grid: usize) -> Result<f64> {
    let (lo_end, b) = a.interval();
    check_interval(x, (lo_end, b))?;
    if x >= b {
        return Ok(b);
    }
    let grid = grid.max(2);
    let mut range = Range::new(a.kind());
    range.add(&a.right_limit(x)?);
    let mut prev = x;
    for i in 1..grid {
        let s = x + (b - x) * i as f64 / grid as f64;
        let v = a.eval(s)?;
        let mut trial = Range { lo: range.lo.clone(), hi: range.hi.clone(), kind: range.kind };
        trial.add(&v);
        if trial.diam() > eps {
            // The oscillation bound is crossed inside (prev, s].
            let (mut lo, mut hi) = (prev, s);
            for _ in 0..80 {
                let m = 0.5 * (lo + hi);
                if m <= lo || m >= hi {
                    break;
                }
                let vm = a.eval(m)?;
                let mut t2 = Range { lo: range.lo.clone(), hi: range.hi.clone(), kind: range.kind };
                t2.add(&vm);
                if t2.diam() > eps {
                    hi = m;
                } else {
                    lo = m;
                    range = t2;
                }
            }
            return Ok(hi);
        }
        range = trial;
        prev = s;
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonPartition {
    pub eps: f64,
    pub points: Vec<f64>,
    pub exhausted: bool,
}

/// Grid resolution used for the oscillation scans.
pub const DEFAULT_GRID: usize = 256;

/// Finite prefix a = γ_0 < γ_1 < … of Λ_ε with γ_{k+1} = G_ε(γ_k).
pub fn build_lambda_eps(a: &dyn Mapping, eps: f64, budget: usize) -> Result<EpsilonPartition> {
    let (start, b) = a.interval();
    let mut points = vec![start];
    let mut cur = start;
    while cur < b {
        if points.len() > budget {
            return Ok(EpsilonPartition { eps, points, exhausted: true });
        }
        let next = g_epsilon(a, cur, eps, DEFAULT_GRID)?;
        if next <= cur {
            return Ok(EpsilonPartition { eps, points, exhausted: true });
        }
        points.push(next);
        cur = next;
    }
    Ok(EpsilonPartition { eps, points, exhausted: false })
}

#[derive(Clone, Debug)]
pub struct StepApproximation {
    pub mapping: StepMapping,
    pub partition: EpsilonPartition,
}

/// Step mapping A_ε with A_ε(t) = A(γ+) on each [γ, G_ε(γ)) and A_ε(b) = A(b).
/// When the budget runs out the last step is stretched to b.
pub fn approximate_by_step(a: &dyn Mapping, eps: f64, budget: usize) -> Result<StepApproximation> {
    let part = build_lambda_eps(a, eps, budget)?;
    let (_, b) = a.interval();
    let mut pts = part.points.clone();
    if *pts.last().unwrap() < b {
        pts.push(b);
    }
    let mut vals = Vec::with_capacity(pts.len());
    for &p in &pts[..pts.len() - 1] {
        vals.push(a.right_limit(p)?);
    }
    vals.push(a.eval(b)?);
    Ok(StepApproximation { mapping: StepMapping::finite(pts, vals)?, partition: part })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin() -> RegulatedSample {
        RegulatedSample::continuous(AlgebraKind::Scalar, 0.0, 1.0, Element::scalar)
    }

    #[test]
    fn finite_step_evaluation() {
        let m = StepMapping::finite(
            vec![0.0, 0.5, 1.0],
            vec![Element::scalar(1.0), Element::scalar(2.0), Element::scalar(3.0)],
        )
        .unwrap();
        assert_eq!(m.evaluate(0.0).unwrap().as_scalar(), 1.0);
        assert_eq!(m.evaluate(0.49).unwrap().as_scalar(), 1.0);
        assert_eq!(m.evaluate(0.5).unwrap().as_scalar(), 2.0);
        assert_eq!(m.evaluate(1.0).unwrap().as_scalar(), 3.0);
        assert!(matches!(m.evaluate(1.5), Err(Error::OutOfInterval { .. })));
    }

    #[test]
    fn lipschitz_g_epsilon() {
        for x in [0.0, 0.3, 0.9] {
            let g = g_epsilon(&lin(), x, 0.25, 256).unwrap();
            assert!(g >= (x + 0.25f64).min(1.0) - 1e-12, "{x} {g}");
            assert!(g <= (x + 0.25f64).min(1.0) + 1e-9);
        }
    }

    #[test]
    fn step_g_epsilon_reaches_step_end() {
        let m = StepMapping::finite(
            vec![0.0, 0.5, 1.0],
            vec![Element::scalar(0.0), Element::scalar(1.0), Element::scalar(1.0)],
        )
        .unwrap();
        let g = g_epsilon(&m, 0.1, 0.5, 64).unwrap();
        assert!((g - 0.5).abs() < 1e-12);
        assert_eq!(g_epsilon(&m, 0.1, 2.0, 64).unwrap(), 1.0);
    }

    #[test]
    fn lambda_eps_for_linear() {
        let p = build_lambda_eps(&lin(), 0.25, 100).unwrap();
        assert!(!p.exhausted);
        assert!(p.points.len() - 1 <= 5);
        assert_eq!(*p.points.last().unwrap(), 1.0);
    }

    #[test]
    fn lambda_eps_for_step_mapping_is_its_step_set() {
        let m = StepMapping::finite(
            vec![0.0, 0.5, 1.0],
            vec![Element::scalar(0.0), Element::scalar(1.0), Element::scalar(2.0)],
        )
        .unwrap();
        let p = build_lambda_eps(&m, 0.5, 100).unwrap();
        for x in &p.points {
            assert!([0.0, 0.5, 1.0].iter().any(|s| (s - x).abs() < 1e-12), "{x}");
        }
    }

    #[test]
    fn step_approximation_error_bound() {
        let f = RegulatedSample::continuous(AlgebraKind::Scalar, 0.0, 1.0, |t| Element::scalar((5.0 * t).sin()));
        let eps = 0.1;
        let approx = approximate_by_step(&f, eps, 1000).unwrap();
        for k in 0..2000 {
            let t = k as f64 / 2000.0;
            let d = approx.mapping.evaluate(t).unwrap().dist(&f.eval(t).unwrap());
            assert!(d <= eps + 1e-9, "t={t} d={d}");
        }
    }

    #[test]
    fn budget_exhaustion_flagged() {
        let p = build_lambda_eps(&lin(), 0.001, 10).unwrap();
        assert!(p.exhausted);
    }

    #[test]
    fn tail_mapping_matches_original() {
        let m = StepMapping::new(
            WellOrderedSet::tower(1, 0.0, 1.0),
            AlgebraKind::Scalar,
            |i| Element::scalar((i.coords[0] * 10 + i.coords[1]) as f64),
            Element::scalar(-1.0),
        );
        let t = m.tail_from(2).unwrap();
        for x in [0.75, 0.8, 0.9, 0.99, 1.0] {
            assert_eq!(t.evaluate(x).unwrap(), m.evaluate(x).unwrap());
        }
    }
}
