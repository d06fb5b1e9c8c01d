//! Point-interval functions V(ξ, [x, y]), the kernel U(τ, t) built from
//! them, and residuals of the linear generalized differential equation
//! x(t_i) − x(t_{i−1}) ≈ (U(ξ_i, t_i) − U(ξ_i, t_{i−1}))·x(ξ_i).

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{AlgebraKind, Element};
use crate::error::{Error, Result};
use crate::partition::{ConvergenceReport, Tag, TaggedPartition};
use crate::stepmap::Mapping;

type VFn = Arc<dyn Fn(f64, f64, f64) -> Result<Element> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VForm {
    /// I + A(ξ)(y − x).
    Linear,
    /// I + A(y) − A(x).
    Stieltjes,
    /// (I + A(y) − A(ξ))(I + A(x) − A(ξ))⁻¹.
    Vdef,
    /// V(ξ, [ξ, y])·V(ξ, [x, ξ]) of another function.
    Tilde,
    Custom,
}

#[derive(Clone)]
pub struct VFunction {
    pub form: VForm,
    pub kind: AlgebraKind,
    pub a: f64,
    pub b: f64,
    f: VFn,
}

impl std::fmt::Debug for VFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VFunction").field("form", &self.form).field("kind", &self.kind).finish()
    }
}

impl VFunction {
    pub fn custom(
        kind: AlgebraKind,
        a: f64,
        b: f64,
        f: impl Fn(f64, f64, f64) -> Result<Element> + Send + Sync + 'static,
    ) -> VFunction {
        VFunction { form: VForm::Custom, kind, a, b, f: Arc::new(f) }
    }

    pub fn identity(kind: AlgebraKind, a: f64, b: f64) -> VFunction {
        VFunction::custom(kind, a, b, move |_, _, _| Ok(Element::identity(kind)))
    }

    pub fn from_mapping(a: Arc<dyn Mapping>, form: VForm) -> Result<VFunction> {
        let kind = a.kind();
        let (lo, hi) = a.interval();
        let id = Element::identity(kind);
        let f: VFn = match form {
            VForm::Linear => Arc::new(move |xi, x, y| Ok(&id + &a.eval(xi)?.scale(y - x))),
            VForm::Stieltjes => Arc::new(move |_, x, y| Ok(&id + &(&a.eval(y)? - &a.eval(x)?))),
            VForm::Vdef => Arc::new(move |xi, x, y| {
                let axi = a.eval(xi)?;
                let num = &id + &(&a.eval(y)? - &axi);
                let den = &id + &(&a.eval(x)? - &axi);
                Ok(&num * &den.inverse()?)
            }),
            VForm::Tilde | VForm::Custom => {
                return Err(Error::InvalidInput("tilde and custom forms are not built from a mapping".into()))
            }
        };
        Ok(VFunction { form, kind, a: lo, b: hi, f })
    }

    /// V(ξ, [x, y]) for x ≤ ξ ≤ y.
    pub fn eval(&self, xi: f64, x: f64, y: f64) -> Result<Element> {
        if !(self.a <= x && x <= xi && xi <= y && y <= self.b) {
            return Err(Error::InvalidInput(format!("need a ≤ x ≤ ξ ≤ y ≤ b, got ξ = {xi} on [{x}, {y}]")));
        }
        (self.f)(xi, x, y)
    }
}

/// Ṽ(ξ, [x, y]) = V(ξ, [ξ, y])·V(ξ, [x, ξ]).
pub fn tilde_v(v: &VFunction) -> VFunction {
    let inner = v.clone();
    VFunction {
        form: VForm::Tilde,
        kind: v.kind,
        a: v.a,
        b: v.b,
        f: Arc::new(move |xi, x, y| Ok(&inner.eval(xi, xi, y)? * &inner.eval(xi, x, xi)?)),
    }
}

/// U(τ, t) = V(τ, [τ, t]) for t ≥ τ and V(τ, [t, τ])⁻¹ for t < τ.
pub fn u_from_v(v: &VFunction, tau: f64, t: f64) -> Result<Element> {
    if t >= tau {
        v.eval(tau, tau, t)
    } else {
        v.eval(tau, t, tau)?.inverse()
    }
}

/// Σ‖x(t_i) − x(t_{i−1}) − (U(ξ_i, t_i) − U(ξ_i, t_{i−1}))·x(ξ_i)‖.
pub fn gode_residual(
    u: &dyn Fn(f64, f64) -> Result<Element>,
    x: &dyn Fn(f64) -> Result<Element>,
    d: &TaggedPartition,
) -> Result<f64> {
    let mut s = 0.0;
    for (xi, lo, hi) in d.intervals() {
        let du = &u(xi, hi)? - &u(xi, lo)?;
        let r = &(&x(hi)? - &x(lo)?) - &(&du * &x(xi)?);
        s += r.norm();
    }
    Ok(s)
}

/// Σ‖x(t_i) − x(t_{i−1}) − (A(t_i) − A(t_{i−1}))·x(ξ_i)‖.
pub fn stieltjes_increment_residual(a: &dyn Mapping, x: &dyn Fn(f64) -> Result<Element>, d: &TaggedPartition) -> Result<f64> {
    let mut s = 0.0;
    for (xi, lo, hi) in d.intervals() {
        let r = &(&x(hi)? - &x(lo)?) - &(&(&a.eval(hi)? - &a.eval(lo)?) * &x(xi)?);
        s += r.norm();
    }
    Ok(s)
}

/// Σ‖V₁(ξ_i, [t_{i−1}, t_i]) − V₂(ξ_i, [t_{i−1}, t_i])‖.
pub fn equivalence_residual(v1: &VFunction, v2: &VFunction, d: &TaggedPartition) -> Result<f64> {
    let mut s = 0.0;
    for (xi, lo, hi) in d.intervals() {
        s += v1.eval(xi, lo, hi)?.dist(&v2.eval(xi, lo, hi)?);
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualVerdict {
    Decaying,
    NotDecaying,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GodeResidualReport {
    /// (number of intervals, residual) per level.
    pub partitions: Vec<(usize, f64)>,
    pub verdict: ResidualVerdict,
}

/// Residuals at or below this are rounding noise.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Decaying when each of the last three doublings strictly lowers the
/// residual, or when the last four residuals are at the noise floor.
pub fn residual_verdict(partitions: &[(usize, f64)]) -> ResidualVerdict {
    let r: Vec<f64> = partitions.iter().map(|p| p.1).collect();
    let k = r.len();
    let shrinking = k >= 4 && r[k - 4..].windows(2).all(|w| w[1] < w[0]);
    let zero = k >= 4 && r[k - 4..].iter().all(|&x| x <= RESIDUAL_FLOOR);
    if shrinking || zero {
        ResidualVerdict::Decaying
    } else {
        ResidualVerdict::NotDecaying
    }
}

/// Uniform 2^k partition of [a, b] with left tags, split at the jumps it
/// straddles with tags on the jumps.
pub fn sweep_partition(a: f64, b: f64, k: usize, jumps: &[f64]) -> TaggedPartition {
    let d = TaggedPartition::uniform(a, b, 1 << k, Tag::Left);
    if jumps.is_empty() {
        d
    } else {
        d.split_at(jumps)
    }
}

/// `gode_residual` on the levels `levels` of `sweep_partition`.
pub fn residual_sweep(
    u: &dyn Fn(f64, f64) -> Result<Element>,
    x: &dyn Fn(f64) -> Result<Element>,
    interval: (f64, f64),
    levels: std::ops::RangeInclusive<usize>,
    jumps: &[f64],
) -> Result<GodeResidualReport> {
    let partitions = levels
        .map(|k| {
            let d = sweep_partition(interval.0, interval.1, k, jumps);
            Ok((d.len(), gode_residual(u, x, &d)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = residual_verdict(&partitions);
    Ok(GodeResidualReport { partitions, verdict })
}

/// Exponents k of the steps h = 2^{−k} used for one-sided limits.
pub const LIMIT_STEPS: std::ops::RangeInclusive<i32> = 5..=40;

/// Trailing one-sided samples that must agree within tol.
pub const SETTLE_COUNT: usize = 5;

/// Distance from τ within which ‖V(τ, [x, τ])‖ and its inverse enter K.
pub const K_RADIUS: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VConditionsReport {
    pub v1: bool,
    pub v2: bool,
    pub v3: bool,
    pub v4: bool,
    /// Probe points where a condition failed, tagged by its number.
    pub failures: Vec<(u8, f64)>,
    /// V(t, [t, t + h]) at the smallest h, per probe below b.
    pub plus_limits: Vec<(f64, Element)>,
    /// V(t, [t − h, t]) at the smallest h, per probe above a.
    pub minus_limits: Vec<(f64, Element)>,
    /// sup of ‖V(τ, [x, τ])‖ and ‖V(τ, [x, τ])⁻¹‖ over τ − x ≤ K_RADIUS.
    pub k_bound: f64,
}

impl VConditionsReport {
    pub fn all_pass(&self) -> bool {
        self.v1 && self.v2 && self.v3 && self.v4
    }
}

fn settles(vals: &[Element], tol: f64) -> bool {
    let k = vals.len();
    k >= SETTLE_COUNT && vals[k - SETTLE_COUNT..].iter().all(|v| v.dist(&vals[k - 1]) <= tol)
}

/// Probes (V1)–(V4) at the points `probes`.
pub fn check_v_conditions(v: &VFunction, probes: &[f64], tol: f64) -> Result<VConditionsReport> {
    let id = Element::identity(v.kind);
    let mut fails = Vec::new();
    let mut k_bound: f64 = 0.0;
    let (mut plus_limits, mut minus_limits) = (Vec::new(), Vec::new());
    let hs: Vec<f64> = LIMIT_STEPS.map(|k| 2f64.powi(-k) * (v.b - v.a)).collect();
    for &t in probes {
        if v.eval(t, t, t)? != id {
            fails.push((1, t));
        }
        let r2: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let (x, y) = ((t - h).max(v.a), (t + h).min(v.b));
                Ok(v.eval(t, x, y)?.dist(&(&v.eval(t, t, y)? * &v.eval(t, x, t)?)))
            })
            .collect::<Result<_>>()?;
        if r2[r2.len() - SETTLE_COUNT..].iter().any(|&r| r > tol) {
            fails.push((2, t));
        }
        if t < v.b {
            let plus: Vec<Element> = hs.iter().map(|&h| v.eval(t, t, (t + h).min(v.b))).collect::<Result<_>>()?;
            if !settles(&plus, tol) || plus.last().unwrap().inverse().is_err() {
                fails.push((3, t));
            }
            plus_limits.push((t, plus.last().unwrap().clone()));
        }
        if t > v.a {
            let minus: Vec<Element> = hs.iter().map(|&h| v.eval(t, (t - h).max(v.a), t)).collect::<Result<_>>()?;
            if !settles(&minus, tol) || minus.last().unwrap().inverse().is_err() {
                fails.push((4, t));
            }
            minus_limits.push((t, minus.last().unwrap().clone()));
            for (m, &h) in minus.iter().zip(&hs) {
                if h <= K_RADIUS {
                    k_bound = k_bound.max(m.norm());
                    k_bound = k_bound.max(m.inverse().map(|i| i.norm()).unwrap_or(f64::INFINITY));
                }
            }
        }
    }
    let has = |c: u8| !fails.iter().any(|f| f.0 == c);
    Ok(VConditionsReport { v1: has(1), v2: has(2), v3: has(3), v4: has(4), failures: fails, plus_limits, minus_limits, k_bound })
}

/// W(t) from products of V over a fixed grid: exact at grid points and
/// W(t) = V(t_j, [t_j, t])·W(t_j) between them.
#[derive(Clone, Debug)]
pub struct GridSolution {
    v: VFunction,
    points: Vec<f64>,
    values: Vec<Element>,
}

impl GridSolution {
    pub fn new(v: &VFunction, d: &TaggedPartition) -> Result<GridSolution> {
        let mut values = vec![Element::identity(v.kind)];
        for (xi, lo, hi) in d.intervals() {
            let next = &v.eval(xi, lo, hi)? * values.last().unwrap();
            values.push(next);
        }
        Ok(GridSolution { v: v.clone(), points: d.points.clone(), values })
    }

    pub fn eval(&self, t: f64) -> Result<Element> {
        let j = self.points.partition_point(|&p| p <= t);
        if j == 0 {
            return Err(Error::OutOfInterval { t, a: self.points[0], b: *self.points.last().unwrap() });
        }
        let tj = self.points[j - 1];
        if tj == t {
            return Ok(self.values[j - 1].clone());
        }
        Ok(&self.v.eval(tj, tj, t)? * &self.values[j - 1])
    }

    pub fn last(&self) -> &Element {
        self.values.last().unwrap()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gode2Report {
    /// Products of V over the sweep partitions.
    pub convergence: ConvergenceReport,
    /// Residuals of W against U(τ, t) = I + A(t) − A(τ) on coarser levels.
    pub residuals: GodeResidualReport,
}

/// Uniform probes at which the round trip checks its hypotheses.
pub const HYPOTHESIS_PROBES: usize = 64;

/// Coarse levels below the solution grid at which residuals are taken.
pub const RESIDUAL_LEVELS: usize = 6;

/// Builds V from A by the Vdef form and W by products of V on the finest
/// level, then reports product convergence and residual decay. Fails when a
/// sampled I + Δ⁺A or I − Δ⁻A is singular.
pub fn gode2_roundtrip(a: Arc<dyn Mapping>, tol: f64, levels: usize, jumps: &[f64]) -> Result<Gode2Report> {
    if levels < RESIDUAL_LEVELS {
        return Err(Error::InvalidInput(format!("need at least {RESIDUAL_LEVELS} levels")));
    }
    let (lo, hi) = a.interval();
    let id = Element::identity(a.kind());
    let mut failures = Vec::new();
    let probes = (0..=HYPOTHESIS_PROBES).map(|i| lo + (hi - lo) * i as f64 / HYPOTHESIS_PROBES as f64).chain(jumps.iter().cloned());
    for t in probes {
        let at = a.eval(t)?;
        let plus = t < hi && (&id + &(&a.right_limit(t)? - &at)).inverse().is_err();
        let minus = t > lo && (&id - &(&at - &a.left_limit(t)?)).inverse().is_err();
        if plus || minus {
            failures.push(t);
        }
    }
    if !failures.is_empty() {
        return Err(Error::InvalidInput(format!("I + Δ⁺A or I − Δ⁻A is singular at {failures:?}")));
    }
    gode_sweep(&VFunction::from_mapping(a, VForm::Vdef)?, tol, levels, jumps)
}

/// W from products of V on the finest sweep level; residuals against the
/// U that V induces, on the coarser levels. For the Vdef form that U is
/// I + A(t) − A(τ).
pub fn gode_sweep(v: &VFunction, tol: f64, levels: usize, jumps: &[f64]) -> Result<Gode2Report> {
    if levels < RESIDUAL_LEVELS {
        return Err(Error::InvalidInput(format!("need at least {RESIDUAL_LEVELS} levels")));
    }
    let (lo, hi) = (v.a, v.b);
    let convergence = ConvergenceReport::sweep(tol, levels, |k| {
        let d = sweep_partition(lo, hi, k, jumps);
        Ok((d.len(), GridSolution::new(v, &d)?.last().clone()))
    })?;
    let w = GridSolution::new(v, &sweep_partition(lo, hi, levels, jumps))?;
    let u = |tau: f64, t: f64| u_from_v(v, tau, t);
    let residuals = residual_sweep(&u, &|t| w.eval(t), (lo, hi), levels - RESIDUAL_LEVELS..=levels - 1, jumps)?;
    Ok(Gode2Report { convergence, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prodint::StepIndefinite;
    use crate::stepmap::catalog::{constant, ex301, ex33, ex33_term, ex401, linear, sqrtcos};
    use crate::stepmap::{RegulatedSample, StepMapping};
    use crate::transfinite::DEFAULT_BUDGET;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nc() -> Element {
        Element::matrix(&[&[0.0, 1.0], &[-2.0, 0.5]]).unwrap()
    }

    fn arc(m: impl Mapping + 'static) -> Arc<dyn Mapping> {
        Arc::new(m)
    }

    #[test]
    fn u_from_v_cases() {
        let c = 0.7;
        let v = VFunction::from_mapping(arc(constant(0.0, 1.0, Element::scalar(c))), VForm::Linear).unwrap();
        assert_eq!(u_from_v(&v, 0.3, 0.3).unwrap(), Element::scalar(1.0));
        assert!((u_from_v(&v, 0.25, 0.75).unwrap().as_scalar() - (1.0 + 0.5 * c)).abs() < 1e-15);
        assert!((u_from_v(&v, 0.75, 0.25).unwrap().as_scalar() - 1.0 / (1.0 + 0.5 * c)).abs() < 1e-15);
        let a = sqrtcos();
        let v = VFunction::from_mapping(arc(a.clone()), VForm::Stieltjes).unwrap();
        let want = 1.0 + (a.eval(0.9).unwrap().as_scalar() - a.eval(0.4).unwrap().as_scalar());
        assert_eq!(u_from_v(&v, 0.4, 0.9).unwrap().as_scalar(), want);
        assert!(v.eval(0.5, 0.6, 0.7).is_err());
    }

    #[test]
    fn residual_trivial_and_exponential() {
        let d = TaggedPartition::uniform(0.0, 1.0, 16, Tag::Left);
        let one = |_: f64, _: f64| Ok(Element::scalar(1.0));
        assert_eq!(gode_residual(&one, &|_| Ok(Element::scalar(1.0)), &d).unwrap(), 0.0);

        let c = 1.3;
        let v = VFunction::from_mapping(arc(constant(0.0, 1.0, Element::scalar(c))), VForm::Linear).unwrap();
        let u = |tau: f64, t: f64| u_from_v(&v, tau, t);
        let x = |t: f64| Ok(Element::scalar((c * t).exp()));
        let r: Vec<f64> =
            (4..10).map(|k| gode_residual(&u, &x, &TaggedPartition::uniform(0.0, 1.0, 1 << k, Tag::Left)).unwrap()).collect();
        for w in r.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() < 0.03, "{r:?}");
        }
        // Σ (e^{cΔ} − 1 − cΔ) e^{c t_{i−1}} in closed form.
        let m = 64;
        let h = 1.0 / m as f64;
        let want: f64 = (0..m).map(|i| ((c * h).exp() - 1.0 - c * h) * (c * i as f64 * h).exp()).sum();
        assert!((gode_residual(&u, &x, &TaggedPartition::uniform(0.0, 1.0, m, Tag::Left)).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn residual_sweep_verdicts() {
        let zero = VFunction::from_mapping(arc(constant(0.0, 1.0, Element::zero(AlgebraKind::Matrix(2)))), VForm::Linear).unwrap();
        let id = |_: f64| Ok(Element::identity(AlgebraKind::Matrix(2)));
        let r = residual_sweep(&|t, s| u_from_v(&zero, t, s), &id, (0.0, 1.0), 2..=8, &[]).unwrap();
        assert!(r.partitions.iter().all(|p| p.1 == 0.0));
        assert_eq!(r.verdict, ResidualVerdict::Decaying);
        let v = VFunction::from_mapping(arc(constant(0.0, 1.0, nc())), VForm::Linear).unwrap();
        let r = residual_sweep(&|t, s| u_from_v(&v, t, s), &id, (0.0, 1.0), 2..=8, &[]).unwrap();
        assert_eq!(r.verdict, ResidualVerdict::NotDecaying);
        assert!(r.partitions.iter().all(|p| p.1 >= nc().norm() * 0.99));
        let w = |t: f64| (nc().scale(t)).exp();
        let r = residual_sweep(&|t, s| u_from_v(&v, t, s), &w, (0.0, 1.0), 2..=8, &[]).unwrap();
        assert_eq!(r.verdict, ResidualVerdict::Decaying);
    }

    #[test]
    fn ex301_indefinite_integral_solves() {
        let s = ex301(Element::scalar(1.0));
        let w = StepIndefinite::new(&s, 1e-10, DEFAULT_BUDGET);
        let v = VFunction::from_mapping(arc(s.clone()), VForm::Linear).unwrap();
        let u = |t: f64, x: f64| u_from_v(&v, t, x);
        let r = residual_sweep(&u, &|t| w.eval(t), (0.0, 1.0), 8..=14, &[]).unwrap();
        assert_eq!(r.verdict, ResidualVerdict::Decaying, "{r:?}");
        let ctl = residual_sweep(&u, &|_| Ok(Element::scalar(1.0)), (0.0, 1.0), 8..=14, &[]).unwrap();
        assert_eq!(ctl.verdict, ResidualVerdict::NotDecaying, "{ctl:?}");
    }

    #[test]
    fn vdef_tilde_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let maps: Vec<Arc<dyn Mapping>> = vec![
            arc(ex401(50, Element::scalar(1.0))),
            arc(sqrtcos()),
            arc(linear(0.0, 1.0, nc().scale(0.3))),
            arc(ex33(0.0, 1.0, Element::scalar(1.0))),
        ];
        for m in maps {
            let v = VFunction::from_mapping(m, VForm::Vdef).unwrap();
            let t = tilde_v(&v);
            for _ in 0..250 {
                let mut p = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
                p.sort_by(f64::total_cmp);
                let (x, xi, y) = (p[0], p[1], p[2]);
                match (v.eval(xi, x, y), t.eval(xi, x, y)) {
                    (Ok(a), Ok(b)) => assert_eq!(a, b),
                    (Err(_), Err(_)) => {}
                    other => panic!("{other:?}"),
                }
            }
        }
    }

    #[test]
    fn tilde_of_identity_and_linear() {
        let i = VFunction::identity(AlgebraKind::Matrix(2), 0.0, 1.0);
        assert_eq!(tilde_v(&i).eval(0.5, 0.2, 0.9).unwrap(), Element::identity(AlgebraKind::Matrix(2)));
        let a = RegulatedSample::continuous(AlgebraKind::Matrix(2), 0.0, 1.0, |t| nc().scale(1.0 + t));
        let v = VFunction::from_mapping(arc(a.clone()), VForm::Linear).unwrap();
        let (x, xi, y) = (0.1, 0.35, 0.8);
        let gap = tilde_v(&v).eval(xi, x, y).unwrap().dist(&v.eval(xi, x, y).unwrap());
        let axi = a.eval(xi).unwrap();
        let want = (y - xi) * (xi - x) * (&axi * &axi).norm();
        assert!((gap - want).abs() < 1e-14, "{gap} {want}");
    }

    #[test]
    fn equivalence_residual_cases() {
        let a = constant(0.0, 1.0, nc());
        let v = VFunction::from_mapping(arc(a), VForm::Linear).unwrap();
        let t = tilde_v(&v);
        let d = TaggedPartition::uniform(0.0, 1.0, 32, Tag::Mid);
        assert_eq!(equivalence_residual(&v, &v, &d).unwrap(), 0.0);
        let m = 32.0;
        let want = m * (0.5 / m) * (0.5 / m) * (&nc() * &nc()).norm();
        assert!((equivalence_residual(&v, &t, &d).unwrap() - want).abs() < 1e-14);
        let left = TaggedPartition::uniform(0.0, 1.0, 32, Tag::Left);
        assert_eq!(equivalence_residual(&v, &t, &left).unwrap(), 0.0);
        let vd = VFunction::from_mapping(arc(sqrtcos()), VForm::Vdef).unwrap();
        assert_eq!(equivalence_residual(&vd, &tilde_v(&vd), &d).unwrap(), 0.0);
    }

    #[test]
    fn v_conditions_linear_pass() {
        let probes: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        for m in [arc(ex401(50, Element::scalar(1.0))), arc(sqrtcos()), arc(linear(0.0, 1.0, nc()))] {
            let v = VFunction::from_mapping(m, VForm::Linear).unwrap();
            let r = check_v_conditions(&v, &probes, 1e-8).unwrap();
            assert!(r.all_pass(), "{r:?}");
            assert!(r.k_bound.is_finite() && r.k_bound < 1.1);
            assert!(r.plus_limits.iter().chain(&r.minus_limits).all(|(_, l)| l.dist(&Element::identity(v.kind)) < 1e-8));
        }
    }

    #[test]
    fn v_conditions_stieltjes_jumps() {
        let s = ex33(0.0, 1.0, Element::scalar(1.0));
        let v = VFunction::from_mapping(arc(s), VForm::Stieltjes).unwrap();
        let probes = [0.5, 0.75, 0.875, 0.3];
        let r = check_v_conditions(&v, &probes, 1e-10).unwrap();
        assert!(r.all_pass(), "{r:?}");
        for (n, (t, l)) in r.minus_limits.iter().take(3).enumerate() {
            assert_eq!(*t, probes[n]);
            assert_eq!(l.as_scalar(), 1.0 + ex33_term(n as u64 + 1));
        }
        assert_eq!(r.minus_limits[3].1.as_scalar(), 1.0);
        assert!(r.k_bound.is_finite());

        let j = StepMapping::finite(vec![0.0, 0.5, 1.0], vec![Element::scalar(1.0), Element::scalar(0.0), Element::scalar(0.0)]).unwrap();
        let v = VFunction::from_mapping(arc(j), VForm::Stieltjes).unwrap();
        let r = check_v_conditions(&v, &[0.5], 1e-10).unwrap();
        assert!(!r.v4 && r.v1 && r.v2 && r.v3);
        assert_eq!(r.failures, vec![(4, 0.5)]);
    }

    #[test]
    fn roundtrip_linear_is_exponential() {
        let a = linear(0.0, 1.0, nc().scale(0.5));
        let r = gode2_roundtrip(arc(a), 1e-9, 14, &[]).unwrap();
        let want = nc().scale(0.5).exp().unwrap();
        assert!(r.convergence.extrapolated.dist(&want) < 1e-8, "{}", r.convergence.extrapolated.dist(&want));
        assert_eq!(r.residuals.verdict, ResidualVerdict::Decaying, "{:?}", r.residuals);
    }

    #[test]
    fn roundtrip_step_and_zero() {
        let (za, zb) = (nc(), nc().scale(-0.25));
        let s = StepMapping::finite(vec![0.0, 0.3, 1.0], vec![za.clone(), zb.clone(), zb.clone()]).unwrap();
        let r = gode2_roundtrip(arc(s), 1e-12, 8, &[0.3]).unwrap();
        let id = Element::identity(AlgebraKind::Matrix(2));
        // A tag on the jump gives the implicit factor (I − Δ⁻A)⁻¹.
        let implicit = (&id - &(&zb - &za)).inverse().unwrap();
        assert!(r.convergence.value().dist(&implicit) < 1e-14);
        assert_eq!(r.residuals.verdict, ResidualVerdict::Decaying, "{:?}", r.residuals);
        // Left tags never sit on 0.3, giving the explicit factor I + z_b − z_a.
        let s = StepMapping::finite(vec![0.0, 0.3, 1.0], vec![za.clone(), zb.clone(), zb.clone()]).unwrap();
        let r = gode2_roundtrip(arc(s), 1e-12, 8, &[]).unwrap();
        assert!(r.convergence.value().dist(&(&id + &(&zb - &za))) < 1e-14);
        assert_eq!(r.residuals.verdict, ResidualVerdict::Decaying, "{:?}", r.residuals);

        let r = gode2_roundtrip(arc(constant(0.0, 1.0, Element::zero(AlgebraKind::Matrix(2)))), 1e-12, 8, &[]).unwrap();
        assert_eq!(r.convergence.value(), &id);
        assert!(r.residuals.partitions.iter().all(|p| p.1 == 0.0));

        let bad = StepMapping::finite(vec![0.0, 0.5, 1.0], vec![Element::scalar(0.0), Element::scalar(1.0), Element::scalar(1.0)]).unwrap();
        assert!(matches!(gode2_roundtrip(arc(bad), 1e-12, 8, &[0.5]), Err(Error::InvalidInput(m)) if m.contains("0.5")));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kernel_forms_agree(cuts in proptest::collection::vec(0.0f64..1.0, 1..20), tags in proptest::collection::vec(0.0f64..1.0, 21)) {
            let mut pts = cuts;
            pts.extend([0.0, 1.0]);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let tags: Vec<f64> = pts.windows(2).zip(&tags).map(|(w, s)| w[0] + s * (w[1] - w[0])).collect();
            let d = TaggedPartition::new(pts, tags).unwrap();
            let a = arc(linear(0.0, 1.0, nc().scale(0.4)));
            let v = VFunction::from_mapping(a.clone(), VForm::Vdef).unwrap();
            let x = |t: f64| Ok(Element::matrix(&[&[1.0 + t, t * t], &[0.5, 2.0 - t]]).unwrap());
            let r1 = gode_residual(&|tau, t| u_from_v(&v, tau, t), &x, &d).unwrap();
            let r2 = stieltjes_increment_residual(a.as_ref(), &x, &d).unwrap();
            prop_assert!((r1 - r2).abs() <= 1e-12 * r2.max(1.0));
        }
    }
}
