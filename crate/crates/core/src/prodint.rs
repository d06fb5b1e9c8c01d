//! Product integrals ∏(I + A(t)dt): partition products, uniform Riemann
//! sweeps, exact step formulas, the strong residual, and the boundedness and
//! absolute-summability criteria for step mappings.

use std::sync::OnceLock;

use serde::Serialize;

use crate::algebra::Element;
use crate::error::Result;
use crate::ordinal::OrdinalIndex;
use crate::partition::{ConvergenceReport, Tag, TaggedPartition};
use crate::stepmap::{Mapping, StepMapping};
use crate::transfinite::{
    abs_summable, check_exp_sum_identity, transfinite_product, Family, PartialProducts, SummabilityReport,
    TransfiniteResult,
};

/// (I + A(ξ_m)Δ_m) ⋯ (I + A(ξ_1)Δ_1).
pub fn partition_product(a: &dyn Mapping, d: &TaggedPartition) -> Result<Element> {
    let mut acc = Element::identity(a.kind());
    for (xi, x, y) in d.intervals() {
        let f = &Element::identity(a.kind()) + &a.eval(xi)?.scale(y - x);
        acc = &f * &acc;
    }
    Ok(acc)
}

/// Partition products on m = 2^k equal intervals, k = 0..=max_levels.
pub fn riemann_product_integral(a: &dyn Mapping, tol: f64, max_levels: usize, tag: Tag) -> Result<ConvergenceReport> {
    let (lo, hi) = a.interval();
    ConvergenceReport::sweep(tol, max_levels, |k| {
        let m = 1usize << k;
        Ok((m, partition_product(a, &TaggedPartition::uniform(lo, hi, m, tag))?))
    })
}

/// The family (exp((S(α) − α)z_α)).
pub fn step_exp_family(s: &StepMapping) -> Family {
    s.gap_weighted().exps()
}

/// ∏(I + A dt) = Π exp((S(α) − α)z_α).
pub fn step_product_integral(s: &StepMapping, tol: f64, budget: u64) -> TransfiniteResult {
    transfinite_product(&step_exp_family(s), tol, budget)
}

/// (Π exp((S(α) − α)z_α), exp Σ (S(α) − α)z_α) for commuting step values.
pub fn commutative_product_integral(s: &StepMapping, tol: f64, budget: u64) -> Result<(Element, Element)> {
    let (p, e) = check_exp_sum_identity(&s.gap_weighted(), tol, budget)?;
    Ok((p.value, e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum BoundVerdict {
    /// Running maxima settled; `sup` is the largest norm seen.
    Bounded { sup: f64 },
    /// Running maxima over prefixes of size 2, 4, 8, … at least doubled
    /// at each of the last three doublings, or overflowed.
    UnboundedWitness { maxima: Vec<f64> },
}

fn classify_maxima(maxima: Vec<f64>) -> BoundVerdict {
    let k = maxima.len();
    let overflow = maxima.iter().any(|m| !m.is_finite());
    let growing = k >= 4 && maxima[k - 4..].windows(2).all(|w| w[1] >= 2.0 * w[0] && w[1] > 0.0);
    if overflow || growing {
        BoundVerdict::UnboundedWitness { maxima }
    } else {
        BoundVerdict::Bounded { sup: maxima.last().cloned().unwrap_or(0.0) }
    }
}

fn running_maxima(norms: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut m = 0.0f64;
    for (i, &v) in norms.iter().enumerate() {
        m = if v.is_nan() { f64::INFINITY } else { m.max(v) };
        if (i + 1).is_power_of_two() {
            out.push(m);
        }
    }
    out
}

/// Boundedness of (z_α) scanned over the first `probe` members in order.
pub fn riemann_criterion(s: &StepMapping, probe: usize) -> BoundVerdict {
    let (idx, _) = s.set.enumerate_prefix(s.set.b(), probe);
    let norms: Vec<f64> = idx.iter().map(|i| s.z(i).norm()).collect();
    classify_maxima(running_maxima(&norms))
}

/// Boundedness of A over nested dyadic grids of up to `probe` points.
pub fn riemann_criterion_sampled(a: &dyn Mapping, probe: usize) -> Result<BoundVerdict> {
    let (lo, hi) = a.interval();
    let mut maxima = Vec::new();
    let mut m = 0.0f64;
    let mut n = 2usize;
    while n <= probe.max(2) {
        for i in 0..=n {
            m = m.max(a.eval(lo + (hi - lo) * (i as f64 / n as f64))?.norm());
        }
        maxima.push(m);
        n *= 2;
    }
    Ok(classify_maxima(maxima))
}

/// Absolute summability of ((S(α) − α)z_α).
pub fn bochner_criterion(s: &StepMapping, tol: f64, budget: u64) -> SummabilityReport {
    abs_summable(&s.gap_weighted(), tol, budget)
}

/// W(t) = exp((t − γ)z_γ)·Π_{α<γ} exp((S(α) − α)z_α) for t ∈ [γ, S(γ)).
pub struct StepIndefinite {
    mapping: StepMapping,
    partial: PartialProducts,
    total: OnceLock<Element>,
}

impl StepIndefinite {
    pub fn new(s: &StepMapping, tol: f64, budget: u64) -> StepIndefinite {
        StepIndefinite {
            mapping: s.clone(),
            partial: PartialProducts::new(step_exp_family(s), tol, budget),
            total: OnceLock::new(),
        }
    }

    pub fn mapping(&self) -> &StepMapping {
        &self.mapping
    }

    /// Whether some partial product hit the evaluation budget.
    pub fn truncated(&self) -> bool {
        self.partial.truncated()
    }

    pub fn below(&self, idx: &OrdinalIndex) -> Element {
        if idx.is_top() {
            return self.total.get_or_init(|| self.partial.total_below_top()).clone();
        }
        self.partial.below(idx)
    }

    pub fn eval(&self, t: f64) -> Result<Element> {
        let idx = self.mapping.set.locate(t)?;
        if idx.is_top() {
            return Ok(self.below(&idx));
        }
        let start = self.mapping.set.value(&idx)?;
        let head = self.mapping.z(&idx).scale(t - start).exp()?;
        Ok(&head * &self.below(&idx))
    }
}

/// Σ ‖I + A(ξ_i)Δ_i − W(t_i)W(t_{i−1})^{−1}‖.
pub fn strong_residual(a: &dyn Mapping, w: &dyn Fn(f64) -> Result<Element>, d: &TaggedPartition) -> Result<f64> {
    let id = Element::identity(a.kind());
    let mut prev = w(d.points[0])?;
    let mut sum = 0.0;
    for (xi, x, y) in d.intervals() {
        let cur = w(y)?;
        let v = &id + &a.eval(xi)?.scale(y - x);
        sum += v.dist(&(&cur * &prev.inverse()?));
        prev = cur;
    }
    Ok(sum)
}

/// Step of the central difference in `derivative_check`.
pub const FD_STEP: f64 = 1e-6;

/// max over `points` of ‖W′(t) − A(t)W(t)‖/‖A(t)W(t)‖, W′ by central differences.
pub fn derivative_check(a: &dyn Mapping, w: &dyn Fn(f64) -> Result<Element>, points: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in points {
        let wt = w(t)?;
        wt.inverse()?;
        let fd = (&w(t + FD_STEP)? - &w(t - FD_STEP)?).scale(0.5 / FD_STEP);
        let aw = &a.eval(t)? * &wt;
        let err = fd.dist(&aw);
        let rel = if err == 0.0 { 0.0 } else { err / aw.norm().max(f64::MIN_POSITIVE) };
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Constant mapping on [a, b] with its closed-form indefinite integral.
pub fn constant_with_indefinite(a: f64, b: f64, c: Element) -> (impl Mapping, impl Fn(f64) -> Result<Element>) {
    let m = crate::stepmap::catalog::constant(a, b, c.clone());
    (m, move |t: f64| c.scale(t - a).exp())
}

/// Bound C = M⁴ + M⁶ε relating a strong residual ε to the partition product
/// error, M bounding ‖W‖ and ‖W^{−1}‖ at the partition points.
pub fn strong_to_ordinary_bound(w: &dyn Fn(f64) -> Result<Element>, d: &TaggedPartition, eps: f64) -> Result<f64> {
    let mut m = 1.0f64;
    for &t in &d.points {
        let x = w(t)?;
        m = m.max(x.norm()).max(x.inverse()?.norm());
    }
    Ok(m.powi(4) + m.powi(6) * eps)
}
