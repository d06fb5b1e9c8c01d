//! Stieltjes product integrals ∏(I + dA(t)): jump families of step mappings,
//! partition products I + A(t_i) − A(t_{i−1}), p-variation lower bounds, the
//! scalar jump conditions, the substitution identity, and the idempotent
//! identity.

use serde::Serialize;

use crate::algebra::{AlgebraKind, Element};
use crate::error::{Error, Result};
use crate::ordinal::{OrdinalIndex, WellOrderedSet};
use crate::partition::{ConvergenceReport, Tag, TaggedPartition};
use crate::stepmap::{Mapping, RegulatedSample, StepMapping};
use crate::transfinite::{abs_summable, transfinite_product, Family, SummabilityReport, SummabilityVerdict, TransfiniteResult};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoValue {
    pub value: Element,
    pub invertible: bool,
}

/// I + z_b − z_a; the two-value product integral exists iff it is invertible.
pub fn two_value_product(z_a: &Element, z_b: &Element) -> TwoValue {
    let value = &Element::identity(z_a.kind()) + &(z_b - z_a);
    let invertible = value.inverse().is_ok();
    TwoValue { value, invertible }
}

/// Treatment of limit elements in the jump family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitRule {
    /// x_γ = I, valid when z_β → z_γ.
    Continuous,
    /// x_γ = lim (I + z_γ − z_β), estimated from deep members.
    General,
}

/// Index of the member approached at sample j of a tail check.
fn tail_sample(j: u32) -> u64 {
    1u64 << j
}

/// Samples of the tail checks at limit elements.
pub const TAIL_SAMPLES: u32 = 21;

/// Tail members averaged into a general limit factor.
pub const GENERAL_TAIL: u64 = 10;

fn general_limit(s: &StepMapping, gamma: &OrdinalIndex) -> Result<Vec<Element>> {
    let id = Element::identity(s.kind);
    let zg = s.z(gamma);
    let n0 = tail_sample(TAIL_SAMPLES - 1);
    (n0 - GENERAL_TAIL + 1..=n0).map(|n| Ok(&id + &(&zg - &s.z(&s.set.approach(gamma, n)?)))).collect()
}

/// x_a = I, x_{S(β)} = I + z_{S(β)} − z_β, x_γ by `rule` at limit elements.
pub fn jump_family(s: &StepMapping, rule: LimitRule) -> Family {
    let me = s.clone();
    let finite = s.set.is_finite_set();
    Family::new(s.set.clone(), s.kind, move |i| {
        let id = Element::identity(me.kind);
        if let Some(p) = me.set.predecessor(i) {
            return &id + &(&me.z(i) - &me.z(&p));
        }
        if !me.set.is_limit(i) || rule == LimitRule::Continuous {
            return id;
        }
        match general_limit(&me, i) {
            Ok(v) => v.last().cloned().unwrap_or(id),
            Err(_) => id,
        }
    })
    .with_top(finite || rule == LimitRule::General)
}

/// Limit elements inspected before a jump-family product: the top and the
/// first few outer limit points of a tower.
pub fn probe_limit_points(set: &WellOrderedSet) -> Vec<OrdinalIndex> {
    let mut v = Vec::new();
    if set.is_finite_set() {
        return v;
    }
    let d = set.depth();
    if d > 1 {
        for k in 1..=4u64 {
            let mut c = vec![0; d];
            c[0] = k;
            v.push(OrdinalIndex::new(c));
            let mut c = vec![0; d];
            c[d - 2] = k;
            if d > 2 {
                v.push(OrdinalIndex::new(c));
            }
        }
    }
    v.push(OrdinalIndex::top());
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailCheck {
    /// value(γ).
    pub point: f64,
    /// ‖z_{β_j} − z_γ‖ along members β_j = approach(γ, 2^j).
    pub samples: Vec<f64>,
    pub passed: bool,
    /// True when the last sample is below the tolerance itself; otherwise the
    /// pass rests on the decreasing trend only.
    pub within_tol: bool,
}

/// Left-limit consistency z_β → z_γ at `gamma`.
pub fn tail_check(s: &StepMapping, gamma: &OrdinalIndex, tol: f64) -> Result<TailCheck> {
    let zg = s.z(gamma);
    let samples: Vec<f64> = (0..TAIL_SAMPLES)
        .map(|j| Ok(s.z(&s.set.approach(gamma, tail_sample(j))?).dist(&zg)))
        .collect::<Result<_>>()?;
    let k = samples.len();
    let last = samples[k - 1];
    let within_tol = last <= tol;
    let decreasing = samples[k - 4..].windows(2).all(|w| w[1] < w[0]);
    let passed = within_tol || (decreasing && last <= 0.01 * samples[4]);
    Ok(TailCheck { point: s.set.value(gamma)?, samples, passed, within_tol })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KsVerdict {
    Multipliable,
    /// The evaluation budget ran out; the value is a partial product.
    Truncated,
    /// A general limit factor did not settle.
    Inconclusive,
    /// A sampled jump factor or the product is singular: the integral does
    /// not exist, the value is the ordered product regardless.
    NotInvertible,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsReport {
    pub result: TransfiniteResult,
    pub rule: LimitRule,
    pub tail_checks: Vec<TailCheck>,
    pub verdict: KsVerdict,
}

impl KsReport {
    pub fn value(&self) -> &Element {
        &self.result.value
    }
}

/// Jump factors checked for invertibility by `ks_step_product`.
pub const JUMP_SAMPLES: usize = 256;

/// ∏(I + dA) for a step mapping as the product of its jump family.
pub fn ks_step_product(s: &StepMapping, tol: f64, budget: u64, rule: LimitRule) -> Result<KsReport> {
    let mut checks = Vec::new();
    let mut settled = true;
    for g in probe_limit_points(&s.set) {
        let c = tail_check(s, &g, tol)?;
        if rule == LimitRule::Continuous && !c.passed {
            return Err(Error::LimitMismatch(*c.samples.last().unwrap()));
        }
        if rule == LimitRule::General {
            let v = general_limit(s, &g)?;
            let spread = v.iter().map(|x| x.dist(v.last().unwrap())).fold(0.0, f64::max);
            settled &= spread < tol && v.last().unwrap().inverse().is_ok();
        }
        checks.push(c);
    }
    let fam = jump_family(s, rule);
    let jumps_invertible = fam.sample_indices(JUMP_SAMPLES).iter().all(|i| fam.term(i).inverse().is_ok());
    let result = transfinite_product(&fam, tol, budget);
    let verdict = if !jumps_invertible || result.value.inverse().is_err() {
        KsVerdict::NotInvertible
    } else if !settled {
        KsVerdict::Inconclusive
    } else if result.truncated {
        KsVerdict::Truncated
    } else {
        KsVerdict::Multipliable
    };
    Ok(KsReport { result, rule, tail_checks: checks, verdict })
}

/// Π (I + A(t_i) − A(t_{i−1})), later factors on the left.
pub fn ks_partition_product(a: &dyn Mapping, points: &[f64]) -> Result<Element> {
    let id = Element::identity(a.kind());
    let mut prev = a.eval(points[0])?;
    let mut acc = id.clone();
    for &t in &points[1..] {
        let cur = a.eval(t)?;
        acc = &(&id + &(&cur - &prev)) * &acc;
        prev = cur;
    }
    Ok(acc)
}

/// Stieltjes partition products on 2^k equal intervals of [lo, hi].
pub fn rs_refinement_on(a: &dyn Mapping, lo: f64, hi: f64, tol: f64, max_levels: usize) -> Result<ConvergenceReport> {
    ConvergenceReport::sweep(tol, max_levels, |k| {
        let m = 1usize << k;
        Ok((m, ks_partition_product(a, &TaggedPartition::uniform(lo, hi, m, Tag::Left).points)?))
    })
}

pub fn rs_refinement(a: &dyn Mapping, tol: f64, max_levels: usize) -> Result<ConvergenceReport> {
    let (lo, hi) = a.interval();
    rs_refinement_on(a, lo, hi, tol, max_levels)
}

fn require_ladder(s: &StepMapping) -> Result<()> {
    match s.set {
        WellOrderedSet::Ladder { .. } => Ok(()),
        _ => Err(Error::InvalidInput("ladder-aligned partitions need a ladder step set".into())),
    }
}

/// Stieltjes products on the partitions α(0) < α(1) < … < α(k) < b,
/// k = 2^j, evaluated from the step values so that k may exceed the
/// floating-point resolution of the points.
pub fn rs_aligned(s: &StepMapping, tol: f64, max_levels: usize) -> Result<ConvergenceReport> {
    require_ladder(s)?;
    let id = Element::identity(s.kind);
    let z = |n: u64| s.z(&OrdinalIndex::new(vec![n]));
    let mut acc = id.clone();
    let mut done = 0u64;
    ConvergenceReport::sweep(tol, max_levels, |j| {
        let k = 1u64 << j;
        while done < k {
            done += 1;
            acc = &(&id + &(&z(done) - &z(done - 1))) * &acc;
        }
        let last = &id + &(s.top_value() - &z(k));
        Ok((k as usize + 1, &last * &acc))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PVerdict {
    /// Heuristic label: increments over the nested probes shrink.
    FiniteSuggested,
    /// Increments over the nested probes do not shrink.
    GrowthWitness,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PVariationEstimate {
    pub p: f64,
    /// Σ‖A(t_i) − A(t_{i−1})‖^p per probe partition: lower bounds of the
    /// p-th power of the p-variation.
    pub lower_bounds: Vec<f64>,
    pub verdict: PVerdict,
}

fn p_verdict(p: f64, lower_bounds: Vec<f64>) -> PVariationEstimate {
    let inc: Vec<f64> = lower_bounds.windows(2).map(|w| w[1] - w[0]).collect();
    let k = inc.len();
    let growth = k >= 3 && inc[k - 3..].windows(2).all(|w| w[0] > 0.0 && w[1] >= 0.95 * w[0]);
    let verdict = if growth { PVerdict::GrowthWitness } else { PVerdict::FiniteSuggested };
    PVariationEstimate { p, lower_bounds, verdict }
}

/// Σ‖ΔA‖^p over each partition; the partitions should be nested and
/// increasing for the verdict to mean anything.
pub fn p_variation_probe(a: &dyn Mapping, p: f64, partitions: &[Vec<f64>]) -> Result<PVariationEstimate> {
    if !(p > 0.0) {
        return Err(Error::InvalidInput("p must be positive".into()));
    }
    let mut bounds = Vec::with_capacity(partitions.len());
    for pts in partitions {
        let mut s = 0.0;
        let mut prev = a.eval(pts[0])?;
        for &t in &pts[1..] {
            let cur = a.eval(t)?;
            s += cur.dist(&prev).powf(p);
            prev = cur;
        }
        bounds.push(s);
    }
    Ok(p_verdict(p, bounds))
}

/// p-variation sums on the ladder-aligned partitions with k = 2^j, j ≤ levels.
pub fn p_variation_ladder(s: &StepMapping, p: f64, levels: usize) -> Result<PVariationEstimate> {
    require_ladder(s)?;
    let z = |n: u64| s.z(&OrdinalIndex::new(vec![n]));
    let mut acc = 0.0;
    let mut done = 0u64;
    let mut bounds = Vec::new();
    for j in 0..=levels {
        let k = 1u64 << j;
        while done < k {
            done += 1;
            acc += z(done).dist(&z(done - 1)).powf(p);
        }
        bounds.push(acc + s.top_value().dist(&z(k)).powf(p));
    }
    Ok(p_verdict(p, bounds))
}

/// {0} ∪ {1/i : i ≤ n}, increasing.
pub fn harmonic_partition(n: usize) -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend((1..=n).rev().map(|i| 1.0 / i as f64));
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalarRsReport {
    /// Limit consistency at the probed limit elements and 1 + Δ⁻f ≠ 0 at
    /// every inspected jump (Δ⁺f vanishes by right-continuity).
    pub regulated_jumps: bool,
    /// Position of the first jump with 1 + Δ⁻f = 0, if any.
    pub first_bad_jump: Option<f64>,
    pub jump_squares: SummabilityReport,
    /// Partition whose refinements keep Σ|f(y_i−) − f(y_{i−1}+)|² below ε,
    /// certified by the tail of the jump-square series.
    pub partition: Option<Vec<f64>>,
    pub eps: f64,
}

impl ScalarRsReport {
    pub fn all_pass(&self) -> bool {
        self.regulated_jumps && self.jump_squares.verdict == SummabilityVerdict::Convergent && self.partition.is_some()
    }
}

/// Jumps inspected by `scalar_rs_conditions`.
pub const JUMP_PROBE: u64 = 1 << 16;

/// The three scalar conditions for a step mapping.
pub fn scalar_rs_conditions(s: &StepMapping, eps: f64, tol: f64, budget: u64) -> Result<ScalarRsReport> {
    if s.kind != AlgebraKind::Scalar {
        return Err(Error::KindMismatch(AlgebraKind::Scalar, s.kind));
    }
    let mut regulated = true;
    for g in probe_limit_points(&s.set) {
        regulated &= tail_check(s, &g, tol)?.passed;
    }
    let jump = |i: &OrdinalIndex| match s.set.predecessor(i) {
        Some(p) => s.z(i).as_scalar() - s.z(&p).as_scalar(),
        None => 0.0,
    };
    let inspected: Vec<OrdinalIndex> = match &s.set {
        WellOrderedSet::Ladder { .. } => (1..=JUMP_PROBE).map(|n| OrdinalIndex::new(vec![n])).collect(),
        _ => {
            let mut v = s.set.enumerate_prefix(f64::INFINITY, JUMP_PROBE as usize).0;
            v.retain(|i| !i.is_top() || s.set.is_finite_set());
            v
        }
    };
    let mut first_bad = None;
    for i in &inspected {
        if (1.0 + jump(i)).abs() < 1e-12 {
            regulated = false;
            first_bad = Some(s.set.value(i)?);
            break;
        }
    }
    let me = s.clone();
    let squares = Family::new(s.set.clone(), AlgebraKind::Scalar, move |i| {
        let d = match me.set.predecessor(i) {
            Some(p) => me.z(i).as_scalar() - me.z(&p).as_scalar(),
            None => 0.0,
        };
        Element::scalar(d * d)
    })
    .with_top(s.set.is_finite_set());
    let jump_squares = abs_summable(&squares, tol, budget);
    let partition = match (&s.set, &jump_squares.verdict) {
        (WellOrderedSet::Finite { points }, SummabilityVerdict::Convergent) => Some(points.clone()),
        (WellOrderedSet::Ladder { .. }, SummabilityVerdict::Convergent) => {
            let total = jump_squares.sum.value.as_scalar() + jump_squares.sum.achieved_tol;
            let mut head = 0.0;
            let mut found = None;
            for k in 0..=JUMP_PROBE {
                if k > 0 {
                    head += squares.term(&OrdinalIndex::new(vec![k])).as_scalar();
                }
                if total - head < eps {
                    found = Some(k);
                    break;
                }
            }
            found.map(|k| {
                let mut pts: Vec<f64> =
                    (0..=k).map(|n| s.set.value(&OrdinalIndex::new(vec![n])).unwrap()).collect();
                pts.push(s.set.b());
                pts
            })
        }
        _ => None,
    };
    Ok(ScalarRsReport { regulated_jumps: regulated, first_bad_jump: first_bad, jump_squares, partition, eps })
}

/// ∫_lo^hi f by double-exponential quadrature on `pieces` equal subintervals.
pub fn integrate(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, pieces: usize) -> f64 {
    let w = (hi - lo) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let a = lo + w * i as f64;
            let b = if i + 1 == pieces { hi } else { a + w };
            quadrature::integrate(f, a, b, 1e-15).integral
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubstitutionLevel {
    pub lower: f64,
    /// ∏_lower^b (I + dF) from Stieltjes refinements, extrapolated.
    pub stieltjes: f64,
    /// ∏_lower^b (I + f dt) = exp ∫_lower^b f.
    pub lebesgue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubstitutionReport {
    pub levels: Vec<SubstitutionLevel>,
    pub stieltjes: Element,
    pub lebesgue: Element,
    pub primitive_probes: usize,
}

/// Quadrature pieces per unit length used by `substitution_check`.
pub const QUAD_PIECES: usize = 1024;

/// Probes of F(t) − F(lower) = ∫_lower^t f per lower limit.
pub const PRIMITIVE_PROBES: usize = 8;

/// Both sides of the substitution identity for a scalar f with primitive F,
/// computed on [δ, b] for each δ in `lower` (decreasing toward a). The
/// reported pair comes from the last δ.
pub fn substitution_check(
    f: &dyn Fn(f64) -> f64,
    big_f: &RegulatedSample,
    tol: f64,
    lower: &[f64],
    levels: usize,
) -> Result<SubstitutionReport> {
    if big_f.kind != AlgebraKind::Scalar {
        return Err(Error::KindMismatch(AlgebraKind::Scalar, big_f.kind));
    }
    if lower.is_empty() {
        return Err(Error::InvalidInput("at least one lower limit is needed".into()));
    }
    let b = big_f.b;
    let fv = |t: f64| big_f.eval(t).map(|x| x.as_scalar());
    let mut out = Vec::new();
    let mut probes = 0;
    for &d in lower {
        if !(d >= big_f.a && d < b) {
            return Err(Error::OutOfInterval { t: d, a: big_f.a, b });
        }
        let f0 = fv(d)?;
        let mut prev_t = d;
        let mut integral = 0.0;
        for j in 1..=PRIMITIVE_PROBES {
            let t = d + (b - d) * j as f64 / PRIMITIVE_PROBES as f64;
            let pieces = ((t - prev_t) * QUAD_PIECES as f64).ceil().max(1.0) as usize;
            integral += integrate(f, prev_t, t, pieces);
            prev_t = t;
            let gap = (fv(t)? - f0 - integral).abs();
            probes += 1;
            if gap > tol / 10.0 {
                return Err(Error::PrimitiveMismatch { t, gap });
            }
        }
        let rs = rs_refinement_on(big_f, d, b, tol, levels)?;
        out.push(SubstitutionLevel { lower: d, stieltjes: rs.extrapolated.as_scalar(), lebesgue: integral.exp() });
    }
    let last = out.last().unwrap();
    Ok(SubstitutionReport {
        stieltjes: Element::scalar(last.stieltjes),
        lebesgue: Element::scalar(last.lebesgue),
        levels: out,
        primitive_probes: probes,
    })
}

/// Lower limits 2/(2k+1), k = 1, 2, 4, …, 2^{n−1}: zeros of √t cos(π/t).
pub fn sqrtcos_lower_limits(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 / (2.0 * (1u64 << j) as f64 + 1.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdempotentReport {
    /// ∏(I + dA)·A(a).
    pub stieltjes_side: Element,
    /// Π z_α including z_b.
    pub product_side: Element,
    pub distance: f64,
}

/// Tolerance on ‖z² − z‖ for sampled step values.
pub const IDEMPOTENT_TOL: f64 = 1e-12;

/// Samples checked for idempotency.
pub const IDEMPOTENT_SAMPLES: usize = 256;

/// (∏(I + dA))·z_a against Π z_α for an idempotent-valued step mapping.
pub fn idempotent_identity(s: &StepMapping, tol: f64, budget: u64) -> Result<IdempotentReport> {
    let values = s.values_family();
    for i in values.sample_indices(IDEMPOTENT_SAMPLES) {
        let z = values.term(&i);
        let d = (&z * &z).dist(&z);
        if d > IDEMPOTENT_TOL * z.norm().max(1.0) {
            return Err(Error::NotIdempotent(d));
        }
    }
    let ks = ks_step_product(s, tol, budget, LimitRule::Continuous)?;
    let za = s.z(&s.set.min_index());
    let stieltjes_side = ks.value() * &za;
    let product_side = transfinite_product(&values, tol, budget).value;
    let distance = stieltjes_side.dist(&product_side);
    Ok(IdempotentReport { stieltjes_side, product_side, distance })
}
