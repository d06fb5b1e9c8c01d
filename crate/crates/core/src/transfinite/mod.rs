//! Sums and ordered products of families indexed by a well-ordered set.
//!
//! Evaluation recurses over the coordinates of the index: the innermost
//! ladder is accumulated term by term, each outer ladder accumulates the
//! settled values of the ladders nested below it. Products multiply each
//! new factor from the left, so the result is x_top ⋯ x_1 x_0.

pub mod limit;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::algebra::{AlgebraKind, Element};
use crate::error::{Error, Result};
use crate::ordinal::{OrdinalIndex, WellOrderedSet};
use limit::{MonotoneState, Tracker};

pub use limit::Mode;

/// Default cap on generator evaluations.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Terms per ladder allowed in the monotone (summability) mode.
const MONOTONE_LEVEL_CAP: u64 = 1 << 16;

pub type Generator = Arc<dyn Fn(&OrdinalIndex) -> Element + Send + Sync>;

/// A family (x_α) over a well-ordered set. The top element b contributes a
/// term only when `include_top` is set.
#[derive(Clone)]
pub struct Family {
    pub set: WellOrderedSet,
    pub kind: AlgebraKind,
    pub include_top: bool,
    gen: Generator,
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Family")
            .field("set", &self.set)
            .field("kind", &self.kind)
            .field("include_top", &self.include_top)
            .finish()
    }
}

impl Family {
    pub fn new(
        set: WellOrderedSet,
        kind: AlgebraKind,
        gen: impl Fn(&OrdinalIndex) -> Element + Send + Sync + 'static,
    ) -> Family {
        Family { set, kind, include_top: false, gen: Arc::new(gen) }
    }

    pub fn with_top(mut self, include: bool) -> Family {
        self.include_top = include;
        self
    }

    /// x_α.
    pub fn term(&self, idx: &OrdinalIndex) -> Element {
        (self.gen)(idx)
    }

    /// The family (g(x_α)) on the same index set.
    pub fn map(&self, kind: AlgebraKind, g: impl Fn(Element) -> Element + Send + Sync + 'static) -> Family {
        let inner = self.gen.clone();
        Family {
            set: self.set.clone(),
            kind,
            include_top: self.include_top,
            gen: Arc::new(move |i| g(inner(i))),
        }
    }

    /// (‖x_α‖) as scalars.
    pub fn norms(&self) -> Family {
        self.map(AlgebraKind::Scalar, |x| Element::scalar(x.norm()))
    }

    /// (exp x_α).
    pub fn exps(&self) -> Family {
        self.map(self.kind, |x| x.exp().expect("exp of family term"))
    }

    /// Members at which terms are sampled for structural checks.
    pub fn sample_indices(&self, count: usize) -> Vec<OrdinalIndex> {
        let (mut v, _) = self.set.enumerate_prefix(f64::INFINITY, count);
        if !self.include_top {
            v.retain(|i| !i.is_top());
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransfiniteResult {
    pub value: Element,
    pub achieved_tol: f64,
    pub terms_used: u64,
    pub truncated: bool,
    pub limit_points_visited: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "witness")]
pub enum SummabilityVerdict {
    Convergent,
    Inconclusive,
    DivergenceWitness(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub verdict: SummabilityVerdict,
    /// Σ‖x_α‖ as far as it was evaluated.
    pub sum: TransfiniteResult,
    /// Π(1 + ‖x_α‖), evaluated for convergent families.
    pub product: Option<TransfiniteResult>,
}

struct LevelOut {
    value: Element,
    err: f64,
}

struct Engine<'f> {
    fam: &'f Family,
    mode: Mode,
    tol: f64,
    budget: u64,
    used: u64,
    exhausted: bool,
    limits: u64,
    monotone: bool,
    diverging: Option<Vec<f64>>,
    condensed: bool,
    undecided: bool,
}

impl<'f> Engine<'f> {
    fn new(fam: &'f Family, mode: Mode, tol: f64, budget: u64, monotone: bool) -> Engine<'f> {
        Engine {
            fam,
            mode,
            tol,
            budget,
            used: 0,
            exhausted: false,
            limits: 0,
            monotone,
            diverging: None,
            condensed: false,
            undecided: false,
        }
    }

    fn unit(&self) -> Element {
        match self.mode {
            Mode::Sum => Element::zero(self.fam.kind),
            Mode::Product => Element::identity(self.fam.kind),
        }
    }

    fn eval(&mut self, idx: &OrdinalIndex) -> Option<Element> {
        if self.used >= self.budget {
            self.exhausted = true;
            return None;
        }
        self.used += 1;
        Some(self.fam.term(idx))
    }

    fn stopped(&self) -> bool {
        self.exhausted || self.diverging.is_some()
    }

    /// Accumulates the ladder of members sharing `prefix`.
    fn level(&mut self, prefix: &mut Vec<u64>, tol: f64) -> LevelOut {
        let depth = self.fam.set.depth();
        let d = prefix.len();
        let mut tr = Tracker::new(self.mode, tol, self.unit(), self.monotone);
        loop {
            let n = tr.count();
            prefix.push(n);
            let term = if d + 1 == depth {
                let idx = OrdinalIndex::new(prefix.clone());
                self.eval(&idx).map(|t| (t, 0.0))
            } else {
                // Sibling budgets tol·2^{−d−2}/((n+1)(n+2)) sum to tol·2^{−d−2}.
                let nf = n as f64;
                let child_tol = self.tol * 2f64.powi(-(d as i32) - 2) / ((nf + 1.0) * (nf + 2.0));
                let out = self.level(prefix, child_tol);
                Some((out.value, out.err))
            };
            prefix.pop();
            let Some((term, terr)) = term else {
                return LevelOut { value: tr.partial().clone(), err: tr.pending_err() };
            };
            if let Some((value, err, _)) = tr.push(&term, terr) {
                self.limits += 1;
                return LevelOut { value, err };
            }
            if self.stopped() {
                return LevelOut { value: tr.partial().clone(), err: tr.pending_err() };
            }
            if self.monotone {
                match tr.monotone_state() {
                    MonotoneState::Diverging(blocks) => {
                        self.diverging = Some(blocks);
                        return LevelOut { value: tr.partial().clone(), err: f64::INFINITY };
                    }
                    MonotoneState::Condensing { p } if tr.count() >= MONOTONE_LEVEL_CAP => {
                        self.condensed = true;
                        self.limits += 1;
                        let tail = tr.condensed_tail(p);
                        let value = &tr.partial().clone() + &Element::scalar(tail);
                        return LevelOut { value, err: tail + tr.inner_err() };
                    }
                    _ if tr.count() >= MONOTONE_LEVEL_CAP => {
                        self.undecided = true;
                        return LevelOut { value: tr.partial().clone(), err: tr.pending_err() };
                    }
                    _ => {}
                }
            }
        }
    }

    fn run(&mut self) -> TransfiniteResult {
        let fam = self.fam;
        let (mut value, mut err) = match &fam.set {
            WellOrderedSet::Finite { points } => {
                let mut acc = self.unit();
                for i in 0..points.len() - 1 {
                    let Some(t) = self.eval(&OrdinalIndex::new(vec![i as u64])) else { break };
                    acc = self.combine(&acc, &t);
                }
                (acc, 0.0)
            }
            _ => {
                let out = self.level(&mut Vec::new(), self.tol / 2.0);
                (out.value, out.err)
            }
        };
        if fam.include_top && !self.stopped() {
            if let Some(t) = self.eval(&OrdinalIndex::top()) {
                value = self.combine(&value, &t);
            }
        }
        if !value.is_finite() {
            err = f64::INFINITY;
        }
        TransfiniteResult {
            value,
            achieved_tol: err,
            terms_used: self.used,
            truncated: self.exhausted,
            limit_points_visited: self.limits,
        }
    }

    fn combine(&self, acc: &Element, t: &Element) -> Element {
        match self.mode {
            Mode::Sum => acc + t,
            Mode::Product => t * acc,
        }
    }
}

/// Σ_{α∈Λ} x_α.
pub fn transfinite_sum(f: &Family, tol: f64, budget: u64) -> TransfiniteResult {
    Engine::new(f, Mode::Sum, tol, budget, false).run()
}

/// Π_{α∈Λ} x_α with later factors on the left.
pub fn transfinite_product(f: &Family, tol: f64, budget: u64) -> TransfiniteResult {
    Engine::new(f, Mode::Product, tol, budget, false).run()
}

/// Absolute summability from the monotone partial sums of ‖x_α‖, cross-checked
/// against Π(1 + ‖x_α‖): for convergent families 1 + Σ ≤ Π ≤ exp Σ.
pub fn abs_summable(f: &Family, tol: f64, budget: u64) -> SummabilityReport {
    let norms = f.norms();
    let mut eng = Engine::new(&norms, Mode::Sum, tol, budget, true);
    let sum = eng.run();
    if let Some(blocks) = eng.diverging.take() {
        let tail: Vec<String> = blocks.iter().rev().take(4).rev().map(|b| format!("{b:.4e}")).collect();
        return SummabilityReport {
            verdict: SummabilityVerdict::DivergenceWitness(format!(
                "dyadic block sums of the norms stay flat: [{}]; partial sum {:.6e} after {} terms",
                tail.join(", "),
                sum.value.as_scalar(),
                sum.terms_used
            )),
            sum,
            product: None,
        };
    }
    if sum.truncated || eng.undecided || !sum.value.is_finite() {
        return SummabilityReport { verdict: SummabilityVerdict::Inconclusive, sum, product: None };
    }
    let onep = f.map(AlgebraKind::Scalar, |x| Element::scalar(1.0 + x.norm()));
    let product = transfinite_product(&onep, tol, budget);
    let s = sum.value.as_scalar();
    let p = product.value.as_scalar();
    let slack = 2.0 * tol + sum.achieved_tol + product.achieved_tol;
    let consistent = p.ln() <= s + slack && p >= 1.0 + s - slack * p;
    let verdict = if consistent || eng.condensed {
        SummabilityVerdict::Convergent
    } else {
        SummabilityVerdict::Inconclusive
    };
    SummabilityReport { verdict, sum, product: Some(product) }
}

/// (Π exp x_α, exp Σ x_α) for a commuting family; the two agree.
pub fn check_exp_sum_identity(f: &Family, tol: f64, budget: u64) -> Result<(TransfiniteResult, Element)> {
    let sample: Vec<Element> = f.sample_indices(20).iter().map(|i| f.term(i)).collect();
    for (i, x) in sample.iter().enumerate() {
        for y in &sample[i + 1..] {
            let c = x.commutator(y)?.norm();
            if c > 1e-12 * (1.0 + x.norm() * y.norm()) {
                return Err(Error::InvalidInput(format!("family terms do not commute ({c:e})")));
            }
        }
    }
    let prod = transfinite_product(&f.exps(), tol, budget);
    let sum = transfinite_sum(f, tol, budget);
    Ok((prod, sum.value.exp()?))
}

/// Π(1 − ‖x_α‖) together with the summability verdict for Σ‖x_α‖; the
/// product vanishes exactly when the sum diverges.
pub fn check_one_minus_product(f: &Family, tol: f64, budget: u64) -> Result<(TransfiniteResult, SummabilityReport)> {
    for i in f.sample_indices(64) {
        let n = f.term(&i).norm();
        if n >= 1.0 {
            return Err(Error::InvalidInput(format!("‖x_α‖ = {n} is not below 1")));
        }
    }
    let fac = f.map(AlgebraKind::Scalar, |x| Element::scalar(1.0 - x.norm()));
    Ok((transfinite_product(&fac, tol, budget), abs_summable(f, tol, budget)))
}

/// Norms of x_β (sum) or x_β − I (product) for the first k members of the
/// canonical sequence approaching `limit_point` from below.
pub fn tail_limit_check(f: &Family, limit_point: &OrdinalIndex, k: usize, mode: Mode) -> Result<Vec<f64>> {
    if !f.set.is_limit(limit_point) {
        return Err(Error::NotLimit);
    }
    (0..k as u64)
        .map(|n| {
            let x = f.term(&f.set.approach(limit_point, n)?);
            Ok(match mode {
                Mode::Sum => x.norm(),
                Mode::Product => x.dist_identity(),
            })
        })
        .collect()
}

/// Partial products Π_{α<γ} x_α for arbitrary γ, sharing the settled ladder
/// products between queries.
pub struct PartialProducts {
    fam: Family,
    tol: f64,
    budget: u64,
    /// prefix → [U_{k−1} ⋯ U_0 for k = 0, 1, …] over the children U of the prefix.
    cum: Mutex<HashMap<Vec<u64>, Vec<Element>>>,
    truncated: Mutex<bool>,
}

impl PartialProducts {
    pub fn new(fam: Family, tol: f64, budget: u64) -> PartialProducts {
        PartialProducts { fam, tol, budget, cum: Mutex::new(HashMap::new()), truncated: Mutex::new(false) }
    }

    pub fn family(&self) -> &Family {
        &self.fam
    }

    /// Whether any ladder product hit the budget.
    pub fn truncated(&self) -> bool {
        *self.truncated.lock().unwrap()
    }

    /// Π over the whole block of members extending `prefix`.
    fn block(&self, prefix: &[u64]) -> Element {
        let depth = self.fam.set.depth();
        let fam = self.fam.clone();
        let p = prefix.to_vec();
        let sub_depth = depth - prefix.len();
        // A family on a tower of the remaining depth reproduces the block.
        let sub = Family::new(WellOrderedSet::tower(sub_depth - 1, 0.0, 1.0), fam.kind, move |i| {
            let mut c = p.clone();
            c.extend_from_slice(&i.coords);
            fam.term(&OrdinalIndex::new(c))
        });
        let tol = self.tol * 2f64.powi(-(prefix.len() as i32) - 1);
        let r = transfinite_product(&sub, tol, self.budget);
        if r.truncated {
            *self.truncated.lock().unwrap() = true;
        }
        r.value
    }

    /// U_{k−1} ⋯ U_0 for the children of `prefix`.
    fn cumulative(&self, prefix: &[u64], k: u64) -> Element {
        let depth = self.fam.set.depth();
        {
            let cache = self.cum.lock().unwrap();
            if let Some(v) = cache.get(prefix) {
                if (k as usize) < v.len() {
                    return v[k as usize].clone();
                }
            }
        }
        let mut v = {
            let cache = self.cum.lock().unwrap();
            cache.get(prefix).cloned().unwrap_or_else(|| vec![Element::identity(self.fam.kind)])
        };
        while v.len() <= k as usize {
            let j = v.len() as u64 - 1;
            let mut c = prefix.to_vec();
            c.push(j);
            let u = if c.len() == depth { self.fam.term(&OrdinalIndex::new(c)) } else { self.block(&c) };
            let next = &u * v.last().unwrap();
            v.push(next);
        }
        let out = v[k as usize].clone();
        self.cum.lock().unwrap().insert(prefix.to_vec(), v);
        out
    }

    /// Π_{α<γ} x_α.
    pub fn below(&self, gamma: &OrdinalIndex) -> Element {
        if gamma.is_top() {
            return self.total_below_top();
        }
        if let WellOrderedSet::Finite { .. } = self.fam.set {
            return self.cumulative(&[], gamma.coords[0]);
        }
        let c = &gamma.coords;
        let mut acc = Element::identity(self.fam.kind);
        for d in 0..c.len() {
            let part = self.cumulative(&c[..d], c[d]);
            acc = &part * &acc;
        }
        acc
    }

    /// Π over all members below the top.
    pub fn total_below_top(&self) -> Element {
        let mut fam = self.fam.clone();
        fam.include_top = false;
        let r = transfinite_product(&fam, self.tol, self.budget);
        if r.truncated {
            *self.truncated.lock().unwrap() = true;
        }
        r.value
    }
}
