//! Limit estimation for one ladder of a nested accumulation.
//!
//! Partial results are sampled at N = 2, 4, 8, … accumulated terms and
//! extrapolated to N → ∞ by polynomial extrapolation in h = 1/N (Neville
//! tableau over the last `WINDOW` samples). A level is settled when two
//! consecutive extrapolants agree within its tolerance; the plain rule
//! (small, non-increasing terms whose geometric tail bound is below the
//! tolerance) settles fast tails first.

use crate::algebra::Element;

/// Samples kept in the extrapolation tableau.
pub const WINDOW: usize = 6;

/// Agreement below this multiple of machine epsilon (relative) is treated as
/// settled even when the requested tolerance is finer.
const NOISE_FLOOR: f64 = 1024.0 * f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Sum,
    Product,
}

/// How a level settled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Settled {
    /// Term norms fell below the tolerance, were non-increasing, and the
    /// ratio bound on the tail was below the tolerance too.
    Plain,
    /// Consecutive extrapolants agreed.
    Extrapolated,
}

/// Polynomial extrapolation to h = 0 through (hs[i], ys[i]), per coefficient.
pub fn extrapolate(hs: &[f64], ys: &[Element]) -> Element {
    assert_eq!(hs.len(), ys.len());
    assert!(!ys.is_empty());
    let mut t: Vec<Element> = ys.to_vec();
    let n = t.len();
    for k in 1..n {
        for i in (k..n).rev() {
            let f = hs[i] / (hs[i - k] - hs[i]);
            let d = &t[i] - &t[i - 1];
            t[i] = &t[i] + &d.scale(f);
        }
    }
    t.pop().unwrap()
}

/// Condensation exponent of the block sums B_{j−1}, B_j: the p for which
/// B_j ≈ C j^{−p}. The condensed series Σ B_j converges iff p > 1.
fn condensation_exponent(j: usize, prev: f64, cur: f64) -> f64 {
    if cur <= 0.0 {
        return f64::INFINITY;
    }
    let jf = j as f64;
    (prev / cur).ln() / (jf / (jf - 1.0)).ln()
}

#[derive(Clone, Debug, PartialEq)]
pub enum MonotoneState {
    Undecided,
    /// Block sums do not decay faster than 1/j.
    Diverging(Vec<f64>),
    /// Block sums decay like j^{−p} with p clearly above 1.
    Condensing { p: f64 },
}

pub struct Tracker {
    mode: Mode,
    tol: f64,
    n: u64,
    acc: Element,
    norms: [f64; 3],
    hs: Vec<f64>,
    ys: Vec<Element>,
    last_est: Option<Element>,
    last_diff: f64,
    inner_err: f64,
    monotone: bool,
    last_sample: f64,
    blocks: Vec<f64>,
}

impl Tracker {
    pub fn new(mode: Mode, tol: f64, start: Element, monotone: bool) -> Tracker {
        Tracker {
            mode,
            tol,
            n: 0,
            acc: start,
            norms: [f64::INFINITY; 3],
            hs: Vec::new(),
            ys: Vec::new(),
            last_est: None,
            last_diff: f64::INFINITY,
            inner_err: 0.0,
            monotone,
            last_sample: 0.0,
            blocks: Vec::new(),
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn partial(&self) -> &Element {
        &self.acc
    }

    /// Error carried in from inexact terms.
    pub fn inner_err(&self) -> f64 {
        self.inner_err
    }

    /// Best available error estimate for the current partial value.
    pub fn pending_err(&self) -> f64 {
        self.last_diff.min(self.norms[2]) + self.inner_err
    }

    /// Feeds the next term; returns the settled value when the level is done.
    pub fn push(&mut self, term: &Element, term_err: f64) -> Option<(Element, f64, Settled)> {
        let nrm = match self.mode {
            Mode::Sum => {
                self.acc = &self.acc + term;
                term.norm()
            }
            Mode::Product => {
                self.acc = term * &self.acc;
                term.dist_identity()
            }
        };
        self.inner_err += match self.mode {
            Mode::Sum => term_err,
            Mode::Product => term_err * self.acc.norm().max(1.0),
        };
        self.n += 1;
        self.norms = [self.norms[1], self.norms[2], nrm];
        if self.n >= 3 && nrm < self.tol && self.norms[2] <= self.norms[1] && self.norms[1] <= self.norms[0] {
            // Geometric tail bound from the last ratio.
            let tail = if nrm == 0.0 {
                0.0
            } else {
                let rho = nrm / self.norms[1];
                if rho < 1.0 { nrm * rho / (1.0 - rho) } else { f64::INFINITY }
            };
            if tail < self.tol {
                return Some((self.acc.clone(), tail + self.inner_err, Settled::Plain));
            }
        }
        if self.n >= 2 && self.n.is_power_of_two() {
            return self.sample();
        }
        None
    }

    fn sample(&mut self) -> Option<(Element, f64, Settled)> {
        if self.monotone {
            let s = self.acc.as_scalar();
            if self.n > 2 {
                self.blocks.push(s - self.last_sample);
            }
            self.last_sample = s;
        }
        self.hs.push(1.0 / self.n as f64);
        self.ys.push(self.acc.clone());
        if self.ys.len() > WINDOW {
            self.hs.remove(0);
            self.ys.remove(0);
        }
        if self.ys.len() < 3 {
            return None;
        }
        let est = extrapolate(&self.hs, &self.ys);
        let mut out = None;
        if let Some(prev) = &self.last_est {
            let diff = est.dist(prev);
            let floor = NOISE_FLOOR * est.norm().max(1.0);
            if diff < self.tol.max(floor) && diff <= self.last_diff {
                out = Some((est.clone(), diff + self.inner_err, Settled::Extrapolated));
            }
            self.last_diff = diff;
        }
        self.last_est = Some(est);
        out
    }

    /// Classification of a nonnegative scalar series from its dyadic block
    /// sums (needs at least five blocks).
    pub fn monotone_state(&self) -> MonotoneState {
        let b = &self.blocks;
        if !self.monotone || b.len() < 5 {
            return MonotoneState::Undecided;
        }
        let k = b.len();
        // blocks[i] covers terms (2^{i+1}, 2^{i+2}], i.e. condensation index j = i + 1.
        let ps: Vec<f64> = (k - 3..k).map(|i| condensation_exponent(i + 1, b[i - 1], b[i])).collect();
        if ps.iter().all(|&p| p <= 1.05) {
            MonotoneState::Diverging(b.clone())
        } else if ps.iter().all(|&p| p >= 1.5) {
            MonotoneState::Condensing { p: ps.iter().cloned().fold(f64::INFINITY, f64::min) }
        } else {
            MonotoneState::Undecided
        }
    }

    /// Tail estimate from the condensation fit Σ_{j>J} C j^{−p}.
    pub fn condensed_tail(&self, p: f64) -> f64 {
        let j = self.blocks.len() as f64;
        let last = *self.blocks.last().unwrap_or(&0.0);
        last * j / (p - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(mode: Mode, tol: f64, f: impl Fn(u64) -> f64, max: u64) -> Option<(f64, u64)> {
        let start = match mode {
            Mode::Sum => Element::scalar(0.0),
            Mode::Product => Element::scalar(1.0),
        };
        let mut t = Tracker::new(mode, tol, start, false);
        for n in 0..max {
            if let Some((v, _, _)) = t.push(&Element::scalar(f(n)), 0.0) {
                return Some((v.as_scalar(), t.count()));
            }
        }
        None
    }

    #[test]
    fn alternating_harmonic() {
        let (v, n) = run(Mode::Sum, 1e-12, |n| if n % 2 == 0 { 1.0 } else { -1.0 } / (n + 1) as f64, 1 << 16).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12, "{v}");
        assert!(n <= 2048);
    }

    #[test]
    fn basel_tail() {
        let (v, _) = run(Mode::Sum, 1e-12, |n| 1.0 / ((n + 1) as f64).powi(2), 1 << 16).unwrap();
        assert!((v - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_settles_plainly() {
        let mut t = Tracker::new(Mode::Sum, 1e-10, Element::scalar(0.0), false);
        let mut out = None;
        for n in 0..200 {
            out = t.push(&Element::scalar(0.5f64.powi(n)), 0.0);
            if out.is_some() {
                break;
            }
        }
        let (v, _, _) = out.unwrap();
        assert!((v.as_scalar() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn paired_product_settles_to_one() {
        // (1 + 1/n)(1 − 1/(n+1)) = 1 for odd n.
        let f = |n: u64| {
            if n == 0 {
                1.0
            } else if n % 2 == 1 {
                1.0 + 1.0 / n as f64
            } else {
                1.0 - 1.0 / n as f64
            }
        };
        let (v, _) = run(Mode::Product, 1e-10, f, 1 << 16).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_type_tail_never_settles() {
        let f = |n: u64| {
            let m = (n + 2) as f64;
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            1.0 + sign / (m.sqrt() * m.ln())
        };
        assert!(run(Mode::Product, 1e-8, f, 1 << 18).is_none());
    }

    #[test]
    fn harmonic_blocks_diverge() {
        let mut t = Tracker::new(Mode::Sum, 1e-10, Element::scalar(0.0), true);
        for n in 0..256u64 {
            t.push(&Element::scalar(1.0 / (n + 1) as f64), 0.0);
        }
        assert!(matches!(t.monotone_state(), MonotoneState::Diverging(_)));
    }

    #[test]
    fn log_squared_blocks_condense() {
        let mut t = Tracker::new(Mode::Sum, 1e-10, Element::scalar(0.0), true);
        for n in 0..(1u64 << 14) {
            let m = (n + 2) as f64;
            t.push(&Element::scalar(1.0 / (m * m.ln().powi(2))), 0.0);
        }
        assert!(matches!(t.monotone_state(), MonotoneState::Condensing { .. }), "{:?}", t.monotone_state());
    }

    #[test]
    fn extrapolation_is_exact_on_polynomials() {
        let hs = [0.5, 0.25, 0.125];
        let ys: Vec<Element> = hs.iter().map(|h| Element::scalar(3.0 + 2.0 * h - h * h)).collect();
        assert!((extrapolate(&hs, &ys).as_scalar() - 3.0).abs() < 1e-14);
    }
}
