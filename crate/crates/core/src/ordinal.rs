//! Countable well-ordered subsets of [a, b] with computable successor and
//! limit structure.
//!
//! A `Ladder` is the set {b − 2^{−n}(b − a) : n ≥ 0} ∪ {b}. A `Tower` of
//! depth m nests ladders m times: each gap of the depth-(m−1) tower is
//! filled with a ladder. Members below the top are addressed by m + 1
//! natural coordinates, ordered lexicographically.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WellOrderedSet {
    /// Strictly increasing points; the first is a, the last is the top b.
    Finite { points: Vec<f64> },
    Ladder { a: f64, b: f64 },
    Tower { m: usize, a: f64, b: f64 },
}

/// Position of a member: coordinate tuple below the top, or the top itself.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrdinalIndex {
    pub coords: Vec<u64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub top: bool,
}

impl OrdinalIndex {
    pub fn new(coords: Vec<u64>) -> OrdinalIndex {
        OrdinalIndex { coords, top: false }
    }

    pub fn top() -> OrdinalIndex {
        OrdinalIndex { coords: Vec::new(), top: true }
    }

    pub fn is_top(&self) -> bool {
        self.top
    }

    /// Last coordinate, the position inside the innermost ladder.
    pub fn last(&self) -> u64 {
        *self.coords.last().unwrap_or(&0)
    }
}

impl PartialOrd for OrdinalIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdinalIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.top, other.top) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => self.coords.cmp(&other.coords),
        }
    }
}

impl From<Vec<u64>> for OrdinalIndex {
    fn from(c: Vec<u64>) -> Self {
        OrdinalIndex::new(c)
    }
}

/// Lower end and width of the innermost cell reached by `coords`.
fn descend(a: f64, b: f64, coords: &[u64]) -> (f64, f64) {
    let mut lo = a;
    let mut w = b - a;
    for &n in coords {
        let n = n.min(2000) as i32;
        lo += w * (1.0 - 2f64.powi(-n));
        w *= 2f64.powi(-n - 1);
    }
    (lo, w)
}

impl WellOrderedSet {
    pub fn ladder(a: f64, b: f64) -> WellOrderedSet {
        WellOrderedSet::Ladder { a, b }
    }

    pub fn tower(m: usize, a: f64, b: f64) -> WellOrderedSet {
        WellOrderedSet::Tower { m, a, b }
    }

    pub fn finite(points: Vec<f64>) -> Result<WellOrderedSet> {
        let s = WellOrderedSet::Finite { points };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WellOrderedSet::Finite { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidSet("need at least the points a and b".into()));
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return Err(Error::InvalidSet("non-finite point".into()));
                }
                if points.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSet("points must be strictly increasing".into()));
                }
                Ok(())
            }
            WellOrderedSet::Ladder { a, b } | WellOrderedSet::Tower { a, b, .. } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::InvalidSet(format!("need a < b, got [{a}, {b}]")));
                }
                Ok(())
            }
        }
    }

    pub fn a(&self) -> f64 {
        match self {
            WellOrderedSet::Finite { points } => points[0],
            WellOrderedSet::Ladder { a, .. } | WellOrderedSet::Tower { a, .. } => *a,
        }
    }

    pub fn b(&self) -> f64 {
        match self {
            WellOrderedSet::Finite { points } => *points.last().unwrap(),
            WellOrderedSet::Ladder { b, .. } | WellOrderedSet::Tower { b, .. } => *b,
        }
    }

    /// Number of coordinates of an index below the top.
    pub fn depth(&self) -> usize {
        match self {
            WellOrderedSet::Finite { .. } | WellOrderedSet::Ladder { .. } => 1,
            WellOrderedSet::Tower { m, .. } => m + 1,
        }
    }

    pub fn is_finite_set(&self) -> bool {
        matches!(self, WellOrderedSet::Finite { .. })
    }

    /// Members strictly below the top of a finite set.
    fn finite_len(&self) -> Option<u64> {
        match self {
            WellOrderedSet::Finite { points } => Some(points.len() as u64 - 1),
            _ => None,
        }
    }

    pub fn min_index(&self) -> OrdinalIndex {
        OrdinalIndex::new(vec![0; self.depth()])
    }

    fn check_index(&self, idx: &OrdinalIndex) -> Result<()> {
        if idx.top {
            return Ok(());
        }
        if idx.coords.len() != self.depth() {
            return Err(Error::InvalidInput(format!(
                "index has {} coordinates, set needs {}",
                idx.coords.len(),
                self.depth()
            )));
        }
        if let Some(n) = self.finite_len() {
            if idx.coords[0] >= n {
                return Err(Error::InvalidInput("finite index past the top".into()));
            }
        }
        Ok(())
    }

    /// The real number a member denotes. Fails with `Precision` when the
    /// member cannot be told apart from its successor in f64.
    pub fn value(&self, idx: &OrdinalIndex) -> Result<f64> {
        self.check_index(idx)?;
        if idx.top {
            return Ok(self.b());
        }
        match self {
            WellOrderedSet::Finite { points } => Ok(points[idx.coords[0] as usize]),
            _ => {
                let (lo, w) = descend(self.a(), self.b(), &idx.coords);
                if lo + w == lo || w == 0.0 {
                    return Err(Error::Precision);
                }
                Ok(lo)
            }
        }
    }

    /// S(α) − α, exact in binary even where neighbouring values collide.
    pub fn gap(&self, idx: &OrdinalIndex) -> Result<f64> {
        self.check_index(idx)?;
        if idx.top {
            return Err(Error::NoSuccessor);
        }
        match self {
            WellOrderedSet::Finite { points } => {
                let i = idx.coords[0] as usize;
                Ok(points[i + 1] - points[i])
            }
            _ => {
                let (_, w) = descend(self.a(), self.b(), &idx.coords);
                if w == 0.0 {
                    return Err(Error::Precision);
                }
                Ok(w)
            }
        }
    }

    pub fn successor(&self, idx: &OrdinalIndex) -> Result<OrdinalIndex> {
        self.check_index(idx)?;
        if idx.top {
            return Err(Error::NoSuccessor);
        }
        let mut next = idx.clone();
        *next.coords.last_mut().unwrap() += 1;
        if let Some(n) = self.finite_len() {
            if next.coords[0] == n {
                return Ok(OrdinalIndex::top());
            }
        }
        Ok(next)
    }

    /// The member whose successor is `idx`, if `idx` is a successor.
    pub fn predecessor(&self, idx: &OrdinalIndex) -> Option<OrdinalIndex> {
        if idx.top {
            return self.finite_len().map(|n| OrdinalIndex::new(vec![n - 1]));
        }
        if idx.last() == 0 {
            return None;
        }
        let mut p = idx.clone();
        *p.coords.last_mut().unwrap() -= 1;
        Some(p)
    }

    /// A limit element is neither the minimum nor a successor.
    pub fn is_limit(&self, idx: &OrdinalIndex) -> bool {
        if idx.top {
            return !self.is_finite_set();
        }
        idx.last() == 0 && idx.coords.iter().any(|&c| c > 0)
    }

    /// The n-th member of a canonical increasing sequence converging to the
    /// limit element `idx` from below.
    pub fn approach(&self, idx: &OrdinalIndex, n: u64) -> Result<OrdinalIndex> {
        if !self.is_limit(idx) {
            return Err(Error::NotLimit);
        }
        let d = self.depth();
        if idx.top {
            let mut c = vec![0; d];
            c[0] = n;
            return Ok(OrdinalIndex::new(c));
        }
        let j = idx.coords.iter().rposition(|&c| c > 0).unwrap();
        let mut c = idx.coords.clone();
        c[j] -= 1;
        c[j + 1] = n;
        Ok(OrdinalIndex::new(c))
    }

    /// The step [α, S(α)) containing t, or the top when t = b.
    pub fn locate(&self, t: f64) -> Result<OrdinalIndex> {
        let (a, b) = (self.a(), self.b());
        if !(t >= a && t <= b) {
            return Err(Error::OutOfInterval { t, a, b });
        }
        if t == b {
            return Ok(OrdinalIndex::top());
        }
        match self {
            WellOrderedSet::Finite { points } => {
                let i = points.partition_point(|&p| p <= t) - 1;
                Ok(OrdinalIndex::new(vec![i as u64]))
            }
            _ => {
                let mut lo = a;
                let mut w = b - a;
                let mut coords = Vec::with_capacity(self.depth());
                for _ in 0..self.depth() {
                    let u = (t - lo) / w;
                    let mut n = if u <= 0.0 { 0 } else { (-(1.0 - u).log2()).floor().max(0.0) as i64 };
                    // Correct the rounding of the logarithm against the exact cell edges.
                    loop {
                        let left = lo + w * (1.0 - 2f64.powi(-(n as i32)));
                        if n > 0 && t < left {
                            n -= 1;
                            continue;
                        }
                        let right = lo + w * (1.0 - 2f64.powi(-(n as i32) - 1));
                        if t >= right {
                            if right == left {
                                return Err(Error::Precision);
                            }
                            n += 1;
                            continue;
                        }
                        break;
                    }
                    lo += w * (1.0 - 2f64.powi(-(n as i32)));
                    w *= 2f64.powi(-(n as i32) - 1);
                    if lo + w == lo {
                        return Err(Error::Precision);
                    }
                    coords.push(n as u64);
                }
                Ok(OrdinalIndex::new(coords))
            }
        }
    }

    /// Members below `cutoff` in increasing order, at most `budget` of them.
    /// The flag reports whether the listing stopped before the cutoff.
    pub fn enumerate_prefix(&self, cutoff: f64, budget: usize) -> (Vec<OrdinalIndex>, bool) {
        let mut out = Vec::new();
        let mut idx = self.min_index();
        loop {
            let v = match self.value(&idx) {
                Ok(v) => v,
                Err(_) => return (out, true),
            };
            if v >= cutoff {
                return (out, false);
            }
            if out.len() == budget {
                return (out, true);
            }
            out.push(idx.clone());
            if idx.top {
                return (out, false);
            }
            idx = match self.successor(&idx) {
                Ok(s) => s,
                Err(_) => return (out, true),
            };
        }
    }

    /// The set restricted to [c, b] where c is the k-th point of the
    /// outermost ladder; it has the same shape on the shorter interval.
    pub fn tail_from(&self, k: u64) -> Result<WellOrderedSet> {
        match self {
            WellOrderedSet::Finite { points } => {
                let k = k as usize;
                if k + 1 >= points.len() {
                    return Err(Error::InvalidInput("split point at or past the top".into()));
                }
                WellOrderedSet::finite(points[k..].to_vec())
            }
            WellOrderedSet::Ladder { a, b } => {
                Ok(WellOrderedSet::Ladder { a: b - 2f64.powi(-(k as i32)) * (b - a), b: *b })
            }
            WellOrderedSet::Tower { m, a, b } => Ok(WellOrderedSet::Tower {
                m: *m,
                a: b - 2f64.powi(-(k as i32)) * (b - a),
                b: *b,
            }),
        }
    }
}
