//! Tagged partitions of [a, b] and refinement-sweep reports.

use serde::Serialize;

use crate::algebra::Element;
use crate::error::{Error, Result};
use crate::transfinite::limit::extrapolate;

/// Tag placement inside each interval of a generated partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Left,
    Mid,
    Right,
}

impl Tag {
    fn place(self, x: f64, y: f64) -> f64 {
        match self {
            Tag::Left => x,
            Tag::Mid => 0.5 * (x + y),
            Tag::Right => y,
        }
    }
}

/// Points t₀ < … < t_m with tags t_{i−1} ≤ ξ_i ≤ t_i.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaggedPartition {
    pub points: Vec<f64>,
    pub tags: Vec<f64>,
}

impl TaggedPartition {
    pub fn new(points: Vec<f64>, tags: Vec<f64>) -> Result<TaggedPartition> {
        if points.len() < 2 || tags.len() != points.len() - 1 {
            return Err(Error::InvalidInput("a partition needs m ≥ 1 intervals and one tag per interval".into()));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidInput(format!("partition points not increasing at {i}")));
            }
            if !(tags[i] >= w[0] && tags[i] <= w[1]) {
                return Err(Error::InvalidInput(format!("tag {} outside [{}, {}]", tags[i], w[0], w[1])));
            }
        }
        Ok(TaggedPartition { points, tags })
    }

    pub fn from_points(points: Vec<f64>, tag: Tag) -> Result<TaggedPartition> {
        let tags = points.windows(2).map(|w| tag.place(w[0], w[1])).collect();
        TaggedPartition::new(points, tags)
    }

    /// m equal intervals; endpoints a + i(b − a)/m are exact for dyadic m on dyadic [a, b].
    pub fn uniform(a: f64, b: f64, m: usize, tag: Tag) -> TaggedPartition {
        assert!(m >= 1 && a < b);
        let mut points: Vec<f64> = (0..=m).map(|i| a + (b - a) * (i as f64 / m as f64)).collect();
        points[m] = b;
        TaggedPartition::from_points(points, tag).expect("uniform partition is valid")
    }

    /// Splits every interval at the `jumps` it contains and tags both halves
    /// with the jump point; untouched intervals keep their tags.
    pub fn split_at(&self, jumps: &[f64]) -> TaggedPartition {
        let mut points = vec![self.points[0]];
        let mut tags = Vec::new();
        for (i, w) in self.points.windows(2).enumerate() {
            let inside: Vec<f64> = jumps.iter().cloned().filter(|&s| s > w[0] && s < w[1]).collect();
            let at_end = jumps.iter().find(|&&s| s == w[0] || s == w[1]).cloned();
            if let Some(&s) = inside.first() {
                points.push(s);
                tags.push(s);
                points.push(w[1]);
                tags.push(s);
            } else {
                points.push(w[1]);
                tags.push(at_end.unwrap_or(self.tags[i]));
            }
        }
        TaggedPartition { points, tags }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// (ξ_i, t_{i−1}, t_i) in increasing order.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.points.windows(2).zip(&self.tags).map(|(w, &xi)| (xi, w[0], w[1]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    Converged { tol: f64 },
    NotConverged,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub m: usize,
    pub value: Element,
    /// ‖value_k − value_{k−1}‖; absent at the first level.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelRecord>,
    pub verdict: Verdict,
    /// Polynomial extrapolation in 1/m over the last levels.
    pub extrapolated: Element,
}

/// Levels combined by `ConvergenceReport::extrapolated`.
pub const EXTRAPOLATION_LEVELS: usize = 4;

impl ConvergenceReport {
    pub fn value(&self) -> &Element {
        &self.levels.last().expect("at least one level").value
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.delta).collect()
    }

    pub fn converged(&self) -> bool {
        matches!(self.verdict, Verdict::Converged { .. })
    }

    /// Builds a report from per-level (m, value) pairs, m increasing.
    pub fn from_levels(values: Vec<(usize, Element)>, tol: f64) -> ConvergenceReport {
        ConvergenceReport::from_levels_with(values, tol, true)
    }

    /// As `from_levels`; `need_inverse` makes convergence also require an
    /// invertible final value.
    pub fn from_levels_with(values: Vec<(usize, Element)>, tol: f64, need_inverse: bool) -> ConvergenceReport {
        let mut levels: Vec<LevelRecord> = Vec::with_capacity(values.len());
        for (k, (m, v)) in values.into_iter().enumerate() {
            let delta = levels.last().map(|p| p.value.dist(&v));
            levels.push(LevelRecord { level: k, m, value: v, delta });
        }
        let d: Vec<f64> = levels.iter().filter_map(|l| l.delta).collect();
        let last = &levels.last().expect("at least one level").value;
        let ok = d.len() >= 2 && d[d.len() - 2..].iter().all(|&x| x < tol) && (!need_inverse || last.inverse().is_ok());
        let verdict = if ok { Verdict::Converged { tol } } else { Verdict::NotConverged };
        let tail = &levels[levels.len().saturating_sub(EXTRAPOLATION_LEVELS)..];
        let hs: Vec<f64> = tail.iter().map(|l| 1.0 / l.m as f64).collect();
        let ys: Vec<Element> = tail.iter().map(|l| l.value.clone()).collect();
        // Sequences stationary up to rounding are not extrapolated.
        let noise = 16.0 * f64::EPSILON * last.norm().max(1.0);
        let stationary = d.len() >= 2 && d[d.len() - 2..].iter().all(|&x| x <= noise);
        let extrapolated = if stationary || tail.len() < 2 { last.clone() } else { extrapolate(&hs, &ys) };
        ConvergenceReport { levels, verdict, extrapolated }
    }

    /// Runs `eval(k)` for k = 0, 1, …, `max_levels` and stops once the last
    /// two deltas fall below `tol`.
    pub fn sweep(
        tol: f64,
        max_levels: usize,
        eval: impl FnMut(usize) -> Result<(usize, Element)>,
    ) -> Result<ConvergenceReport> {
        ConvergenceReport::sweep_with(tol, max_levels, true, eval)
    }

    pub fn sweep_with(
        tol: f64,
        max_levels: usize,
        need_inverse: bool,
        mut eval: impl FnMut(usize) -> Result<(usize, Element)>,
    ) -> Result<ConvergenceReport> {
        let mut vals: Vec<(usize, Element)> = Vec::new();
        let mut small = 0;
        for k in 0..=max_levels {
            let (m, v) = eval(k)?;
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            if let Some((_, p)) = vals.last() {
                small = if p.dist(&v) < tol { small + 1 } else { 0 };
            }
            vals.push((m, v));
            if small >= 2 && (!need_inverse || vals.last().unwrap().1.inverse().is_ok()) {
                break;
            }
        }
        Ok(ConvergenceReport::from_levels_with(vals, tol, need_inverse))
    }
}
