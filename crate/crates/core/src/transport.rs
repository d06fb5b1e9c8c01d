//! Haahti products A(t_m)⋯A(t_0) of projection-valued paths and parallel
//! translation along curves on surfaces in ℝ³.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraKind, Element};
use crate::error::{Error, Result};
use crate::partition::{ConvergenceReport, Tag, TaggedPartition};
use crate::stepmap::{Mapping, StepMapping};
use crate::stieltjes::{ks_partition_product, ks_step_product, KsVerdict, LimitRule, IDEMPOTENT_SAMPLES, IDEMPOTENT_TOL};

pub type Vec3 = [f64; 3];

/// Distance from a surface beyond which a point is rejected.
pub const SURFACE_TOL: f64 = 1e-9;

fn dot(u: Vec3, v: Vec3) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

fn unit(v: Vec3) -> Result<Vec3> {
    let r = dot(v, v).sqrt();
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput("zero or non-finite normal".into()));
    }
    Ok(v.map(|x| x / r))
}

/// I − n nᵀ as a 3×3 matrix; n must be a unit vector.
pub fn plane_projection(n: Vec3) -> Element {
    let mut d = vec![0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            d[3 * i + j] = if i == j { 1.0 } else { 0.0 } - n[i] * n[j];
        }
    }
    Element::from_vec(AlgebraKind::Matrix(3), d).expect("3×3 data")
}

/// m·v for a 3×3 matrix m.
pub fn apply(m: &Element, v: Vec3) -> Vec3 {
    [0, 1, 2].map(|i| (0..3).map(|j| m.entry(i, j) * v[j]).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub normal: Vec3,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "surface", rename_all = "lowercase")]
pub enum Surface {
    /// |p| = r.
    Sphere { r: f64 },
    /// x² + y² = r², axis along e_z.
    Cylinder { r: f64 },
    /// Union of planes n·p = offset; unit normals.
    Polyhedron { faces: Vec<Face> },
}

impl Surface {
    /// Normalizes face normals; rejects faces whose normal is far from unit length.
    pub fn polyhedron(faces: Vec<(Vec3, f64)>) -> Result<Surface> {
        let faces = faces
            .into_iter()
            .map(|(n, offset)| {
                let u = unit(n)?;
                if (dot(n, n).sqrt() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!("face normal {n:?} is not a unit vector")));
                }
                Ok(Face { normal: u, offset })
            })
            .collect::<Result<_>>()?;
        Ok(Surface::Polyhedron { faces })
    }

    pub fn normal(&self, p: Vec3) -> Result<Vec3> {
        match self {
            Surface::Sphere { r } => {
                let d = dot(p, p).sqrt();
                if (d - r).abs() > SURFACE_TOL {
                    return Err(Error::OffSurface(d - r));
                }
                unit(p)
            }
            Surface::Cylinder { r } => {
                let d = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if (d - r).abs() > SURFACE_TOL {
                    return Err(Error::OffSurface(d - r));
                }
                unit([p[0], p[1], 0.0])
            }
            Surface::Polyhedron { faces } => {
                let gaps = faces.iter().map(|f| (dot(f.normal, p) - f.offset).abs());
                let (i, g) = gaps.enumerate().fold((0, f64::INFINITY), |b, (i, g)| if g < b.1 { (i, g) } else { b });
                if g > SURFACE_TOL {
                    return Err(Error::OffSurface(g));
                }
                Ok(faces[i].normal)
            }
        }
    }
}

pub type Curve = Arc<dyn Fn(f64) -> Vec3 + Send + Sync>;

/// t ↦ I − n(ℓ(t)) n(ℓ(t))ᵀ on [a, b].
#[derive(Clone)]
pub struct ProjectionPath {
    pub surface: Surface,
    pub a: f64,
    pub b: f64,
    curve: Curve,
}

impl std::fmt::Debug for ProjectionPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectionPath").field("surface", &self.surface).field("a", &self.a).field("b", &self.b).finish()
    }
}

/// Points at which `projection_field` checks that the curve lies on the surface.
pub const CURVE_CHECKS: usize = 64;

pub fn projection_field(
    surface: Surface,
    curve: impl Fn(f64) -> Vec3 + Send + Sync + 'static,
    a: f64,
    b: f64,
) -> Result<ProjectionPath> {
    if !(a < b) {
        return Err(Error::InvalidInput(format!("need a < b, got [{a}, {b}]")));
    }
    let path = ProjectionPath { surface, a, b, curve: Arc::new(curve) };
    for i in 0..=CURVE_CHECKS {
        path.eval(a + (b - a) * i as f64 / CURVE_CHECKS as f64)?;
    }
    Ok(path)
}

impl ProjectionPath {
    pub fn point(&self, t: f64) -> Vec3 {
        (self.curve)(t)
    }

    /// The same path traversed from b to a over [a, b].
    pub fn reversed(&self) -> ProjectionPath {
        let c = self.curve.clone();
        let (a, b) = (self.a, self.b);
        ProjectionPath { surface: self.surface.clone(), a, b, curve: Arc::new(move |t| c(a + b - t)) }
    }
}

impl Mapping for ProjectionPath {
    fn kind(&self) -> AlgebraKind {
        AlgebraKind::Matrix(3)
    }
    fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }
    fn eval(&self, t: f64) -> Result<Element> {
        if !(t >= self.a && t <= self.b) {
            return Err(Error::OutOfInterval { t, a: self.a, b: self.b });
        }
        Ok(plane_projection(self.surface.normal(self.point(t))?))
    }
}

/// Circle of polar angle θ on the sphere of radius r, one turn over [0, 1].
pub fn latitude(r: f64, theta: f64) -> Result<ProjectionPath> {
    let (s, c) = theta.sin_cos();
    projection_field(
        Surface::Sphere { r },
        move |t| {
            let (y, x) = (2.0 * std::f64::consts::PI * t).sin_cos();
            [r * s * x, r * s * y, r * c]
        },
        0.0,
        1.0,
    )
}

/// One turn of a helix of the given pitch on the cylinder of radius r.
pub fn helix(r: f64, pitch: f64) -> Result<ProjectionPath> {
    projection_field(
        Surface::Cylinder { r },
        move |t| {
            let (y, x) = (2.0 * std::f64::consts::PI * t).sin_cos();
            [r * x, r * y, pitch * t]
        },
        0.0,
        1.0,
    )
}

/// A(t_m)·A(t_{m−1})⋯A(t_0) over all partition points.
pub fn haahti_product(a: &dyn Mapping, points: &[f64]) -> Result<Element> {
    let mut acc = a.eval(points[0])?;
    for &t in &points[1..] {
        acc = &a.eval(t)? * &acc;
    }
    Ok(acc)
}

/// Haahti products on 2^k equal intervals, k = 0, 1, …
pub fn haahti_refinement(a: &dyn Mapping, tol: f64, max_levels: usize) -> Result<ConvergenceReport> {
    let (lo, hi) = a.interval();
    ConvergenceReport::sweep_with(tol, max_levels, false, |k| {
        let m = 1usize << k;
        Ok((m, haahti_product(a, &TaggedPartition::uniform(lo, hi, m, Tag::Left).points)?))
    })
}

/// Step of the central difference for P′ in the ODE oracle.
pub const ODE_FD_STEP: f64 = 1e-5;

fn derivative(a: &dyn Mapping, t: f64) -> Result<Element> {
    let (lo, hi) = a.interval();
    let h = ODE_FD_STEP;
    if t - h >= lo && t + h <= hi {
        return Ok((&a.eval(t + h)? - &a.eval(t - h)?).scale(0.5 / h));
    }
    // Second-order one-sided differences at the ends.
    let s = if t - h < lo { 1.0 } else { -1.0 };
    let d = &(&a.eval(t + s * h)?.scale(4.0) - &a.eval(t)?.scale(3.0)) - &a.eval(t + 2.0 * s * h)?;
    Ok(d.scale(s * 0.5 / h))
}

/// T(b) for T′ = P′T, T(a) = P(a), by classical RK4 with `steps` steps.
pub fn transport_ode_oracle(a: &dyn Mapping, steps: usize) -> Result<Element> {
    let (lo, hi) = a.interval();
    let dt = (hi - lo) / steps as f64;
    let mut t_mat = a.eval(lo)?;
    for i in 0..steps {
        let t = lo + dt * i as f64;
        let (p0, pm, p1) = (derivative(a, t)?, derivative(a, t + 0.5 * dt)?, derivative(a, (t + dt).min(hi))?);
        let k1 = &p0 * &t_mat;
        let k2 = &pm * &(&t_mat + &k1.scale(0.5 * dt));
        let k3 = &pm * &(&t_mat + &k2.scale(0.5 * dt));
        let k4 = &p1 * &(&t_mat + &k3.scale(dt));
        let inc = &(&k1 + &k2.scale(2.0)) + &(&k3.scale(2.0) + &k4);
        t_mat = &t_mat + &inc.scale(dt / 6.0);
    }
    Ok(t_mat)
}

/// |⟨Tu, Tv⟩ − ⟨u, v⟩| for the transport T from a Haahti refinement.
pub fn scalar_invariance_check(a: &dyn Mapping, u: Vec3, v: Vec3, tol: f64, max_levels: usize) -> Result<f64> {
    let t = haahti_refinement(a, tol, max_levels)?.extrapolated;
    Ok((dot(apply(&t, u), apply(&t, v)) - dot(u, v)).abs())
}

/// Operator norm of m restricted to span{u, v}, u and v orthonormal.
pub fn restricted_norm(m: &Element, u: Vec3, v: Vec3) -> f64 {
    let (mu, mv) = (apply(m, u), apply(m, v));
    let (p, q, r) = (dot(mu, mu), dot(mu, mv), dot(mv, mv));
    // Largest eigenvalue of the Gram matrix [[p, q], [q, r]].
    let h = 0.5 * (p + r);
    (h + (0.25 * (p - r) * (p - r) + q * q).sqrt()).sqrt()
}

fn check_idempotent(p: &Element) -> Result<()> {
    let d = (p * p).dist(p);
    if d > IDEMPOTENT_TOL * p.norm().max(1.0) {
        return Err(Error::NotIdempotent(d));
    }
    Ok(())
}

/// P_m⋯P_0 for projections listed in traversal order.
pub fn polyhedral_transport(projections: &[Element]) -> Result<Element> {
    let first = projections.first().ok_or_else(|| Error::InvalidInput("no projections".into()))?;
    let mut acc = Element::identity(first.kind());
    for p in projections {
        check_idempotent(p)?;
        acc = p.try_mul(&acc)?;
    }
    Ok(acc)
}

/// Projections onto the faces x = 1, y = 1, z = 1 of the cube [0, 1]³ around
/// the corner (1, 1, 1), in traversal order.
pub fn cube_corner() -> Vec<Element> {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].map(plane_projection).to_vec()
}

/// Projections onto the three faces of a regular tetrahedron meeting at a vertex.
pub fn tetrahedron_corner() -> Vec<Element> {
    let s = 1.0 / 3f64.sqrt();
    [[s, s, -s], [s, -s, s], [-s, s, s]].map(plane_projection).to_vec()
}

/// A(t) = e¹ + e^{n+2} for 1 − 2^{−n} < t ≤ 1 − 2^{−n−1}, A(0) = A(1) = e¹,
/// in ℓ^∞ truncated to its first `dim` coordinates (0-based e¹ is index 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ex711 {
    pub dim: usize,
}

impl Ex711 {
    /// The n with 2^{−n−1} ≤ 1 − t < 2^{−n}, for 0 < t < 1.
    pub fn block(t: f64) -> u32 {
        let r = 1.0 - t;
        let mut n = 0;
        while r < 0.5f64.powi(n as i32 + 1) {
            n += 1;
        }
        n
    }
}

impl Mapping for Ex711 {
    fn kind(&self) -> AlgebraKind {
        AlgebraKind::Diag(self.dim)
    }
    fn interval(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn eval(&self, t: f64) -> Result<Element> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfInterval { t, a: 0.0, b: 1.0 });
        }
        let e1 = Element::diag_unit(self.dim, 0);
        if t == 0.0 || t == 1.0 {
            return Ok(e1);
        }
        let k = Ex711::block(t) as usize + 1;
        if k >= self.dim {
            return Err(Error::InvalidInput(format!("truncation to {} coordinates cannot hold e^{}", self.dim, k + 1)));
        }
        Ok(&e1 + &Element::diag_unit(self.dim, k))
    }
}

/// ‖P(D₁) − P(D₂)‖ for the Stieltjes partition products of two partitions.
pub fn stieltjes_gap(a: &dyn Mapping, d1: &[f64], d2: &[f64]) -> Result<f64> {
    Ok(ks_partition_product(a, d1)?.dist(&ks_partition_product(a, d2)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HaahtiComparison {
    pub haahti: Element,
    /// ∏(I + dA)·A(a).
    pub stieltjes: Element,
    pub distance: f64,
}

/// Haahti refinement against (∏(I + dA))·A(a) for a projection-valued step mapping.
pub fn haahti_vs_stieltjes(s: &StepMapping, tol: f64, budget: u64, max_levels: usize) -> Result<HaahtiComparison> {
    let values = s.values_family();
    for i in values.sample_indices(IDEMPOTENT_SAMPLES) {
        check_idempotent(&values.term(&i))?;
    }
    let ks = ks_step_product(s, tol, budget, LimitRule::Continuous)?;
    if ks.verdict == KsVerdict::NotInvertible {
        return Err(Error::NotInvertibleJump);
    }
    let stieltjes = ks.value() * &s.z(&s.set.min_index());
    let haahti = haahti_refinement(s, tol, max_levels)?.extrapolated;
    let distance = haahti.dist(&stieltjes);
    Ok(HaahtiComparison { haahti, stieltjes, distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_path() -> ProjectionPath {
        projection_field(Surface::Cylinder { r: 1.0 }, |t| [1.0, 0.0, t], 0.0, 1.0).unwrap()
    }

    #[test]
    fn projection_field_cases() {
        let s = Surface::Sphere { r: 2.0 };
        assert_eq!(plane_projection(s.normal([0.0, 0.0, 2.0]).unwrap()), Element::matrix(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]).unwrap());
        let eq = plane_projection(s.normal([2.0, 0.0, 0.0]).unwrap());
        assert_eq!(eq, Element::matrix(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]).unwrap());
        let p = const_path();
        assert_eq!(p.eval(0.0).unwrap(), p.eval(0.7).unwrap());
        assert!(matches!(s.normal([1.0, 0.0, 0.0]), Err(Error::OffSurface(_))));
        assert!(projection_field(s, |t| [1.0 + t, 0.0, 0.0], 0.0, 1.0).is_err());
        assert!(Surface::polyhedron(vec![([2.0, 0.0, 0.0], 1.0)]).is_err());
    }

    #[test]
    fn sampled_projections_are_idempotent() {
        let p = latitude(1.5, 0.9).unwrap();
        for i in 0..=100 {
            let m = p.eval(i as f64 / 100.0).unwrap();
            assert!((&m * &m).dist(&m) < 1e-12);
        }
    }

    #[test]
    fn constant_projection_products() {
        let p = const_path();
        let want = p.eval(0.0).unwrap();
        for m in [1usize, 3, 17] {
            let pts = TaggedPartition::uniform(0.0, 1.0, m, Tag::Left).points;
            assert!(haahti_product(&p, &pts).unwrap().dist(&want) < 1e-15);
        }
        let r = haahti_refinement(&p, 1e-12, 10).unwrap();
        assert!(r.converged());
        assert!(transport_ode_oracle(&p, 50).unwrap().dist(&want) < 1e-12);
        assert!(scalar_invariance_check(&p, [0.0, 1.0, 0.0], [0.0, 0.6, 0.8], 1e-12, 6).unwrap() < 1e-15);
    }

    #[test]
    fn alternating_planes_decay() {
        let th: f64 = 0.4;
        let p0 = plane_projection([0.0, 0.0, 1.0]);
        let p1 = plane_projection([0.0, th.sin(), th.cos()]);
        // Both planes contain e_x; on the orthogonal direction each pass scales by cos θ.
        let mut chain = Vec::new();
        for k in 0..6 {
            chain.push(if k % 2 == 0 { p0.clone() } else { p1.clone() });
        }
        let t = polyhedral_transport(&chain).unwrap();
        let v = apply(&t, [0.0, 1.0, 0.0]);
        let len = dot(v, v).sqrt();
        assert!((len - th.cos().powi(5)).abs() < 1e-14);
        assert_eq!(apply(&t, [1.0, 0.0, 0.0]), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn polyhedral_cases() {
        let c = cube_corner();
        assert_eq!(polyhedral_transport(&c[..1]).unwrap(), c[0]);
        assert_eq!(polyhedral_transport(&c[..2]).unwrap(), &c[1] * &c[0]);
        let direct = &(&c[2] * &c[1]) * &c[0];
        assert_eq!(polyhedral_transport(&c).unwrap(), direct);
        assert!(matches!(polyhedral_transport(&[Element::identity(AlgebraKind::Matrix(3)).scale(2.0)]), Err(Error::NotIdempotent(_))));
        // Orthogonal face normals: the cube-corner projections commute.
        let rev: Vec<Element> = c.iter().rev().cloned().collect();
        assert!(polyhedral_transport(&rev).unwrap().dist(&direct) < 1e-15);
        let t = tetrahedron_corner();
        let rev: Vec<Element> = t.iter().rev().cloned().collect();
        assert!(polyhedral_transport(&rev).unwrap().dist(&polyhedral_transport(&t).unwrap()) > 0.01);
    }

    #[test]
    fn ex711_haahti_is_e1() {
        let e1 = Element::diag_unit(40, 0);
        let a = Ex711 { dim: 40 };
        let r = haahti_refinement(&a, 1e-14, 12).unwrap();
        assert!(r.levels.iter().all(|l| l.value == e1));
        let pts = vec![0.0, 0.1, 0.3, 0.5, 0.6, 0.9, 0.95, 0.999, 1.0];
        assert_eq!(haahti_product(&a, &pts).unwrap(), e1);
        assert!(Ex711 { dim: 4 }.eval(0.99).is_err());
        assert_eq!(Ex711::block(0.5), 0);
        assert_eq!(Ex711::block(0.5000001), 1);
        assert_eq!(Ex711::block(0.75), 1);
    }

    #[test]
    fn ex711_divergence_witness() {
        let a = Ex711 { dim: 8 };
        assert_eq!(stieltjes_gap(&a, &[0.0, 0.5, 1.0], &[0.0, 0.75, 1.0]).unwrap(), 1.0);
        let p = ks_partition_product(&a, &[0.0, 0.25, 0.6, 0.8, 1.0]).unwrap();
        // Zero exactly at the coordinates e^{n_i} visited.
        assert_eq!(p.data(), &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn latitude_matches_ode() {
        let p = latitude(1.0, 1.0).unwrap();
        let r = haahti_refinement(&p, 1e-9, 12).unwrap();
        let ode = transport_ode_oracle(&p, 2000).unwrap();
        assert!(r.extrapolated.dist(&ode) < 1e-4, "{}", r.extrapolated.dist(&ode));
        // The transport rotates the tangent plane at the start by 2π cos θ.
        let n = p.surface.normal(p.point(0.0)).unwrap();
        let (u, v) = ([0.0, 1.0, 0.0], [n[2], 0.0, -n[0]]);
        let tu = apply(&ode, u);
        let ang = 2.0 * std::f64::consts::PI * 1f64.cos();
        assert!((dot(tu, u) - ang.cos()).abs() < 1e-6);
        assert!((dot(tu, v).abs() - ang.sin().abs()).abs() < 1e-6);
    }

    #[test]
    fn reverse_transport_contracts() {
        let p = helix(1.0, 0.5).unwrap();
        let f = haahti_refinement(&p, 1e-9, 8).unwrap().extrapolated;
        let b = haahti_refinement(&p.reversed(), 1e-9, 8).unwrap().extrapolated;
        let n = p.surface.normal(p.point(0.0)).unwrap();
        assert_eq!(n, [1.0, 0.0, 0.0]);
        let pts = TaggedPartition::uniform(0.0, 1.0, 64, Tag::Left).points;
        let exact = &haahti_product(&p.reversed(), &pts).unwrap() * &haahti_product(&p, &pts).unwrap();
        assert!(restricted_norm(&exact, [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]) <= 1.0 + 1e-10);
        assert!(restricted_norm(&(&b * &f), [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]) <= 1.0 + 1e-6);
    }

    #[test]
    fn haahti_and_stieltjes_agree_on_chains() {
        let c = tetrahedron_corner();
        let s = StepMapping::finite(vec![0.0, 0.5, 1.0], c.clone()).unwrap();
        let r = haahti_vs_stieltjes(&s, 1e-12, 100, 6).unwrap();
        assert!(r.distance < 1e-10, "{r:?}");
        assert!(r.haahti.dist(&polyhedral_transport(&c).unwrap()) < 1e-12);
        let q = c[0].clone();
        let s = StepMapping::finite(vec![0.0, 0.5, 1.0], vec![q.clone(), q.clone(), q.clone()]).unwrap();
        let r = haahti_vs_stieltjes(&s, 1e-12, 100, 4).unwrap();
        assert!(r.distance < 1e-14 && r.haahti.dist(&q) < 1e-14);
    }
}
