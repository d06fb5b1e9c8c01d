use std::path::Path;
use std::sync::Arc;

use serde_json::{json, to_value, Value};
use transprod::gode::{check_v_conditions, gode_sweep, ResidualVerdict};
use transprod::prodint::{riemann_product_integral, step_product_integral};
use transprod::stepmap::catalog::{sqrtcos, sqrtcos_derivative, CatalogEntry};
use transprod::stepmap::input::{resolve, InputSpec};
use transprod::stieltjes::{
    harmonic_partition, idempotent_identity, ks_step_product, p_variation_ladder, p_variation_probe, rs_refinement,
    scalar_rs_conditions, sqrtcos_lower_limits, substitution_check, KsVerdict, PVerdict,
};
use transprod::transfinite::{transfinite_product, transfinite_sum};
use transprod::transport::{
    apply, cube_corner, haahti_refinement, helix, latitude, polyhedral_transport, scalar_invariance_check,
    tetrahedron_corner, transport_ode_oracle, ProjectionPath, Vec3,
};
use transprod::{LimitRule, Mapping, StepMapping, Tag, VForm, VFunction};

use crate::args::{Common, FormArg, Mode, RuleArg, TagArg};
use crate::error::CliError;
use crate::output::Outcome;

type PathBuilder = fn(f64, f64) -> transprod::Result<ProjectionPath>;

/// Steps of the RK4 oracle behind transport reports.
pub const ODE_STEPS: usize = 2000;

/// Probe points handed to the V-condition check.
pub const V_PROBES: usize = 8;

fn ser<T: serde::Serialize>(x: &T) -> Result<Value, CliError> {
    to_value(x).map_err(CliError::json)
}

/// A JSON file, an inline JSON description, or a catalog name.
pub fn load(input: &str) -> Result<CatalogEntry, CliError> {
    let p = Path::new(input);
    if p.is_file() {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::io(format!("{input}: {e}")))?;
        return Ok(InputSpec::from_json(&text)?.build()?);
    }
    if input.ends_with(".json") {
        return Err(CliError::io(format!("{input}: no such file")));
    }
    Ok(resolve(input)?)
}

fn as_step(entry: CatalogEntry, what: &str) -> Result<StepMapping, CliError> {
    match entry {
        CatalogEntry::Step(s) => Ok(s),
        _ => Err(CliError::new("input-kind", format!("{what} needs a step mapping"))),
    }
}

pub fn as_mapping(entry: CatalogEntry, what: &str) -> Result<Arc<dyn Mapping>, CliError> {
    match entry {
        CatalogEntry::Step(s) => Ok(Arc::new(s)),
        CatalogEntry::Regulated(r) => Ok(Arc::new(r)),
        CatalogEntry::Family(_) => Err(CliError::new("input-kind", format!("{what} needs a mapping, not a family"))),
    }
}

pub fn sum(input: &str, c: &Common) -> Result<Outcome, CliError> {
    let r = match load(input)? {
        CatalogEntry::Family(f) => transfinite_sum(&f, c.tol, c.budget),
        // ∫A for a step mapping is the sum of its gap-weighted values.
        CatalogEntry::Step(s) => transfinite_sum(&s.gap_weighted(), c.tol, c.budget),
        CatalogEntry::Regulated(_) => return Err(CliError::new("input-kind", "sum needs a family or a step mapping")),
    };
    Ok(Outcome::new(ser(&r)?, r.truncated))
}

pub fn prod(input: &str, c: &Common) -> Result<Outcome, CliError> {
    let r = match load(input)? {
        CatalogEntry::Family(f) => transfinite_product(&f, c.tol, c.budget),
        CatalogEntry::Step(s) => step_product_integral(&s, c.tol, c.budget),
        CatalogEntry::Regulated(_) => return Err(CliError::new("input-kind", "prod needs a family or a step mapping")),
    };
    Ok(Outcome::new(ser(&r)?, r.truncated))
}

pub fn prodint(input: &str, tag: TagArg, c: &Common) -> Result<Outcome, CliError> {
    let a = as_mapping(load(input)?, "prodint")?;
    let tag = match tag {
        TagArg::Left => Tag::Left,
        TagArg::Right => Tag::Right,
        TagArg::Mid => Tag::Mid,
    };
    let r = riemann_product_integral(&*a, c.tol, c.levels as usize, tag)?;
    Ok(Outcome::new(ser(&r)?, !r.converged()).with_table(r))
}

pub fn stieltjes(input: &str, mode: Mode, p: f64, eps: f64, rule: RuleArg, c: &Common) -> Result<Outcome, CliError> {
    let levels = c.levels as usize;
    if mode == Mode::Subst {
        // The only catalog entry with a known derivative.
        if input.trim() != "sqrtcos" {
            return Err(CliError::new("input-kind", "subst needs a primitive with a known derivative; only sqrtcos has one"));
        }
        let r = substitution_check(&sqrtcos_derivative, &sqrtcos(), c.tol, &sqrtcos_lower_limits(3), levels)?;
        let gap = r.stieltjes.dist(&r.lebesgue);
        let negative = gap > c.tol * r.lebesgue.norm().max(1.0);
        let mut v = ser(&r)?;
        v["distance"] = json!(gap);
        return Ok(Outcome::new(v, negative));
    }
    let entry = load(input)?;
    match mode {
        Mode::Ks => {
            let rule = match rule {
                RuleArg::Continuous => LimitRule::Continuous,
                RuleArg::General => LimitRule::General,
            };
            let r = ks_step_product(&as_step(entry, "ks")?, c.tol, c.budget, rule)?;
            Ok(Outcome::new(ser(&r)?, r.verdict != KsVerdict::Multipliable))
        }
        Mode::Rs => {
            let r = rs_refinement(&*as_mapping(entry, "rs")?, c.tol, levels)?;
            Ok(Outcome::new(ser(&r)?, !r.converged()).with_table(r))
        }
        Mode::Pvar => {
            let r = match entry {
                CatalogEntry::Step(s) => p_variation_ladder(&s, p, levels)?,
                other => {
                    let a = as_mapping(other, "pvar")?;
                    let parts: Vec<Vec<f64>> = (1..=levels.min(20)).map(|k| harmonic_partition(1 << k)).collect();
                    p_variation_probe(&*a, p, &parts)?
                }
            };
            Ok(Outcome::new(ser(&r)?, r.verdict == PVerdict::GrowthWitness))
        }
        Mode::Scalar => {
            let r = scalar_rs_conditions(&as_step(entry, "scalar")?, eps, c.tol, c.budget)?;
            let mut v = ser(&r)?;
            v["all_pass"] = json!(r.all_pass());
            Ok(Outcome::new(v, !r.all_pass()))
        }
        Mode::Idem => {
            let r = idempotent_identity(&as_step(entry, "idem")?, c.tol, c.budget)?;
            Ok(Outcome::new(ser(&r)?, r.distance > c.tol))
        }
        Mode::Subst => unreachable!(),
    }
}

fn parse_param(arg: &str, key: &str) -> Result<Option<f64>, CliError> {
    match arg.split_once(':') {
        Some((k, v)) if k == key => {
            v.parse().map(Some).map_err(|_| CliError::usage(format!("{arg}: {v} is not a number")))
        }
        None if arg == key => Ok(None),
        _ => Err(CliError::usage(format!("expected {key} or {key}:VALUE, got {arg}"))),
    }
}

/// Unit tangent at the start: the coordinate axis with the largest projection.
fn start_tangent(p: &ProjectionPath) -> Result<Vec3, CliError> {
    let m = p.eval(p.a)?;
    let best = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        .map(|e| apply(&m, e))
        .into_iter()
        .max_by(|u, v| norm(u).total_cmp(&norm(v)))
        .unwrap();
    let n = norm(&best);
    Ok(best.map(|x| x / n))
}

fn norm(v: &Vec3) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn transport(surface: Option<&str>, path: &str, c: &Common) -> Result<Outcome, CliError> {
    let corner = match path {
        "cube-corner" => Some(cube_corner()),
        "tetrahedron-corner" => Some(tetrahedron_corner()),
        _ => None,
    };
    if let Some(faces) = corner {
        if surface.is_some() {
            return Err(CliError::usage("corner paths carry their own faces; drop --surface"));
        }
        let m = polyhedral_transport(&faces)?;
        return Ok(Outcome::new(json!({"path": path, "matrix": ser(&m)?}), false));
    }
    let (kind, param) = path.split_once(':').unwrap_or((path, ""));
    let (want_surface, p): (&str, PathBuilder) = match kind {
        "latitude" => ("sphere", latitude),
        "helix" => ("cylinder", helix),
        _ => return Err(CliError::usage(format!("unknown path {path}"))),
    };
    let param: f64 = param.parse().map_err(|_| CliError::usage(format!("{path}: expected {kind}:NUMBER")))?;
    let r = match surface {
        None => 1.0,
        Some(s) => parse_param(s, want_surface)?.unwrap_or(1.0),
    };
    let p = p(r, param)?;
    let report = haahti_refinement(&p, c.tol, c.levels as usize)?;
    let oracle = transport_ode_oracle(&p, ODE_STEPS)?;
    let u = start_tangent(&p)?;
    let invariance = scalar_invariance_check(&p, u, u, c.tol, c.levels as usize)?;
    let v = json!({
        "surface": ser(&p.surface)?,
        "path": path,
        "matrix": ser(&report.extrapolated)?,
        "verdict": ser(&report.verdict)?,
        "levels": report.levels.len(),
        "ode_oracle": ser(&oracle)?,
        "oracle_distance": report.extrapolated.dist(&oracle),
        "invariance": invariance,
    });
    Ok(Outcome::new(v, !report.converged()).with_table(report))
}

pub fn gode(input: &str, form: FormArg, c: &Common) -> Result<Outcome, CliError> {
    let a = as_mapping(load(input)?, "gode")?;
    let form = match form {
        FormArg::Linear => VForm::Linear,
        FormArg::Stieltjes => VForm::Stieltjes,
        FormArg::Vdef => VForm::Vdef,
    };
    let (lo, hi) = a.interval();
    let v = VFunction::from_mapping(a, form)?;
    let probes: Vec<f64> = (0..=V_PROBES).map(|i| lo + (hi - lo) * i as f64 / V_PROBES as f64).collect();
    let conditions = check_v_conditions(&v, &probes, c.tol)?;
    let sweep = gode_sweep(&v, c.tol, c.levels as usize, &[])?;
    let negative =
        !conditions.all_pass() || !sweep.convergence.converged() || sweep.residuals.verdict == ResidualVerdict::NotDecaying;
    let out = json!({
        "form": ser(&form)?,
        "v_conditions": ser(&conditions)?,
        "convergence": ser(&sweep.convergence)?,
        "residuals": ser(&sweep.residuals)?,
    });
    Ok(Outcome::new(out, negative).with_table(sweep.convergence))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_arguments() {
        assert_eq!(parse_param("sphere:2.5", "sphere").unwrap(), Some(2.5));
        assert_eq!(parse_param("sphere", "sphere").unwrap(), None);
        assert!(parse_param("cylinder:1", "sphere").is_err());
        assert!(parse_param("sphere:x", "sphere").is_err());
    }

    #[test]
    fn loader_distinguishes_inputs() {
        assert!(matches!(load("ex201"), Ok(CatalogEntry::Family(_))));
        assert!(matches!(load("sqrtcos"), Ok(CatalogEntry::Regulated(_))));
        assert_eq!(load("absent.json").err().unwrap().code, "io");
        assert_eq!(load("absent").err().unwrap().code, "unknown-catalog");
    }

    #[test]
    fn start_tangent_is_a_unit_tangent() {
        let p = latitude(1.0, 1.0).unwrap();
        let u = start_tangent(&p).unwrap();
        assert!((norm(&u) - 1.0).abs() < 1e-15);
        let n = p.surface.normal(p.point(0.0)).unwrap();
        assert!(u.iter().zip(n).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12);
    }
}
