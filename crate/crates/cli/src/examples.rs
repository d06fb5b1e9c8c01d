use serde_json::{json, Value};
use transprod::prodint::{bochner_criterion, riemann_criterion, riemann_criterion_sampled, riemann_product_integral, BoundVerdict};
use transprod::stepmap::catalog::{catalog, CatalogEntry};
use transprod::stieltjes::{harmonic_partition, p_variation_probe};
use transprod::transfinite::SummabilityVerdict;
use transprod::transport::{haahti_refinement, stieltjes_gap, Ex711};
use transprod::{Element, Mapping, Tag};

use crate::args::{Common, Mode, RuleArg, TagArg};
use crate::commands::{self, as_mapping};
use crate::error::CliError;
use crate::output::Outcome;

pub struct Example {
    pub name: &'static str,
    pub description: &'static str,
    pub expected: &'static str,
}

pub const EXAMPLES: &[Example] = &[
    Example { name: "ex201", description: "alternating double series on a depth-1 tower", expected: "(log 2)² z" },
    Example {
        name: "ex301",
        description: "step mapping with the (log 2)² closed form; neither Riemann nor Bochner integrable",
        expected: "exp((log 2)² z)",
    },
    Example { name: "ex302", description: "positive step mapping on a depth-1 tower", expected: "exp((π²/6)² z)" },
    Example { name: "ex32", description: "ladder step mapping whose jumps cancel in the Stieltjes product", expected: "I" },
    Example {
        name: "ex33",
        description: "alternating ladder with square-summable jumps of unbounded variation",
        expected: "∏_{n≥2} (1 + (−1)^n/(√n log n))",
    },
    Example { name: "ex401", description: "bounded right-regulated series mapping", expected: "bounded by Σ (2 + π/2)/n²" },
    Example { name: "sqrtcos", description: "√t cos(π/t): substitution rule without bounded variation", expected: "exp(−1)" },
    Example { name: "linear", description: "A(t) = t z on [0, 1]", expected: "exp(z/2)" },
    Example { name: "constant", description: "A(t) = z on [0, 1]", expected: "exp(z)" },
    Example {
        name: "ex711",
        description: "projection-valued mapping: Haahti product exists, Stieltjes product does not",
        expected: "e¹ (Haahti); partition gap 1",
    },
    Example { name: "latitude", description: "parallel transport around a latitude of the unit sphere", expected: "rotation by 2π cos θ" },
    Example { name: "helix", description: "parallel transport along one turn of a helix on the unit cylinder", expected: "I on the tangent plane" },
];

pub fn list(filter: Option<&str>) -> Outcome {
    let rows: Vec<Value> = EXAMPLES
        .iter()
        .filter(|e| filter.is_none_or(|f| e.name.contains(f) || e.description.contains(f)))
        .map(|e| json!({"name": e.name, "description": e.description, "expected": e.expected}))
        .collect();
    Outcome::new(json!({"examples": rows}), false)
}

fn riemann_label(v: &BoundVerdict) -> &'static str {
    match v {
        BoundVerdict::Bounded { .. } => "bounded",
        BoundVerdict::UnboundedWitness { .. } => "unbounded-witness",
    }
}

fn bochner_label(v: &SummabilityVerdict) -> &'static str {
    match v {
        SummabilityVerdict::Convergent => "convergent",
        SummabilityVerdict::Inconclusive => "inconclusive",
        SummabilityVerdict::DivergenceWitness(_) => "divergence",
    }
}

/// Partitions whose Stieltjes products differ by 1 on the projection example.
const GAP_PARTITIONS: [&[f64]; 2] = [&[0.0, 0.5, 1.0], &[0.0, 0.75, 1.0]];

pub fn run(name: &str, c: &Common) -> Result<Outcome, CliError> {
    let levels = c.levels as usize;
    let out = match name {
        "ex201" => commands::sum(name, c)?,
        "ex301" | "ex302" => {
            let CatalogEntry::Step(s) = catalog(name, &Value::Null)? else { unreachable!() };
            let mut out = commands::prod(name, c)?;
            let riemann = riemann_criterion(&s, 1024);
            let bochner = bochner_criterion(&s, c.tol, c.budget);
            out.negative |= riemann_label(&riemann) != "bounded" || bochner.verdict != SummabilityVerdict::Convergent;
            out.report.insert(
                "verdicts".into(),
                json!({"riemann": riemann_label(&riemann), "bochner": bochner_label(&bochner.verdict)}),
            );
            out.report.insert("norm_sum".into(), serde_json::to_value(&bochner.sum).map_err(CliError::json)?);
            out
        }
        "ex32" => commands::stieltjes(name, Mode::Ks, 2.0, 0.5, RuleArg::Continuous, c)?,
        "ex33" => {
            let mut out = commands::stieltjes(name, Mode::Ks, 2.0, 0.5, RuleArg::Continuous, c)?;
            for (key, mode, p) in [("scalar", Mode::Scalar, 2.0), ("pvar1", Mode::Pvar, 1.0), ("pvar2", Mode::Pvar, 2.0)] {
                let sub = commands::stieltjes(name, mode, p, 0.5, RuleArg::Continuous, c)?;
                out.negative |= sub.negative;
                out.report.insert(key.into(), Value::Object(sub.report));
            }
            out
        }
        "ex401" => {
            let a = as_mapping(catalog(name, &Value::Null)?, "ex401")?;
            let bound = riemann_criterion_sampled(&*a, 1024)?;
            let r = riemann_product_integral(&*a, c.tol, levels, Tag::Mid)?;
            let v = json!({"riemann": riemann_label(&bound), "prodint": serde_json::to_value(&r).map_err(CliError::json)?});
            Outcome::new(v, !r.converged() || riemann_label(&bound) != "bounded").with_table(r)
        }
        "sqrtcos" => {
            let mut out = commands::stieltjes(name, Mode::Subst, 2.0, 0.5, RuleArg::Continuous, c)?;
            let a = as_mapping(catalog(name, &Value::Null)?, "sqrtcos")?;
            let n = 1000;
            let pv = p_variation_probe(&*a, 2.0, &[harmonic_partition(n)])?;
            let h: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
            out.report.insert(
                "two_variation".into(),
                json!({"partition_size": n, "sum": pv.lower_bounds[0], "harmonic": h, "exceeds_harmonic": pv.lower_bounds[0] > h}),
            );
            out
        }
        "linear" | "constant" => commands::prodint(name, TagArg::Mid, c)?,
        "ex711" => {
            // One coordinate per dyadic block reached at the finest level.
            let a = Ex711 { dim: levels + 3 };
            let r = haahti_refinement(&a, c.tol, levels)?;
            let gap = stieltjes_gap(&a, GAP_PARTITIONS[0], GAP_PARTITIONS[1])?;
            let e1 = Element::diag_unit(a.dim, 0);
            let v = json!({
                "haahti": serde_json::to_value(r.value()).map_err(CliError::json)?,
                "haahti_is_e1": r.levels.iter().all(|l| l.value == e1),
                "ks": {"verdict": if gap > 0.5 { "divergence-witness" } else { "inconclusive" }, "gap": gap, "partitions": GAP_PARTITIONS},
                "interval": a.interval(),
            });
            // The Stieltjes product does not exist: a negative verdict by design.
            Outcome::new(v, true).with_table(r)
        }
        "latitude" => commands::transport(None, "latitude:1", c)?,
        "helix" => commands::transport(None, "helix:0.5", c)?,
        other => return Err(CliError::new("unknown-example", format!("no example named {other}"))),
    };
    let mut out = out;
    out.report.insert("example".into(), json!(name));
    Ok(out)
}
