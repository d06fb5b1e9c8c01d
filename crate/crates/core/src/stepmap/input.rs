//! JSON input: a catalog generator, explicit step values on a finite set, or
//! explicit family terms on a finite set.

use serde::Deserialize;
use serde_json::Value;

use crate::algebra::Element;
use crate::error::{Error, Result};
use crate::ordinal::WellOrderedSet;
use crate::stepmap::catalog::{catalog, CatalogEntry};
use crate::stepmap::StepMapping;
use crate::transfinite::Family;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexedElement {
    pub idx: Vec<u64>,
    pub elem: Element,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum InputSpec {
    Generator {
        generator: GeneratorSpec,
        #[serde(default)]
        set: Option<WellOrderedSet>,
    },
    /// Step mapping: `values[k]` on [p_k, p_{k+1}), the last one at b.
    Values { set: WellOrderedSet, values: Vec<IndexedElement> },
    /// Family over every member of a finite set, top included.
    Terms { set: WellOrderedSet, terms: Vec<IndexedElement> },
}

/// Elements ordered by their single coordinate, each position exactly once.
fn ordered(set: &WellOrderedSet, entries: Vec<IndexedElement>) -> Result<Vec<Element>> {
    let WellOrderedSet::Finite { points } = set else {
        return Err(Error::InvalidInput("explicit values need a finite set".into()));
    };
    set.validate()?;
    let mut slots: Vec<Option<Element>> = vec![None; points.len()];
    for e in entries {
        let k = match e.idx[..] {
            [k] if (k as usize) < slots.len() => k as usize,
            _ => return Err(Error::InvalidInput(format!("index {:?} is not a member", e.idx))),
        };
        if slots[k].replace(e.elem).is_some() {
            return Err(Error::InvalidInput(format!("index [{k}] given twice")));
        }
    }
    let vals = slots
        .into_iter()
        .enumerate()
        .map(|(k, v)| v.ok_or_else(|| Error::InvalidInput(format!("index [{k}] has no value"))))
        .collect::<Result<Vec<_>>>()?;
    if let Some(v) = vals.iter().find(|v| v.kind() != vals[0].kind()) {
        return Err(Error::KindMismatch(vals[0].kind(), v.kind()));
    }
    Ok(vals)
}

fn entry_set(entry: &CatalogEntry) -> Option<&WellOrderedSet> {
    match entry {
        CatalogEntry::Step(s) => Some(&s.set),
        CatalogEntry::Family(f) => Some(&f.set),
        CatalogEntry::Regulated(_) => None,
    }
}

impl InputSpec {
    pub fn from_json(text: &str) -> Result<InputSpec> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("input: {e}")))
    }

    pub fn build(self) -> Result<CatalogEntry> {
        match self {
            InputSpec::Generator { generator, set } => {
                let entry = catalog(&generator.name, &generator.params)?;
                // A generator owns its set; a stated set is a consistency check only.
                match (set, entry_set(&entry)) {
                    (Some(want), Some(got)) if &want != got => {
                        Err(Error::InvalidInput(format!("{} is defined on {got:?}, not {want:?}", generator.name)))
                    }
                    (Some(_), None) => Err(Error::InvalidInput(format!("{} takes no index set", generator.name))),
                    _ => Ok(entry),
                }
            }
            InputSpec::Values { set, values } => {
                let vals = ordered(&set, values)?;
                let WellOrderedSet::Finite { points } = set else { unreachable!() };
                Ok(CatalogEntry::Step(StepMapping::finite(points, vals)?))
            }
            InputSpec::Terms { set, terms } => {
                let vals = ordered(&set, terms)?;
                let top = vals.last().unwrap().clone();
                let last = vals.len() - 1;
                let kind = top.kind();
                Ok(CatalogEntry::Family(
                    Family::new(set, kind, move |i| if i.is_top() { top.clone() } else { vals[(i.coords[0] as usize).min(last)].clone() })
                        .with_top(true),
                ))
            }
        }
    }
}

/// A bare catalog name with default parameters, or an inline JSON description.
pub fn resolve(name_or_json: &str) -> Result<CatalogEntry> {
    let t = name_or_json.trim();
    if t.starts_with('{') {
        InputSpec::from_json(t)?.build()
    } else {
        catalog(t, &Value::Null)
    }
}
