//! JSON file format for structures and homomorphism witnesses.
//!
//! ```json
//! {
//!   "name": "K2",
//!   "elements": ["a", "b"],
//!   "relations": { "E": { "arity": 2, "tuples": [["a", "b"], ["b", "a"]] } },
//!   "constants": { "c1": "a" }
//! }
//! ```

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::{Signature, Structure};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureFile {
    #[serde(default)]
    name: String,
    elements: Vec<String>,
    relations: BTreeMap<String, RelationFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    constants: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationFile {
    arity: usize,
    tuples: Vec<Vec<String>>,
}

pub fn structure_from_json(text: &str) -> Result<Structure> {
    let file: StructureFile = serde_json::from_str(text)?;
    let mut index = HashMap::new();
    for (i, e) in file.elements.iter().enumerate() {
        if index.insert(e.as_str(), i).is_some() {
            return Err(Error::Format(format!("duplicate element `{e}`")));
        }
    }
    let lookup = |name: &str| -> Result<usize> {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Format(format!("unknown element `{name}`")))
    };

    let m = file.constants.len();
    let mut constants = vec![usize::MAX; m];
    for (key, elem) in &file.constants {
        let i: usize = key
            .strip_prefix('c')
            .and_then(|d| d.parse().ok())
            .filter(|&i| (1..=m).contains(&i))
            .ok_or_else(|| {
                Error::Format(format!("constant key `{key}` must be one of c1..c{m}"))
            })?;
        constants[i - 1] = lookup(elem)?;
    }

    let sig = Signature::new(file.relations.iter().map(|(n, r)| (n.clone(), r.arity)), m)
        .map_err(|e| Error::Format(e.to_string()))?;
    let n = file.elements.len();
    let mut s = Structure::with_constants(sig, n, constants)?
        .with_labels(file.elements.clone())?
        .named(file.name);
    for (rel, body) in &file.relations {
        for t in &body.tuples {
            let tuple = t.iter().map(|x| lookup(x)).collect::<Result<Vec<_>>>()?;
            s.add_tuple(rel, tuple)
                .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    Ok(s)
}

fn unique_labels(s: &Structure) -> Vec<String> {
    let mut labels: Vec<String> = (0..s.size()).map(|i| s.label(i)).collect();
    let mut seen = HashMap::new();
    let clash = labels.iter().any(|l| seen.insert(l.clone(), ()).is_some());
    if clash {
        labels = (0..s.size()).map(|i| i.to_string()).collect();
    }
    labels
}

fn structure_file(s: &Structure) -> StructureFile {
    let labels = unique_labels(s);
    let relations = s
        .signature()
        .relations()
        .iter()
        .zip(s.relations())
        .map(|(sym, tuples)| {
            (
                sym.name.clone(),
                RelationFile {
                    arity: sym.arity,
                    tuples: tuples
                        .iter()
                        .map(|t| t.iter().map(|&x| labels[x].clone()).collect())
                        .collect(),
                },
            )
        })
        .collect();
    let constants = s
        .constants()
        .iter()
        .enumerate()
        .map(|(i, &c)| (format!("c{}", i + 1), labels[c].clone()))
        .collect();
    StructureFile {
        name: s.name().to_string(),
        elements: labels,
        relations,
        constants,
    }
}

pub fn structure_to_value(s: &Structure) -> serde_json::Value {
    serde_json::to_value(structure_file(s)).expect("serializable")
}

pub fn structure_to_json(s: &Structure) -> String {
    serde_json::to_string_pretty(&structure_file(s)).expect("serializable")
}

/// A map from source element labels to target element labels.
pub fn mapping_to_value(source: &Structure, target: &Structure, mapping: &[usize]) -> serde_json::Value {
    let src = unique_labels(source);
    let dst = unique_labels(target);
    let map: serde_json::Map<String, serde_json::Value> = mapping
        .iter()
        .enumerate()
        .map(|(i, &j)| (src[i].clone(), serde_json::Value::String(dst[j].clone())))
        .collect();
    serde_json::Value::Object(map)
}

/// Parses a witness map back into an index array.
pub fn mapping_from_value(
    source: &Structure,
    target: &Structure,
    value: &serde_json::Value,
) -> Result<Vec<usize>> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Format("witness must be a JSON object".into()))?;
    let src = unique_labels(source);
    let dst = unique_labels(target);
    let mut out = Vec::with_capacity(src.len());
    for l in &src {
        let v = obj
            .get(l)
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Format(format!("witness has no image for `{l}`")))?;
        let j = dst
            .iter()
            .position(|d| d == v)
            .ok_or_else(|| Error::Format(format!("unknown target element `{v}`")))?;
        out.push(j);
    }
    if obj.len() != src.len() {
        return Err(Error::Format("witness mentions unknown source elements".into()));
    }
    Ok(out)
}
