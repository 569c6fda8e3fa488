//! Browser bindings. Each export takes and returns JSON text; the plain
//! functions underneath are what the tests call.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use qcsp_core::containment::{decide_containment, ContainmentOptions, Outcome};
use qcsp_core::entailment::{decide_entailment, EntailmentOptions};
use qcsp_core::format::{mapping_to_value, structure_from_json, structure_to_value};
use qcsp_core::game::evaluate;
use qcsp_core::generate::{generate, Family};
use qcsp_core::sentence::parse_sentence;
use qcsp_core::structure::power;
use qcsp_core::SizeLimits;

fn text(v: Value) -> String {
    serde_json::to_string_pretty(&v).expect("serializable")
}

pub fn contain_json(a: &str, b: &str, cap: Option<usize>) -> Result<String, String> {
    let a = structure_from_json(a).map_err(|e| format!("A: {e}"))?;
    let b = structure_from_json(b).map_err(|e| format!("B: {e}"))?;
    let opts = ContainmentOptions {
        cap,
        ..ContainmentOptions::default()
    };
    let v = decide_containment(&a, &b, &opts).map_err(|e| e.to_string())?;
    let mut out = json!({ "bound": v.bound.to_string(), "bound_kind": v.bound_kind });
    match v.outcome {
        Outcome::Yes { r, witness } => {
            let p = power(&a, r, &SizeLimits::DEFAULT).map_err(|e| e.to_string())?;
            out["verdict"] = json!("yes");
            out["r"] = json!(r);
            out["witness"] = mapping_to_value(&p, &b, &witness.mapping);
        }
        Outcome::No { refutation } => {
            out["verdict"] = json!("no");
            out["refutation"] = serde_json::to_value(refutation).expect("serializable");
        }
        Outcome::Inconclusive { reached, reason } => {
            out["verdict"] = json!("inconclusive");
            out["reached"] = json!(reached);
            out["reason"] = json!(reason);
        }
    }
    Ok(text(out))
}

pub fn eval_json(a: &str, sentence: &str) -> Result<String, String> {
    let a = structure_from_json(a).map_err(|e| format!("structure: {e}"))?;
    let s = parse_sentence(sentence).map_err(|e| format!("sentence: {e}"))?;
    let truth = evaluate(&a, &s).map_err(|e| e.to_string())?.truth;
    Ok(text(json!({ "truth": truth, "sentence": s.to_string() })))
}

pub fn entail_json(phi: &str, psi: &str, max_terms: usize) -> Result<String, String> {
    let phi = parse_sentence(phi).map_err(|e| format!("premise: {e}"))?;
    let psi = parse_sentence(psi).map_err(|e| format!("conclusion: {e}"))?;
    let opts = EntailmentOptions {
        max_terms,
        ..EntailmentOptions::default()
    };
    let r = decide_entailment(&phi, &psi, &opts).map_err(|e| e.to_string())?;
    Ok(text(serde_json::to_value(r).expect("serializable")))
}

pub fn gen_json(family: &str) -> Result<String, String> {
    let f: Family = family.parse().map_err(|e: qcsp_core::Error| e.to_string())?;
    let s = generate(&f).map_err(|e| e.to_string())?;
    Ok(text(structure_to_value(&s)))
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// `cap` of 0 means no cap.
#[wasm_bindgen]
pub fn contain(a: &str, b: &str, cap: usize) -> Result<String, JsValue> {
    js(contain_json(a, b, (cap > 0).then_some(cap)))
}

#[wasm_bindgen(js_name = evaluate)]
pub fn eval(structure: &str, sentence: &str) -> Result<String, JsValue> {
    js(eval_json(structure, sentence))
}

#[wasm_bindgen]
pub fn entail(phi: &str, psi: &str, max_terms: usize) -> Result<String, JsValue> {
    js(entail_json(phi, psi, max_terms))
}

#[wasm_bindgen]
pub fn gen(family: &str) -> Result<String, JsValue> {
    js(gen_json(family))
}
