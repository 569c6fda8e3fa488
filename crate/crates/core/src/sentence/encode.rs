//! The correspondence between Π2 sentences and structures with constants,
//! and the canonical query of a structure.

use std::collections::HashMap;

use super::{classify, Atom, PhSentence, Quantifier};
use crate::error::{Error, Result};
use crate::structure::{Signature, Structure};

/// `D_phi` over the relation symbols the sentence mentions.
pub fn sentence_to_structure(s: &PhSentence) -> Result<Structure> {
    let sig = s.signature()?;
    sentence_to_structure_over(s, &sig)
}

/// `D_phi` over a given relational signature: one element per variable (in
/// prefix order), one tuple per atom, constant `c_i` on the i-th universal
/// variable.
pub fn sentence_to_structure_over(s: &PhSentence, sig: &Signature) -> Result<Structure> {
    let shape = classify(s);
    if !shape.is_pi2 {
        return Err(Error::InvalidSentence(format!(
            "expected a sentence of the form forall .. exists .., got `{s}`"
        )));
    }
    if shape.has_equality {
        return Err(Error::InvalidSentence(
            "equality atoms have no counterpart in the structure".into(),
        ));
    }
    s.check_signature(sig)?;
    let vars = s.variables();
    let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, (_, v))| (*v, i)).collect();
    let constants: Vec<usize> = vars
        .iter()
        .enumerate()
        .filter(|(_, (q, _))| *q == Quantifier::Forall)
        .map(|(i, _)| i)
        .collect();
    let sig = sig.with_constant_count(constants.len());
    let labels = vars.iter().map(|(_, v)| v.to_string()).collect();
    let mut d = Structure::with_constants(sig, vars.len(), constants)?.with_labels(labels)?;
    for a in s.matrix() {
        if let Atom::Rel { relation, args } = a {
            d.add_tuple(relation, args.iter().map(|v| index[v.as_str()]).collect())?;
        }
    }
    Ok(d)
}

/// `phi_D`: universal variables `x1..xm` for the constants, existential
/// variables for the remaining elements, every fact as an atom.
pub fn structure_to_sentence(d: &Structure) -> Result<PhSentence> {
    let m = d.signature().constant_count();
    if m == 0 {
        return Err(Error::InvalidArgument(
            "structure has no constants to turn into universal variables".into(),
        ));
    }
    let mut names: Vec<Option<String>> = vec![None; d.size()];
    for (i, &c) in d.constants().iter().enumerate() {
        if names[c].is_some() {
            return Err(Error::InvalidArgument(format!(
                "constants share element `{}`; the sentence would need equality",
                d.label(c)
            )));
        }
        names[c] = Some(format!("x{}", i + 1));
    }
    let mut seq: Vec<(Quantifier, String)> = (1..=m).map(|i| (Quantifier::Forall, format!("x{i}"))).collect();
    for (k, slot) in names.iter_mut().filter(|n| n.is_none()).enumerate() {
        let v = format!("y{}", k + 1);
        seq.push((Quantifier::Exists, v.clone()));
        *slot = Some(v);
    }
    let names: Vec<String> = names.into_iter().map(|n| n.expect("all named")).collect();
    let matrix = facts_as_atoms(d, &names);
    PhSentence::from_sequence(seq, matrix)
}

fn facts_as_atoms(d: &Structure, names: &[String]) -> Vec<Atom> {
    let mut out = Vec::new();
    for (sym, tuples) in d.signature().relations().iter().zip(d.relations()) {
        for t in tuples {
            out.push(Atom::Rel {
                relation: sym.name.clone(),
                args: t.iter().map(|&x| names[x].clone()).collect(),
            });
        }
    }
    out
}

/// The existential sentence with one variable `v<i>` per element and every
/// fact as an atom.
pub fn canonical_query(a: &Structure) -> Result<PhSentence> {
    if a.signature().constant_count() > 0 {
        return Err(Error::InvalidArgument("canonical query of a structure with constants".into()));
    }
    if a.size() == 0 {
        return Err(Error::InvalidArgument("canonical query of the empty structure".into()));
    }
    let names: Vec<String> = (0..a.size()).map(|i| format!("v{i}")).collect();
    let seq = names.iter().map(|v| (Quantifier::Exists, v.clone())).collect();
    PhSentence::from_sequence(seq, facts_as_atoms(a, &names))
}
