//! Prenex positive Horn sentences: a quantifier prefix over a conjunction
//! of relational and equality atoms.

mod encode;
mod normal;
mod parse;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

pub use encode::{canonical_query, sentence_to_structure, sentence_to_structure_over, structure_to_sentence};
pub use normal::{
    classify, equality_classes, normalize_strict_alternation, propagate_equalities, strip_dummies,
    SentenceShape,
};
pub use parse::parse_sentence;

use crate::error::{Error, Result};
use crate::structure::Signature;

/// Variables introduced by normalization start with this prefix; the
/// parser rejects it in user input.
pub const DUMMY_PREFIX: &str = "_d";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        }
    }

    pub fn dual(self) -> Quantifier {
        match self {
            Quantifier::Forall => Quantifier::Exists,
            Quantifier::Exists => Quantifier::Forall,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub quantifier: Quantifier,
    pub variables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Rel { relation: String, args: Vec<String> },
    Eq(String, String),
}

impl Atom {
    pub fn rel(relation: impl Into<String>, args: &[&str]) -> Atom {
        Atom::Rel {
            relation: relation.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn eq(x: impl Into<String>, y: impl Into<String>) -> Atom {
        Atom::Eq(x.into(), y.into())
    }

    pub fn variables(&self) -> Vec<&str> {
        match self {
            Atom::Rel { args, .. } => args.iter().map(String::as_str).collect(),
            Atom::Eq(x, y) => vec![x, y],
        }
    }

    pub(crate) fn rename(&self, f: impl Fn(&str) -> String) -> Atom {
        match self {
            Atom::Rel { relation, args } => Atom::Rel {
                relation: relation.clone(),
                args: args.iter().map(|a| f(a)).collect(),
            },
            Atom::Eq(x, y) => Atom::Eq(f(x), f(y)),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel { relation, args } => write!(f, "{}({})", relation, args.join(",")),
            Atom::Eq(x, y) => write!(f, "{x} = {y}"),
        }
    }
}

/// A prenex pH sentence. Construction checks that every variable is bound
/// exactly once and every matrix variable is bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhSentence {
    prefix: Vec<Block>,
    matrix: Vec<Atom>,
}

impl PhSentence {
    pub fn new(prefix: Vec<Block>, matrix: Vec<Atom>) -> Result<PhSentence> {
        let mut bound = HashSet::new();
        for b in &prefix {
            if b.variables.is_empty() {
                return Err(Error::InvalidSentence("empty quantifier block".into()));
            }
            for v in &b.variables {
                if !bound.insert(v.as_str()) {
                    return Err(Error::InvalidSentence(format!("variable `{v}` bound twice")));
                }
            }
        }
        for a in &matrix {
            for v in a.variables() {
                if !bound.contains(v) {
                    return Err(Error::InvalidSentence(format!("variable `{v}` is not bound")));
                }
            }
        }
        Ok(PhSentence { prefix, matrix })
    }

    /// Builds a sentence from singleton quantifications, merging adjacent
    /// quantifiers of the same kind into one block.
    pub fn from_sequence(vars: Vec<(Quantifier, String)>, matrix: Vec<Atom>) -> Result<PhSentence> {
        let mut prefix: Vec<Block> = Vec::new();
        for (q, v) in vars {
            match prefix.last_mut() {
                Some(b) if b.quantifier == q => b.variables.push(v),
                _ => prefix.push(Block {
                    quantifier: q,
                    variables: vec![v],
                }),
            }
        }
        PhSentence::new(prefix, matrix)
    }

    pub fn prefix(&self) -> &[Block] {
        &self.prefix
    }

    pub fn matrix(&self) -> &[Atom] {
        &self.matrix
    }

    /// All bound variables in prefix order.
    pub fn variables(&self) -> Vec<(Quantifier, &str)> {
        self.prefix
            .iter()
            .flat_map(|b| b.variables.iter().map(move |v| (b.quantifier, v.as_str())))
            .collect()
    }

    pub fn universal_variables(&self) -> Vec<&str> {
        self.variables()
            .into_iter()
            .filter(|(q, _)| *q == Quantifier::Forall)
            .map(|(_, v)| v)
            .collect()
    }

    pub fn existential_variables(&self) -> Vec<&str> {
        self.variables()
            .into_iter()
            .filter(|(q, _)| *q == Quantifier::Exists)
            .map(|(_, v)| v)
            .collect()
    }

    pub fn has_equality(&self) -> bool {
        self.matrix.iter().any(|a| matches!(a, Atom::Eq(..)))
    }

    /// Relation symbols used in the matrix, with their arities.
    pub fn signature(&self) -> Result<Signature> {
        let mut map: BTreeMap<&str, usize> = BTreeMap::new();
        for a in &self.matrix {
            if let Atom::Rel { relation, args } = a {
                if let Some(&k) = map.get(relation.as_str()) {
                    if k != args.len() {
                        return Err(Error::InvalidSentence(format!(
                            "`{relation}` used with arities {k} and {}",
                            args.len()
                        )));
                    }
                }
                map.insert(relation, args.len());
            }
        }
        Signature::new(map, 0)
    }

    /// Every relation atom names a symbol of `sig` with matching arity.
    pub fn check_signature(&self, sig: &Signature) -> Result<()> {
        for a in &self.matrix {
            if let Atom::Rel { relation, args } = a {
                match sig.arity(relation) {
                    Some(k) if k == args.len() => {}
                    Some(k) => {
                        return Err(Error::SignatureMismatch(format!(
                            "`{relation}` has arity {k}, sentence uses {}",
                            args.len()
                        )))
                    }
                    None => {
                        return Err(Error::SignatureMismatch(format!(
                            "relation `{relation}` is not in {sig}"
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for PhSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.prefix {
            write!(f, "{} {} ", b.quantifier.keyword(), b.variables.join(" "))?;
        }
        write!(f, ":")?;
        if self.matrix.is_empty() {
            return write!(f, " true");
        }
        for (i, a) in self.matrix.iter().enumerate() {
            if i > 0 {
                write!(f, " &")?;
            }
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rules() {
        let fa = |vs: &[&str]| Block {
            quantifier: Quantifier::Forall,
            variables: vs.iter().map(|s| s.to_string()).collect(),
        };
        assert!(PhSentence::new(vec![fa(&["x", "x"])], vec![]).is_err());
        assert!(PhSentence::new(vec![fa(&["x"])], vec![Atom::rel("E", &["x", "y"])]).is_err());
        assert!(PhSentence::new(vec![fa(&[])], vec![]).is_err());
        let s = PhSentence::new(vec![fa(&["x"])], vec![]).unwrap();
        assert_eq!(s.to_string(), "forall x : true");
    }

    #[test]
    fn arity_conflicts() {
        let s = parse_sentence("exists x y : E(x,y) & E(x)").unwrap();
        assert!(s.signature().is_err());
    }
}
