use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::sentence::{normalize_strict_alternation, Atom, PhSentence, Quantifier, DUMMY_PREFIX};
use crate::structure::Signature;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkolemFunction {
    pub name: String,
    /// The existential variable this function replaces.
    pub variable: String,
    pub arity: usize,
}

/// An argument of a quantified atom. A Skolem function of arity `a` is
/// always applied to the first `a` universal variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SkolemArg {
    Universal(usize),
    Skolem(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifiedAtom {
    pub relation: String,
    pub args: Vec<SkolemArg>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkolemForm {
    universals: Vec<String>,
    functions: Vec<SkolemFunction>,
    atoms: Vec<QuantifiedAtom>,
    signature: Signature,
    depth: usize,
}

impl SkolemForm {
    pub fn universals(&self) -> &[String] {
        &self.universals
    }

    pub fn functions(&self) -> &[SkolemFunction] {
        &self.functions
    }

    pub fn atoms(&self) -> &[QuantifiedAtom] {
        &self.atoms
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Depth of the source sentence under strict alternation.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Builds `f(args)`, checking the arity.
    pub fn apply(&self, function: usize, args: Vec<SkolemTerm>) -> Result<SkolemTerm> {
        let f = self
            .functions
            .get(function)
            .ok_or_else(|| Error::InvalidArgument(format!("no Skolem function {function}")))?;
        if f.arity != args.len() {
            return Err(Error::InvalidArgument(format!(
                "{} takes {} arguments, got {}",
                f.name,
                f.arity,
                args.len()
            )));
        }
        Ok(SkolemTerm::app(function, args))
    }

    pub fn render(&self, t: &SkolemTerm) -> String {
        match &t.node {
            TermNode::Const(c) => format!("c{}", c + 1),
            TermNode::App(f, args) => {
                let args: Vec<String> = args.iter().map(|a| self.render(a)).collect();
                format!("{}({})", self.functions[*f].name, args.join(","))
            }
        }
    }

    fn render_arg(&self, a: SkolemArg) -> String {
        match a {
            SkolemArg::Universal(u) => self.universals[u].clone(),
            SkolemArg::Skolem(f) => {
                let f = &self.functions[f];
                format!("{}({})", f.name, self.universals[..f.arity].join(","))
            }
        }
    }
}

impl fmt::Display for SkolemForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.universals.is_empty() {
            write!(f, "forall {} : ", self.universals.join(" "))?;
        }
        if self.atoms.is_empty() {
            return write!(f, "true");
        }
        let atoms: Vec<String> = self
            .atoms
            .iter()
            .map(|a| {
                let args: Vec<String> = a.args.iter().map(|&x| self.render_arg(x)).collect();
                format!("{}({})", a.relation, args.join(","))
            })
            .collect();
        write!(f, "{}", atoms.join(" & "))
    }
}

/// Replaces every existential variable by a Skolem function of the
/// universals bound before it. A leading existential block first gets a
/// dummy universal in front, so that every function has arity at least 1.
pub fn skolemize(phi: &PhSentence) -> Result<SkolemForm> {
    if phi.has_equality() {
        return Err(Error::InvalidSentence(
            "cannot Skolemize a sentence with equality atoms; propagate them first".into(),
        ));
    }
    let signature = phi.signature()?;
    let mut vars: Vec<(Quantifier, String)> = phi.variables().into_iter().map(|(q, v)| (q, v.to_string())).collect();
    if vars.first().is_some_and(|(q, _)| *q == Quantifier::Exists) {
        let used: BTreeSet<&str> = vars.iter().map(|(_, v)| v.as_str()).collect();
        let name = (1..)
            .map(|i| format!("{DUMMY_PREFIX}{i}"))
            .find(|n| !used.contains(n.as_str()))
            .expect("unbounded");
        vars.insert(0, (Quantifier::Forall, name));
    }
    let single = vars.iter().filter(|(q, _)| *q == Quantifier::Exists).count() == 1;
    let mut universals = Vec::new();
    let mut functions = Vec::new();
    let mut arg_of: HashMap<String, SkolemArg> = HashMap::new();
    for (q, v) in &vars {
        match q {
            Quantifier::Forall => {
                arg_of.insert(v.clone(), SkolemArg::Universal(universals.len()));
                universals.push(v.clone());
            }
            Quantifier::Exists => {
                arg_of.insert(v.clone(), SkolemArg::Skolem(functions.len()));
                functions.push(SkolemFunction {
                    name: if single { "f".into() } else { format!("f_{v}") },
                    variable: v.clone(),
                    arity: universals.len(),
                });
            }
        }
    }
    let atoms = phi
        .matrix()
        .iter()
        .map(|a| match a {
            Atom::Rel { relation, args } => QuantifiedAtom {
                relation: relation.clone(),
                args: args.iter().map(|v| arg_of[v]).collect(),
            },
            Atom::Eq(..) => unreachable!("checked above"),
        })
        .collect();
    let depth = normalize_strict_alternation(phi).universal_variables().len();
    Ok(SkolemForm {
        universals,
        functions,
        atoms,
        signature,
        depth,
    })
}

/// A closed term over constants `c1..` (stored from 0) and Skolem
/// functions. Ordered by rank first, then structurally.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SkolemTerm {
    rank: usize,
    node: TermNode,
    support: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermNode {
    Const(usize),
    App(usize, Vec<SkolemTerm>),
}

impl SkolemTerm {
    pub fn constant(index: usize) -> SkolemTerm {
        SkolemTerm {
            rank: 0,
            node: TermNode::Const(index),
            support: BTreeSet::from([index]),
        }
    }

    /// Unchecked application; see [`SkolemForm::apply`].
    pub fn app(function: usize, args: Vec<SkolemTerm>) -> SkolemTerm {
        let rank = 1 + args.iter().map(|a| a.rank).max().unwrap_or(0);
        let support = args.iter().flat_map(|a| a.support.iter().copied()).collect();
        SkolemTerm {
            rank,
            node: TermNode::App(function, args),
            support,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn node(&self) -> &TermNode {
        &self.node
    }

    /// Constants occurring in the term.
    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    /// `self[old/new]`: every occurrence of `old` replaced by `new`.
    pub fn substitute(&self, old: &SkolemTerm, new: &SkolemTerm) -> SkolemTerm {
        if self == old {
            return new.clone();
        }
        match &self.node {
            TermNode::Const(_) => self.clone(),
            TermNode::App(f, args) => SkolemTerm::app(*f, args.iter().map(|a| a.substitute(old, new)).collect()),
        }
    }

    pub fn rename_constants(&self, map: &dyn Fn(usize) -> usize) -> SkolemTerm {
        match &self.node {
            TermNode::Const(c) => SkolemTerm::constant(map(*c)),
            TermNode::App(f, args) => SkolemTerm::app(*f, args.iter().map(|a| a.rename_constants(map)).collect()),
        }
    }
}

pub fn substitute(t: &SkolemTerm, old: &SkolemTerm, new: &SkolemTerm) -> SkolemTerm {
    t.substitute(old, new)
}
