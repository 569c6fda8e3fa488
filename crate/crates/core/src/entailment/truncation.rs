use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::skolem::{skolemize, SkolemArg, SkolemForm, SkolemTerm, TermNode};
use crate::error::{Error, Result};
use crate::sentence::PhSentence;
use crate::structure::Structure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationLimits {
    pub max_terms: usize,
    /// Cap on the instantiations tried for a single quantified atom.
    pub max_instantiations: u128,
}

impl Default for TruncationLimits {
    fn default() -> Self {
        TruncationLimits {
            max_terms: 100_000,
            max_instantiations: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Const(usize),
    App(usize, Vec<usize>),
}

/// The canonical model of a sentence over constants `c1..cl`, cut off at
/// rank `m`. Terms are numbered by rank, then structurally; constants come
/// first in their own order.
#[derive(Debug, Clone)]
pub struct Truncation {
    form: SkolemForm,
    l: usize,
    m: usize,
    nodes: Vec<Node>,
    ranks: Vec<usize>,
    supports: Vec<u64>,
    /// `level_ends[r]` is the number of terms of rank at most `r`.
    level_ends: Vec<usize>,
    apps: HashMap<(usize, Vec<usize>), usize>,
    facts: BTreeMap<String, BTreeSet<Vec<usize>>>,
}

/// Exact term counts per rank.
fn term_counts(form: &SkolemForm, l: usize, m: usize) -> Vec<u128> {
    let mut counts = vec![l as u128];
    for _ in 0..m {
        let prev = *counts.last().expect("nonempty");
        let mut next = l as u128;
        for f in form.functions() {
            let p = crate::structure::checked_pow(prev, f.arity).unwrap_or(u128::MAX);
            next = next.saturating_add(p);
        }
        counts.push(next);
    }
    counts
}

pub fn build_truncation(phi: &PhSentence, l: usize, m: usize) -> Result<Truncation> {
    build_truncation_with(&skolemize(phi)?, l, m, &TruncationLimits::default())
}

pub fn build_truncation_with(form: &SkolemForm, l: usize, m: usize, limits: &TruncationLimits) -> Result<Truncation> {
    if l == 0 || l > 64 {
        return Err(Error::InvalidArgument(format!("constant count {l} outside 1..=64")));
    }
    let counts = term_counts(form, l, m);
    let total = counts[m];
    if total > limits.max_terms as u128 {
        return Err(Error::resource("truncation terms", total, limits.max_terms as u128));
    }
    let mut t = Truncation {
        form: form.clone(),
        l,
        m,
        nodes: Vec::with_capacity(total as usize),
        ranks: Vec::with_capacity(total as usize),
        supports: Vec::with_capacity(total as usize),
        level_ends: Vec::with_capacity(m + 1),
        apps: HashMap::new(),
        facts: BTreeMap::new(),
    };
    for c in 0..l {
        t.nodes.push(Node::Const(c));
        t.ranks.push(0);
        t.supports.push(1 << c);
    }
    t.level_ends.push(l);
    for r in 1..=m {
        let prev = t.level_ends[r - 1];
        let lower = if r >= 2 { t.level_ends[r - 2] } else { 0 };
        for (fi, f) in form.functions().iter().enumerate() {
            let mut args = vec![0usize; f.arity];
            'tuples: loop {
                if args.iter().any(|&a| a >= lower) {
                    let id = t.nodes.len();
                    t.ranks.push(r);
                    t.supports.push(args.iter().fold(0, |s, &a| s | t.supports[a]));
                    t.apps.insert((fi, args.clone()), id);
                    t.nodes.push(Node::App(fi, args.clone()));
                }
                for p in (0..f.arity).rev() {
                    args[p] += 1;
                    if args[p] < prev {
                        continue 'tuples;
                    }
                    args[p] = 0;
                }
                break;
            }
        }
        t.level_ends.push(t.nodes.len());
    }
    debug_assert_eq!(t.nodes.len() as u128, total);
    for sym in form.signature().relations() {
        t.facts.insert(sym.name.clone(), BTreeSet::new());
    }
    for atom in form.atoms() {
        instantiate(&mut t, form, atom, limits)?;
    }
    Ok(t)
}

fn instantiate(
    t: &mut Truncation,
    form: &SkolemForm,
    atom: &super::skolem::QuantifiedAtom,
    limits: &TruncationLimits,
) -> Result<()> {
    // universals that occur, and whether they sit under a function
    let mut inner: BTreeMap<usize, bool> = BTreeMap::new();
    for &a in &atom.args {
        match a {
            SkolemArg::Universal(u) => {
                inner.entry(u).or_insert(false);
            }
            SkolemArg::Skolem(f) => {
                for u in 0..form.functions()[f].arity {
                    inner.insert(u, true);
                }
            }
        }
    }
    let used: Vec<usize> = inner.keys().copied().collect();
    let mut sizes = Vec::with_capacity(used.len());
    for u in &used {
        let size = if inner[u] {
            if t.m == 0 {
                return Ok(());
            }
            t.level_ends[t.m - 1]
        } else {
            t.level_ends[t.m]
        };
        sizes.push(size);
    }
    let needed = sizes.iter().fold(1u128, |acc, &s| acc.saturating_mul(s as u128));
    if needed > limits.max_instantiations {
        return Err(Error::resource("atom instantiations", needed, limits.max_instantiations));
    }
    let position: HashMap<usize, usize> = used.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut vals = vec![0usize; used.len()];
    let mut out = Vec::new();
    loop {
        let tuple: Vec<usize> = atom
            .args
            .iter()
            .map(|&a| match a {
                SkolemArg::Universal(u) => vals[position[&u]],
                SkolemArg::Skolem(f) => {
                    let args: Vec<usize> = (0..form.functions()[f].arity).map(|u| vals[position[&u]]).collect();
                    t.apps[&(f, args)]
                }
            })
            .collect();
        out.push(tuple);
        let mut p = used.len();
        loop {
            if p == 0 {
                let facts = t.facts.get_mut(&atom.relation).expect("relation in signature");
                facts.extend(out);
                return Ok(());
            }
            p -= 1;
            vals[p] += 1;
            if vals[p] < sizes[p] {
                break;
            }
            vals[p] = 0;
        }
    }
}

impl Truncation {
    pub fn form(&self) -> &SkolemForm {
        &self.form
    }

    pub fn constant_count(&self) -> usize {
        self.l
    }

    pub fn rank_bound(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn rank(&self, i: usize) -> usize {
        self.ranks[i]
    }

    /// Number of terms of rank at most `r`; these are the first ones.
    pub fn terms_up_to_rank(&self, r: usize) -> usize {
        self.level_ends[r.min(self.m)]
    }

    pub(crate) fn support_mask(&self, i: usize) -> u64 {
        self.supports[i]
    }

    pub fn term(&self, i: usize) -> SkolemTerm {
        match &self.nodes[i] {
            Node::Const(c) => SkolemTerm::constant(*c),
            Node::App(f, args) => SkolemTerm::app(*f, args.iter().map(|&a| self.term(a)).collect()),
        }
    }

    pub fn label(&self, i: usize) -> String {
        self.form.render(&self.term(i))
    }

    pub fn index_of(&self, term: &SkolemTerm) -> Option<usize> {
        match term.node() {
            TermNode::Const(c) => (*c < self.l).then_some(*c),
            TermNode::App(f, args) => {
                let args: Option<Vec<usize>> = args.iter().map(|a| self.index_of(a)).collect();
                self.apps.get(&(*f, args?)).copied()
            }
        }
    }

    pub fn facts(&self, relation: &str) -> Option<&BTreeSet<Vec<usize>>> {
        self.facts.get(relation)
    }

    pub fn all_facts(&self) -> &BTreeMap<String, BTreeSet<Vec<usize>>> {
        &self.facts
    }

    pub fn fact_count(&self) -> usize {
        self.facts.values().map(BTreeSet::len).sum()
    }

    pub fn has_fact(&self, relation: &str, tuple: &[usize]) -> bool {
        self.facts.get(relation).is_some_and(|f| f.contains(tuple))
    }

    /// Applies a map on constants to every constant of term `i`. Such maps
    /// never raise rank, so the image is in the truncation.
    pub fn map_constants(&self, i: usize, map: &dyn Fn(usize) -> usize) -> usize {
        match &self.nodes[i] {
            Node::Const(c) => map(*c),
            Node::App(f, args) => {
                let args = args.iter().map(|&a| self.map_constants(a, map)).collect();
                self.apps[&(*f, args)]
            }
        }
    }

    /// The image of every term under a permutation of the constants.
    pub fn permutation_table(&self, perm: &[usize]) -> Vec<usize> {
        let mut image = Vec::with_capacity(self.len());
        for node in &self.nodes {
            let v = match node {
                Node::Const(c) => perm[*c],
                Node::App(f, args) => {
                    let args = args.iter().map(|&a| image[a]).collect();
                    self.apps[&(*f, args)]
                }
            };
            image.push(v);
        }
        image
    }

    /// Distinct constants of term `i` in left-to-right order.
    pub(crate) fn constant_sequence(&self, i: usize, out: &mut Vec<usize>) {
        match &self.nodes[i] {
            Node::Const(c) => {
                if !out.contains(c) {
                    out.push(*c);
                }
            }
            Node::App(_, args) => {
                for &a in args {
                    self.constant_sequence(a, out);
                }
            }
        }
    }

    /// The truncation as a structure whose elements are labeled by terms.
    pub fn to_structure(&self) -> Result<Structure> {
        let sig = self.form.signature().clone();
        let labels = (0..self.len()).map(|i| self.label(i)).collect();
        let mut s = Structure::new(sig, self.len())?.with_labels(labels)?;
        for (rel, tuples) in &self.facts {
            for t in tuples {
                s.add_tuple(rel, t.clone())?;
            }
        }
        Ok(s.named(format!("truncation(l={}, m={})", self.l, self.m)))
    }
}
