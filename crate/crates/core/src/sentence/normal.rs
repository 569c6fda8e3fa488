use std::collections::{BTreeSet, HashMap};

use super::{Atom, PhSentence, Quantifier, DUMMY_PREFIX};
use crate::error::{Error, Result};

/// Syntactic shape of a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceShape {
    pub universal_count: usize,
    pub existential_count: usize,
    /// Number of universal blocks once the prefix alternates blockwise,
    /// starting with a universal block.
    pub depth: usize,
    pub is_pi2: bool,
    pub is_sigma1: bool,
    pub is_degenerate: bool,
    pub has_equality: bool,
}

fn fresh_dummies(s: &PhSentence) -> impl FnMut() -> String {
    let used: BTreeSet<String> = s.variables().iter().map(|(_, v)| v.to_string()).collect();
    let mut next = 1usize;
    move || loop {
        let name = format!("{DUMMY_PREFIX}{next}");
        next += 1;
        if !used.contains(&name) {
            return name;
        }
    }
}

/// Rewrites the prefix to `forall x1 exists y1 ... forall xk exists yk`
/// with singleton blocks, inserting unused dummy variables where needed.
pub fn normalize_strict_alternation(s: &PhSentence) -> PhSentence {
    let mut dummy = fresh_dummies(s);
    let mut seq = Vec::new();
    let mut expected = Quantifier::Forall;
    for (q, v) in s.variables() {
        if q != expected {
            seq.push((expected, dummy()));
            expected = expected.dual();
        }
        seq.push((q, v.to_string()));
        expected = expected.dual();
    }
    if expected == Quantifier::Exists {
        seq.push((Quantifier::Exists, dummy()));
    }
    // singleton blocks: build directly rather than merging
    let prefix = seq
        .into_iter()
        .map(|(q, v)| super::Block {
            quantifier: q,
            variables: vec![v],
        })
        .collect();
    PhSentence::new(prefix, s.matrix().to_vec()).expect("normalization keeps bindings")
}

/// Removes dummy variables not used in the matrix and merges adjacent
/// blocks of the same quantifier.
pub fn strip_dummies(s: &PhSentence) -> PhSentence {
    let used: BTreeSet<&str> = s.matrix().iter().flat_map(|a| a.variables()).collect();
    let seq = s
        .variables()
        .into_iter()
        .filter(|(_, v)| !v.starts_with(DUMMY_PREFIX) || used.contains(v))
        .map(|(q, v)| (q, v.to_string()))
        .collect();
    PhSentence::from_sequence(seq, s.matrix().to_vec()).expect("bindings kept")
}

/// Groups variables into classes connected by equality atoms. Each class
/// is returned in prefix order; singleton classes are omitted.
pub fn equality_classes(s: &PhSentence) -> Vec<Vec<String>> {
    let vars = s.variables();
    let pos: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, (_, v))| (*v, i)).collect();
    let mut parent: Vec<usize> = (0..vars.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    for a in s.matrix() {
        if let Atom::Eq(x, y) = a {
            let (rx, ry) = (find(&mut parent, pos[x.as_str()]), find(&mut parent, pos[y.as_str()]));
            // keep the earliest variable as root
            let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
            parent[hi] = lo;
        }
    }
    let mut classes: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..vars.len() {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = classes.into_values().filter(|c| c.len() > 1).collect();
    out.sort();
    out.into_iter()
        .map(|c| c.into_iter().map(|i| vars[i].1.to_string()).collect())
        .collect()
}

/// A class is degenerate when a universal variable is equated with a
/// variable bound before it.
fn is_degenerate(s: &PhSentence) -> bool {
    let quant: HashMap<&str, Quantifier> = s.variables().into_iter().map(|(q, v)| (v, q)).collect();
    equality_classes(s).iter().any(|class| {
        class
            .iter()
            .skip(1)
            .any(|v| quant[v.as_str()] == Quantifier::Forall)
    })
}

pub fn classify(s: &PhSentence) -> SentenceShape {
    let universal_count = s.universal_variables().len();
    let existential_count = s.existential_variables().len();
    let mut alternations = 0;
    let mut last = None;
    for b in s.prefix() {
        if last.is_some_and(|q| q != b.quantifier) {
            alternations += 1;
        }
        last = Some(b.quantifier);
    }
    let starts_forall = s.prefix().first().map(|b| b.quantifier) == Some(Quantifier::Forall);
    let is_pi2 = alternations == 0 || (alternations == 1 && starts_forall);
    let forall_blocks = s.prefix().iter().filter(|b| b.quantifier == Quantifier::Forall).count();
    let depth = forall_blocks + usize::from(!starts_forall && !s.prefix().is_empty());
    SentenceShape {
        universal_count,
        existential_count,
        depth,
        is_pi2,
        is_sigma1: universal_count == 0,
        is_degenerate: is_degenerate(s),
        has_equality: s.has_equality(),
    }
}

/// Eliminates equality atoms by substituting each variable with the
/// earliest-bound member of its equality class and dropping the
/// quantifiers of the substituted variables.
pub fn propagate_equalities(s: &PhSentence) -> Result<PhSentence> {
    if is_degenerate(s) {
        return Err(Error::InvalidSentence(
            "degenerate sentence: equalities force a one-element model".into(),
        ));
    }
    let mut rep: HashMap<String, String> = HashMap::new();
    for class in equality_classes(s) {
        for v in &class[1..] {
            rep.insert(v.clone(), class[0].clone());
        }
    }
    let seq = s
        .variables()
        .into_iter()
        .filter(|(_, v)| !rep.contains_key(*v))
        .map(|(q, v)| (q, v.to_string()))
        .collect();
    let mut matrix: Vec<Atom> = Vec::new();
    for a in s.matrix() {
        if matches!(a, Atom::Eq(..)) {
            continue;
        }
        let renamed = a.rename(|v| rep.get(v).cloned().unwrap_or_else(|| v.to_string()));
        if !matrix.contains(&renamed) {
            matrix.push(renamed);
        }
    }
    PhSentence::from_sequence(seq, matrix)
}
