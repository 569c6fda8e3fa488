//! Deciding `QCSP(A) ⊆ QCSP(B)`: search for the least `r` with a surjective
//! homomorphism `A^r ->> B`, up to a bound after which no larger exponent
//! can help.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::evaluate;
use crate::hom::{
    automorphisms, find_hom, orbits_under, search, HomWitness, SearchOptions, SearchOutcome,
    DEFAULT_AUTOMORPHISM_CAP, DEFAULT_TUPLE_CAP,
};
use crate::sentence::{structure_to_sentence, Atom, PhSentence, Quantifier};
use crate::structure::{checked_pow, expansion, power, power_coordinates, superproduct, SizeLimits, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `|A|^|B|`.
    Cardinality,
    /// Number of orbits of `|B|`-tuples of `A` under its automorphisms.
    Orbit,
    /// Set by the caller.
    Override,
}

/// Which exponent bound to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundChoice {
    /// The smaller of the cardinality and orbit bounds, when the orbit
    /// count is computable.
    #[default]
    Auto,
    Cardinality,
    Orbit,
    Fixed(u128),
}

/// How a negative answer was established.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Refutation {
    /// Every exponent up to the bound failed.
    BoundExhausted,
    /// There is no homomorphism `A -> B` at all, hence none from any power.
    NoHomomorphism,
    /// For some `mu` in `B^m` there is no constant-preserving homomorphism
    /// from the superproduct of `A` with `m` constants to `(B; mu)`, so the
    /// Π2 sentence of that superproduct is true on `A` and false on `B`.
    Superproduct { m: usize, mu: Vec<usize> },
    /// A small sentence, found by enumeration, true on `A` and false on `B`.
    Sentence { sentence: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Yes { r: usize, witness: HomWitness },
    No { refutation: Refutation },
    /// The exponent cap, a size limit or the node budget stopped the search
    /// before an answer; `reached` is the last exponent fully checked.
    Inconclusive { reached: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainmentVerdict {
    pub outcome: Outcome,
    pub bound: u128,
    pub bound_kind: BoundKind,
}

impl ContainmentVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self.outcome, Outcome::Yes { .. })
    }

    pub fn is_no(&self) -> bool {
        matches!(self.outcome, Outcome::No { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self.outcome, Outcome::Inconclusive { .. })
    }
}

#[derive(Debug, Clone)]
pub struct ContainmentOptions {
    /// Largest exponent to try.
    pub cap: Option<usize>,
    pub bound: BoundChoice,
    /// First exponent to try.
    pub start: usize,
    /// Try the cheap sound refutations before the exponent search.
    pub refute: bool,
    /// Largest superproduct built for refutation attempts.
    pub refute_elements: usize,
    /// Largest number of small sentences tried as separators.
    pub refute_sentences: usize,
    pub limits: SizeLimits,
    /// Node budget per surjective-homomorphism search.
    pub max_nodes: Option<u64>,
}

impl Default for ContainmentOptions {
    fn default() -> Self {
        ContainmentOptions {
            cap: None,
            bound: BoundChoice::Auto,
            start: 1,
            refute: true,
            refute_elements: 20_000,
            refute_sentences: 5_000,
            limits: SizeLimits::DEFAULT,
            max_nodes: Some(20_000_000),
        }
    }
}

fn check_inputs(a: &Structure, b: &Structure) -> Result<()> {
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch(format!("{} vs {}", a.signature(), b.signature())));
    }
    if a.signature().constant_count() > 0 {
        return Err(Error::InvalidArgument("containment is defined for constant-free structures".into()));
    }
    if a.size() == 0 || b.size() == 0 {
        return Err(Error::InvalidArgument("containment needs nonempty structures".into()));
    }
    Ok(())
}

/// Orbits of `|B|`-tuples of `a`, when the group and the tuple space are
/// small enough.
fn orbit_bound(a: &Structure, n: usize) -> Option<u128> {
    let tuples = checked_pow(a.size() as u128, n)?;
    if a.size() > DEFAULT_AUTOMORPHISM_CAP || tuples > DEFAULT_TUPLE_CAP {
        return None;
    }
    let group = automorphisms(a, DEFAULT_AUTOMORPHISM_CAP).ok()?;
    Some(orbits_under(&group, a.size(), n))
}

pub fn exponent_bound(a: &Structure, b: &Structure, choice: BoundChoice) -> Result<(u128, BoundKind)> {
    let card = checked_pow(a.size() as u128, b.size()).unwrap_or(u128::MAX);
    Ok(match choice {
        BoundChoice::Cardinality => (card, BoundKind::Cardinality),
        BoundChoice::Fixed(n) => (n, BoundKind::Override),
        BoundChoice::Orbit => {
            let o = orbit_bound(a, b.size()).ok_or_else(|| {
                Error::resource("orbit bound computation", card, DEFAULT_TUPLE_CAP)
            })?;
            (o, BoundKind::Orbit)
        }
        BoundChoice::Auto => match orbit_bound(a, b.size()) {
            Some(o) if o < card => (o, BoundKind::Orbit),
            _ => (card, BoundKind::Cardinality),
        },
    })
}

/// Looks for `mu` in `B^m` such that the superproduct of `a` has no
/// constant-preserving map to `(B; mu)`.
fn refute_by_superproduct(a: &Structure, b: &Structure, m: usize, max_elements: usize) -> Result<Option<Vec<usize>>> {
    let small = SizeLimits {
        max_elements: max_elements as u128,
        max_tuples: SizeLimits::DEFAULT.max_tuples,
    };
    let sp = match superproduct(a, m, &small) {
        Ok(sp) => sp,
        Err(e) if e.is_resource() => return Ok(None),
        Err(e) => return Err(e),
    };
    let count = checked_pow(b.size() as u128, m).unwrap_or(u128::MAX);
    if count > 100_000 {
        return Ok(None);
    }
    for i in 0..count as usize {
        let mu = power_coordinates(b.size(), m, i);
        let target = expansion(b, &mu)?;
        let opts = SearchOptions {
            respect_constants: true,
            max_nodes: Some(1_000_000),
            ..SearchOptions::default()
        };
        if search(&sp, &target, &opts)? == SearchOutcome::NotFound {
            return Ok(Some(mu));
        }
    }
    Ok(None)
}

/// Tries equality-free sentences with at most three variables, each used,
/// and at most three atoms, in a fixed order.
fn refute_by_small_sentences(a: &Structure, b: &Structure, budget: usize) -> Result<Option<PhSentence>> {
    let mut tried = 0;
    for nv in 1..=3usize {
        let names: Vec<String> = (0..nv).map(|i| format!("x{}", i + 1)).collect();
        let mut atoms = Vec::new();
        for sym in a.signature().relations() {
            let total = checked_pow(nv as u128, sym.arity).unwrap_or(u128::MAX);
            if total > 64 {
                continue;
            }
            for code in 0..total as usize {
                let args = power_coordinates(nv, sym.arity, code);
                atoms.push(Atom::Rel {
                    relation: sym.name.clone(),
                    args: args.iter().map(|&v| names[v].clone()).collect(),
                });
            }
        }
        for k in 1..=3usize.min(atoms.len()) {
            let mut pick: Vec<usize> = (0..k).collect();
            loop {
                let matrix: Vec<Atom> = pick.iter().map(|&i| atoms[i].clone()).collect();
                let used: std::collections::BTreeSet<&str> = matrix.iter().flat_map(|t| t.variables()).collect();
                if used.len() == nv {
                    for mask in 0..1usize << nv {
                        if tried >= budget {
                            return Ok(None);
                        }
                        tried += 1;
                        let seq = names
                            .iter()
                            .enumerate()
                            .map(|(i, v)| {
                                let q = if mask >> i & 1 == 1 { Quantifier::Forall } else { Quantifier::Exists };
                                (q, v.clone())
                            })
                            .collect();
                        let phi = PhSentence::from_sequence(seq, matrix.clone())?;
                        if evaluate(a, &phi)?.truth && !evaluate(b, &phi)?.truth {
                            return Ok(Some(phi));
                        }
                    }
                }
                // next k-subset in lexicographic order
                let mut i = k;
                while i > 0 && pick[i - 1] == atoms.len() - k + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                pick[i - 1] += 1;
                for j in i..k {
                    pick[j] = pick[j - 1] + 1;
                }
            }
        }
    }
    Ok(None)
}

const EAGER_POWER_ELEMENTS: u128 = 256;
const EAGER_NODES: u64 = 100_000;

/// Decides `QCSP(a) ⊆ QCSP(b)`.
pub fn decide_containment(a: &Structure, b: &Structure, opts: &ContainmentOptions) -> Result<ContainmentVerdict> {
    check_inputs(a, b)?;
    let (bound, bound_kind) = exponent_bound(a, b, opts.bound)?;
    let verdict = |outcome| ContainmentVerdict {
        outcome,
        bound,
        bound_kind,
    };

    let start = opts.start.max(1);
    let last = match opts.cap {
        Some(c) if (c as u128) < bound => c as u128,
        _ => bound,
    };
    let mut r = start;

    if opts.refute {
        if find_hom(a, b, None, false)?.is_none() {
            return Ok(verdict(Outcome::No {
                refutation: Refutation::NoHomomorphism,
            }));
        }
        // small powers are cheaper than the superproduct refutations
        while (r as u128) <= last && checked_pow(a.size() as u128, r).is_some_and(|n| n <= EAGER_POWER_ELEMENTS) {
            let p = power(a, r, &opts.limits)?;
            let sopts = SearchOptions {
                surjective: true,
                max_nodes: Some(opts.max_nodes.map_or(EAGER_NODES, |n| n.min(EAGER_NODES))),
                ..SearchOptions::default()
            };
            match search(&p, b, &sopts)? {
                SearchOutcome::Found(witness) => return Ok(verdict(Outcome::Yes { r, witness })),
                SearchOutcome::NotFound => r += 1,
                SearchOutcome::Aborted => break,
            }
        }
        for m in 1..=b.size().min(2) {
            if let Some(mu) = refute_by_superproduct(a, b, m, opts.refute_elements)? {
                return Ok(verdict(Outcome::No {
                    refutation: Refutation::Superproduct { m, mu },
                }));
            }
            if m == 1 {
                if let Some(phi) = refute_by_small_sentences(a, b, opts.refute_sentences)? {
                    return Ok(verdict(Outcome::No {
                        refutation: Refutation::Sentence {
                            sentence: phi.to_string(),
                        },
                    }));
                }
            }
        }
    }

    while (r as u128) <= last {
        let p = match power(a, r, &opts.limits) {
            Ok(p) => p,
            Err(e) if e.is_resource() => {
                return Ok(verdict(Outcome::Inconclusive {
                    reached: r - 1,
                    reason: e.to_string(),
                }))
            }
            Err(e) => return Err(e),
        };
        let sopts = SearchOptions {
            surjective: true,
            max_nodes: opts.max_nodes,
            ..SearchOptions::default()
        };
        match search(&p, b, &sopts)? {
            SearchOutcome::Found(witness) => return Ok(verdict(Outcome::Yes { r, witness })),
            SearchOutcome::NotFound => {}
            SearchOutcome::Aborted => {
                return Ok(verdict(Outcome::Inconclusive {
                    reached: r - 1,
                    reason: format!("search budget exhausted at exponent {r}"),
                }))
            }
        }
        r += 1;
    }
    if last < bound {
        return Ok(verdict(Outcome::Inconclusive {
            reached: last as usize,
            reason: format!("exponent cap {last} is below the bound {bound}"),
        }));
    }
    Ok(verdict(Outcome::No {
        refutation: Refutation::BoundExhausted,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equivalence {
    /// `None` when either direction is inconclusive.
    pub equivalent: Option<bool>,
    pub forward: ContainmentVerdict,
    pub backward: ContainmentVerdict,
}

/// `QCSP(a) = QCSP(b)`.
pub fn equivalent(a: &Structure, b: &Structure, opts: &ContainmentOptions) -> Result<Equivalence> {
    let forward = decide_containment(a, b, opts)?;
    let backward = decide_containment(b, a, opts)?;
    let equivalent = if forward.is_no() || backward.is_no() {
        Some(false)
    } else if forward.is_yes() && backward.is_yes() {
        Some(true)
    } else {
        None
    };
    Ok(Equivalence {
        equivalent,
        forward,
        backward,
    })
}

/// The Π2 sentence of the superproduct of `a` with `m` constants, returned
/// only if it is verified true on `a` and false on `b`. Constants sharing
/// an element (only when `|a| = 1`) are tied by equality atoms.
pub fn distinguishing_sentence(a: &Structure, b: &Structure, m: usize, limits: &SizeLimits) -> Result<Option<PhSentence>> {
    check_inputs(a, b)?;
    let sp = superproduct(a, m, limits)?;
    let phi = superproduct_sentence(&sp)?;
    if evaluate(a, &phi)?.truth && !evaluate(b, &phi)?.truth {
        Ok(Some(phi))
    } else {
        Ok(None)
    }
}

fn superproduct_sentence(sp: &Structure) -> Result<PhSentence> {
    let mut first: Vec<Option<usize>> = vec![None; sp.size()];
    let mut ties = Vec::new();
    for (i, &c) in sp.constants().iter().enumerate() {
        match first[c] {
            Some(j) => ties.push((i, j)),
            None => first[c] = Some(i),
        }
    }
    if ties.is_empty() {
        return structure_to_sentence(sp);
    }
    let mut names: Vec<String> = vec![String::new(); sp.size()];
    let mut seq: Vec<(Quantifier, String)> =
        (1..=sp.constants().len()).map(|i| (Quantifier::Forall, format!("x{i}"))).collect();
    for (e, slot) in first.iter().enumerate() {
        if let Some(i) = slot {
            names[e] = format!("x{}", i + 1);
        }
    }
    for (k, name) in names.iter_mut().filter(|n| n.is_empty()).enumerate() {
        *name = format!("y{}", k + 1);
        seq.push((Quantifier::Exists, name.clone()));
    }
    let mut matrix: Vec<Atom> = ties
        .into_iter()
        .map(|(i, j)| Atom::eq(format!("x{}", i + 1), format!("x{}", j + 1)))
        .collect();
    for (sym, tuples) in sp.signature().relations().iter().zip(sp.relations()) {
        for t in tuples {
            matrix.push(Atom::Rel {
                relation: sym.name.clone(),
                args: t.iter().map(|&x| names[x].clone()).collect(),
            });
        }
    }
    PhSentence::from_sequence(seq, matrix)
}

/// `CSP(a) ⊆ CSP(b)`, i.e. `a -> b`.
pub fn csp_containment(a: &Structure, b: &Structure) -> Result<bool> {
    Ok(find_hom(a, b, None, false)?.is_some())
}
