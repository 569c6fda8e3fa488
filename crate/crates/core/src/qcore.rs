//! Q-cores: least weak substructures with the same positive Horn theory.

use std::collections::BTreeSet;

use crate::containment::{decide_containment, ContainmentOptions, ContainmentVerdict};
use crate::error::{Error, Result};
use crate::hom::{find_hom, find_surjective_hom, HomWitness};
use crate::structure::{expansion, power, substructure, SizeLimits, Structure, Tuple};

#[derive(Debug, Clone)]
pub struct QcoreOptions {
    pub max_size: usize,
    /// Largest number of weak substructures examined.
    pub max_candidates: usize,
    pub containment: ContainmentOptions,
}

impl Default for QcoreOptions {
    fn default() -> Self {
        QcoreOptions {
            max_size: 5,
            max_candidates: 200_000,
            containment: ContainmentOptions::default(),
        }
    }
}

/// A weak substructure given by original element and tuple indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub elements: BTreeSet<usize>,
    /// `(relation index, tuple)` in original element numbering.
    pub tuples: BTreeSet<(usize, Tuple)>,
}

impl Candidate {
    pub fn build(&self, a: &Structure) -> Result<Structure> {
        let mut keep = vec![BTreeSet::new(); a.relations().len()];
        for (r, t) in &self.tuples {
            keep[*r].insert(t.clone());
        }
        substructure(a, &self.elements, &keep)
    }

    fn is_induced(&self, a: &Structure) -> bool {
        let all = induced_tuples(a, &self.elements);
        all.len() == self.tuples.len()
    }

    /// Candidates obtained by dropping one tuple, or one element together
    /// with its tuples.
    pub fn immediate_weakenings(&self) -> Vec<(Removal, Candidate)> {
        let mut out = Vec::new();
        for &x in &self.elements {
            if self.elements.len() == 1 {
                break;
            }
            let mut c = self.clone();
            c.elements.remove(&x);
            c.tuples.retain(|(_, t)| !t.contains(&x));
            out.push((Removal::Element(x), c));
        }
        for rt in &self.tuples {
            let mut c = self.clone();
            c.tuples.remove(rt);
            out.push((
                Removal::Tuple {
                    relation: rt.0,
                    tuple: rt.1.clone(),
                },
                c,
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Removal {
    Element(usize),
    Tuple { relation: usize, tuple: Tuple },
}

/// Which inclusion of theories fails for a candidate `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// `QCSP(A) ⊄ QCSP(B)`.
    Forward(ContainmentVerdict),
    /// `QCSP(B) ⊄ QCSP(A)`.
    Backward(ContainmentVerdict),
}

#[derive(Debug, Clone)]
pub struct SubCandidate {
    pub removal: Removal,
    pub candidate: Candidate,
    pub failure: Failure,
}

#[derive(Debug, Clone)]
pub struct QcoreReport {
    pub qcore: Structure,
    pub candidate: Candidate,
    pub is_induced: bool,
    /// `A^r ->> B`.
    pub forward: ContainmentVerdict,
    /// `B^r ->> A`.
    pub backward: ContainmentVerdict,
    pub minimality: Vec<SubCandidate>,
    pub examined: usize,
    /// Candidates before the result whose equivalence stayed undecided.
    pub unresolved: usize,
    /// Minimality is not established: some check was inconclusive or a
    /// cap was hit.
    pub inconclusive: bool,
}

fn induced_tuples(a: &Structure, elements: &BTreeSet<usize>) -> Vec<(usize, Tuple)> {
    let mut out = Vec::new();
    for (r, tuples) in a.relations().iter().enumerate() {
        for t in tuples {
            if t.iter().all(|x| elements.contains(x)) {
                out.push((r, t.clone()));
            }
        }
    }
    out
}

fn combinations(n: usize, k: usize, mut visit: impl FnMut(&[usize]) -> bool) -> bool {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return true;
    }
    loop {
        if !visit(&idx) {
            return false;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return true;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

enum Check {
    Equivalent(ContainmentVerdict, ContainmentVerdict),
    Fails(Failure),
    Unknown,
}

fn check(a: &Structure, b: &Structure, opts: &ContainmentOptions) -> Result<Check> {
    let forward = decide_containment(a, b, opts)?;
    if forward.is_no() {
        return Ok(Check::Fails(Failure::Forward(forward)));
    }
    let backward = decide_containment(b, a, opts)?;
    if backward.is_no() {
        return Ok(Check::Fails(Failure::Backward(backward)));
    }
    if forward.is_yes() && backward.is_yes() {
        return Ok(Check::Equivalent(forward, backward));
    }
    Ok(Check::Unknown)
}

/// The first weak substructure of `a`, in order of domain size, tuple
/// count and then lexicographically, with the same positive Horn theory as
/// `a`. Everything before it in that order has been checked, so it is
/// minimal under inclusion unless the report says otherwise.
pub fn find_qcore(a: &Structure, opts: &QcoreOptions) -> Result<QcoreReport> {
    if a.signature().constant_count() > 0 {
        return Err(Error::InvalidArgument("Q-cores are defined for constant-free structures".into()));
    }
    if a.size() == 0 || a.size() > opts.max_size {
        return Err(Error::InvalidArgument(format!(
            "Q-core search supports 1..={} elements, got {}",
            opts.max_size,
            a.size()
        )));
    }
    let n = a.size();
    let mut examined = 0usize;
    let mut unresolved = 0usize;
    let mut capped = false;
    let mut found: Option<(Candidate, ContainmentVerdict, ContainmentVerdict)> = None;
    'sizes: for s in 1..=n {
        let domains: Vec<BTreeSet<usize>> = {
            let mut v = Vec::new();
            combinations(n, s, |idx| {
                v.push(idx.iter().copied().collect());
                true
            });
            v
        };
        let induced: Vec<Vec<(usize, Tuple)>> = domains.iter().map(|d| induced_tuples(a, d)).collect();
        let most = induced.iter().map(Vec::len).max().unwrap_or(0);
        for k in 0..=most {
            for (d, tuples) in domains.iter().zip(&induced) {
                let mut err = None;
                combinations(tuples.len(), k, |idx| {
                    if examined >= opts.max_candidates {
                        capped = true;
                        return false;
                    }
                    examined += 1;
                    let c = Candidate {
                        elements: d.clone(),
                        tuples: idx.iter().map(|&i| tuples[i].clone()).collect(),
                    };
                    let result = c.build(a).and_then(|b| {
                        // a -> b is necessary and much cheaper than containment
                        if find_hom(a, &b, None, false)?.is_none() {
                            return Ok(None);
                        }
                        check(a, &b, &opts.containment).map(Some)
                    });
                    match result {
                        Ok(Some(Check::Equivalent(f, b))) => {
                            found = Some((c, f, b));
                            false
                        }
                        Ok(Some(Check::Unknown)) => {
                            unresolved += 1;
                            true
                        }
                        Ok(_) => true,
                        Err(e) => {
                            err = Some(e);
                            false
                        }
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
                if found.is_some() || capped {
                    break 'sizes;
                }
            }
        }
    }
    let (candidate, forward, backward) = match found {
        Some(f) => f,
        None => {
            // the whole structure is always equivalent to itself
            let whole = Candidate {
                elements: (0..n).collect(),
                tuples: induced_tuples(a, &(0..n).collect()).into_iter().collect(),
            };
            let f = decide_containment(a, a, &opts.containment)?;
            (whole, f.clone(), f)
        }
    };
    let qcore = candidate.build(a)?.named(format!("qcore({})", a.name()));
    let mut minimality = Vec::new();
    let mut inconclusive = capped || unresolved > 0;
    for (removal, c) in candidate.immediate_weakenings() {
        let b = c.build(a)?;
        match check(a, &b, &opts.containment)? {
            Check::Fails(failure) => minimality.push(SubCandidate {
                removal,
                candidate: c,
                failure,
            }),
            _ => inconclusive = true,
        }
    }
    Ok(QcoreReport {
        is_induced: candidate.is_induced(a),
        qcore,
        candidate,
        forward,
        backward,
        minimality,
        examined,
        unresolved,
        inconclusive,
    })
}

#[derive(Debug, Clone)]
pub struct ObstructionCheck {
    pub holds: bool,
    /// The square of `h` with constants on the non-loop and the dominating
    /// vertex.
    pub square: Structure,
    /// `h` with both constants on the dominating vertex.
    pub target: Structure,
    pub witness: Option<HomWitness>,
}

/// Whether `(H; h0, h1)^2 ->> (H; h1, h1)` for a non-loop `h0` and a
/// dominating vertex `h1` of the digraph `h`.
pub fn check_idempotency_obstruction(h: &Structure, nonloop: usize, dominating: usize) -> Result<ObstructionCheck> {
    let sig = h.signature();
    if sig.constant_count() > 0 || sig.relations().len() != 1 || sig.relations()[0].arity != 2 {
        return Err(Error::InvalidArgument("expected a digraph without constants".into()));
    }
    if nonloop >= h.size() || dominating >= h.size() {
        return Err(Error::InvalidArgument("vertex out of range".into()));
    }
    if h.has_tuple(0, &[nonloop, nonloop]) {
        return Err(Error::InvalidArgument(format!("vertex {} has a loop", h.label(nonloop))));
    }
    for y in 0..h.size() {
        if !h.has_tuple(0, &[dominating, y]) || !h.has_tuple(0, &[y, dominating]) {
            return Err(Error::InvalidArgument(format!(
                "vertex {} is not dominating: missing an edge with {}",
                h.label(dominating),
                h.label(y)
            )));
        }
    }
    let square = power(&expansion(h, &[nonloop, dominating])?, 2, &SizeLimits::DEFAULT)?;
    let target = expansion(h, &[dominating, dominating])?;
    let witness = find_surjective_hom(&square, &target, true)?;
    Ok(ObstructionCheck {
        holds: witness.is_some(),
        square,
        target,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, Family};
    use crate::hom::verify_hom;

    fn g(s: &str) -> Structure {
        generate(&s.parse::<Family>().unwrap()).unwrap()
    }

    #[test]
    fn erg_qcore_is_not_induced() {
        let a = g("erg");
        let r = find_qcore(&a, &QcoreOptions::default()).unwrap();
        assert!(!r.inconclusive);
        assert!(!r.is_induced);
        assert_eq!(r.qcore.size(), 3);
        assert_eq!(r.qcore.tuples("R").unwrap().iter().collect::<Vec<_>>(), vec![&vec![0]]);
        assert_eq!(r.qcore.tuples("G").unwrap().iter().collect::<Vec<_>>(), vec![&vec![0]]);
        assert_eq!(r.qcore.tuples("E").unwrap().len(), 3);
        assert!(r.forward.is_yes() && r.backward.is_yes());
        assert_eq!(r.minimality.len(), r.candidate.immediate_weakenings().len());
    }

    #[test]
    fn six_cycle_to_edge() {
        let opts = QcoreOptions {
            max_size: 6,
            ..QcoreOptions::default()
        };
        let r = find_qcore(&g("cycle:6"), &opts).unwrap();
        assert_eq!((r.qcore.size(), r.qcore.tuple_count()), (2, 2));
        assert!(!r.inconclusive);
    }

    #[test]
    fn triangle_is_its_own() {
        let r = find_qcore(&g("clique:3"), &QcoreOptions::default()).unwrap();
        assert_eq!((r.qcore.size(), r.qcore.tuple_count()), (3, 6));
        assert!(r.is_induced && !r.inconclusive);
    }

    #[test]
    fn p01_square() {
        let c = check_idempotency_obstruction(&g("p01"), 0, 1).unwrap();
        assert!(c.holds);
        assert_eq!(c.square.size(), 4);
        let w = c.witness.unwrap();
        verify_hom(&c.square, &c.target, &w.mapping, true).unwrap();
        assert!(w.surjective);
    }

    #[test]
    fn obstruction_preconditions() {
        assert!(check_idempotency_obstruction(&g("k1s"), 0, 0).is_err());
        let p = g("path:00");
        assert!(check_idempotency_obstruction(&p, 0, 1).is_err());
    }
}
