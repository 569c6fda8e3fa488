//! Generators and property checks shared by the property tests and the
//! acceptance target.
#![allow(dead_code)]

use std::collections::BTreeSet;

use qcsp_core::containment::{decide_containment, distinguishing_sentence, ContainmentOptions, Outcome, Refutation};
use qcsp_core::entailment::{
    build_truncation_with, check_rel_cc_strategy, decide_entailment, skolemize, solve_rel_cc_game, Entailment,
    EntailmentOptions, SkolemForm, Truncation, TruncationLimits,
};
use qcsp_core::game::{evaluate, evaluate_pi2_via_superproduct, replay_strategy};
use qcsp_core::generate::{generate, Family};
use qcsp_core::hom::{find_hom, find_surjective_hom, verify_hom};
use qcsp_core::sentence::{classify, normalize_strict_alternation, parse_sentence, Atom, Quantifier};
use qcsp_core::structure::{disjoint_union, multiple, power, substructure};
use qcsp_core::{PhSentence, Signature, SizeLimits, Structure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<usize, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn family(s: &str) -> Structure {
    generate(&s.parse::<Family>().unwrap()).unwrap()
}

pub fn random_structure(rng: &mut impl Rng, sig: &Signature, n: usize, density: f64) -> Structure {
    let mut s = Structure::new(sig.clone(), n).unwrap();
    for r in sig.relations() {
        let total = n.pow(r.arity as u32);
        for code in 0..total {
            if rng.gen_bool(density) {
                let mut t = vec![0; r.arity];
                let mut rest = code;
                for x in t.iter_mut().rev() {
                    *x = rest % n;
                    rest /= n;
                }
                s.add_tuple(&r.name, t).unwrap();
            }
        }
    }
    s
}

/// Every digraph on `n` vertices.
pub fn all_digraphs(n: usize) -> Vec<Structure> {
    let cells = n * n;
    (0u32..1 << cells)
        .map(|mask| {
            let mut s = Structure::new(Signature::graph(), n).unwrap();
            for c in 0..cells {
                if mask >> c & 1 == 1 {
                    s.add_tuple("E", vec![c / n, c % n]).unwrap();
                }
            }
            s
        })
        .collect()
}

pub fn all_digraphs_up_to(n: usize) -> Vec<Structure> {
    (1..=n).flat_map(all_digraphs).collect()
}

/// A random sentence with at most `max_vars` variables over `sig`;
/// equality atoms appear with probability `eq`.
pub fn random_sentence(rng: &mut impl Rng, sig: &Signature, max_vars: usize, max_atoms: usize, eq: f64) -> PhSentence {
    let nv = rng.gen_range(1..=max_vars);
    let seq: Vec<(Quantifier, String)> = (0..nv)
        .map(|i| {
            let q = if rng.gen_bool(0.5) {
                Quantifier::Forall
            } else {
                Quantifier::Exists
            };
            (q, format!("v{i}"))
        })
        .collect();
    let atoms = rng.gen_range(1..=max_atoms);
    let mut matrix = Vec::new();
    for _ in 0..atoms {
        if rng.gen_bool(eq) {
            let x = rng.gen_range(0..nv);
            let y = rng.gen_range(0..nv);
            matrix.push(Atom::eq(format!("v{x}"), format!("v{y}")));
        } else {
            let r = &sig.relations()[rng.gen_range(0..sig.relations().len())];
            let args: Vec<String> = (0..r.arity).map(|_| format!("v{}", rng.gen_range(0..nv))).collect();
            matrix.push(Atom::Rel {
                relation: r.name.clone(),
                args,
            });
        }
    }
    PhSentence::from_sequence(seq, matrix).unwrap()
}

/// A random `forall .. exists ..` sentence.
pub fn random_pi2(rng: &mut impl Rng, sig: &Signature, u: usize, e: usize, max_atoms: usize) -> PhSentence {
    let mut seq: Vec<(Quantifier, String)> = (0..u).map(|i| (Quantifier::Forall, format!("x{i}"))).collect();
    seq.extend((0..e).map(|i| (Quantifier::Exists, format!("y{i}"))));
    let names: Vec<String> = seq.iter().map(|(_, v)| v.clone()).collect();
    let atoms = rng.gen_range(1..=max_atoms);
    let matrix = (0..atoms)
        .map(|_| {
            let r = &sig.relations()[rng.gen_range(0..sig.relations().len())];
            Atom::Rel {
                relation: r.name.clone(),
                args: (0..r.arity).map(|_| names[rng.gen_range(0..names.len())].clone()).collect(),
            }
        })
        .collect();
    PhSentence::from_sequence(seq, matrix).unwrap()
}

fn truth(a: &Structure, s: &PhSentence) -> bool {
    evaluate(a, s).unwrap().truth
}

/// The image of `a` under a random surjection onto `k` elements, with a
/// few extra tuples.
pub fn random_image(rng: &mut impl Rng, a: &Structure, k: usize) -> (Structure, Vec<usize>) {
    let mut h: Vec<usize> = (0..a.size()).map(|x| if x < k { x } else { rng.gen_range(0..k) }).collect();
    for i in (1..h.len()).rev() {
        let j = rng.gen_range(0..=i);
        h.swap(i, j);
    }
    let mut b = Structure::new(a.signature().clone(), k).unwrap();
    for (sym, tuples) in a.signature().relations().iter().zip(a.relations()) {
        for t in tuples {
            b.add_tuple(&sym.name, t.iter().map(|&x| h[x]).collect()).unwrap();
        }
    }
    let extra = random_structure(rng, a.signature(), k, 0.1);
    for (sym, tuples) in extra.signature().relations().iter().zip(extra.relations()) {
        for t in tuples {
            b.add_tuple(&sym.name, t.clone()).unwrap();
        }
    }
    (b, h)
}

fn graph_and_unary() -> Signature {
    Signature::new([("E", 2), ("U", 1)], 0).unwrap()
}

/// Surjective homomorphisms preserve positive Horn sentences.
pub fn images_preserve_truth(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let sig = graph_and_unary();
    let mut checked = 0;
    for case in 0..cases {
        let n = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &sig, n, 0.5);
        let k = rng.gen_range(1..=n);
        let (b, h) = random_image(&mut rng, &a, k);
        verify_hom(&a, &b, &h, false).map_err(|e| format!("case {case}: {e}"))?;
        let phi = random_sentence(&mut rng, &sig, 6, 4, 0.1);
        if truth(&a, &phi) && !truth(&b, &phi) {
            return Err(format!("case {case}: `{phi}` true on A but false on its image"));
        }
        checked += 1;
    }
    Ok(checked)
}

/// Sentences true on A stay true on A^2.
pub fn squares_preserve_truth(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let sig = graph_and_unary();
    for case in 0..cases {
        let n = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &sig, n, 0.5);
        let sq = power(&a, 2, &SizeLimits::DEFAULT).unwrap();
        let phi = random_sentence(&mut rng, &sig, 6, 4, 0.1);
        if truth(&a, &phi) && !truth(&sq, &phi) {
            return Err(format!("case {case}: `{phi}` true on A but false on A^2"));
        }
    }
    Ok(cases)
}

/// Every `forall .. exists ..` sentence over E with at most two variables
/// of each kind and at most three atoms (all atoms when there are at most
/// three variables) against every digraph on one or two vertices.
pub fn superproduct_oracle_exhaustive() -> Check {
    let structures = all_digraphs_up_to(2);
    let mut checked = 0;
    for u in 0..=2usize {
        for e in 0..=2usize {
            if u + e == 0 {
                continue;
            }
            let names: Vec<String> = (0..u)
                .map(|i| format!("x{i}"))
                .chain((0..e).map(|i| format!("y{i}")))
                .collect();
            let seq: Vec<(Quantifier, String)> = names
                .iter()
                .enumerate()
                .map(|(i, v)| (if i < u { Quantifier::Forall } else { Quantifier::Exists }, v.clone()))
                .collect();
            let atoms: Vec<Atom> = names
                .iter()
                .flat_map(|a| names.iter().map(move |b| Atom::rel("E", &[a, b])))
                .collect();
            let max_atoms = if names.len() <= 3 { atoms.len() } else { 3 };
            for mask in 0u32..1 << atoms.len() {
                if mask.count_ones() as usize > max_atoms {
                    continue;
                }
                let matrix = (0..atoms.len()).filter(|&i| mask >> i & 1 == 1).map(|i| atoms[i].clone()).collect();
                let s = PhSentence::from_sequence(seq.clone(), matrix).unwrap();
                for a in &structures {
                    let direct = truth(a, &s);
                    let via = evaluate_pi2_via_superproduct(a, &s, &SizeLimits::DEFAULT).map_err(|e| e.to_string())?;
                    if direct != via {
                        return Err(format!("`{s}` on a {}-element digraph: game {direct}, superproduct {via}", a.size()));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

/// Emitted strategies win against every line of Universal play.
pub fn strategy_replay(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let sig = graph_and_unary();
    let mut replayed = 0;
    for case in 0..cases {
        let n = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &sig, n, 0.6);
        let phi = random_sentence(&mut rng, &sig, 6, 3, 0.1);
        let r = evaluate(&a, &phi).unwrap();
        if let Some(s) = r.strategy {
            if !replay_strategy(&a, &phi, &s).unwrap() {
                return Err(format!("case {case}: strategy for `{phi}` does not replay"));
            }
            replayed += 1;
        }
    }
    Ok(replayed)
}

fn three_colourable(g: &Structure) -> bool {
    let n = g.size();
    let edges = g.tuples("E").unwrap();
    (0..3usize.pow(n as u32)).any(|code| {
        let mut colour = vec![0; n];
        let mut rest = code;
        for c in colour.iter_mut() {
            *c = rest % 3;
            rest /= 3;
        }
        edges.iter().all(|t| colour[t[0]] != colour[t[1]])
    })
}

/// G is 3-colourable iff G + 3K1 maps onto K3, for every graph on at most
/// five vertices.
pub fn three_colouring_reduction() -> Check {
    let k3 = family("clique:3");
    let k1 = family("clique:1");
    let three = multiple(&k1, 3).unwrap();
    let mut checked = 0;
    for n in 1..=5usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        for mask in 0u32..1 << pairs.len() {
            let mut g = Structure::new(Signature::graph(), n).unwrap();
            for (k, &(i, j)) in pairs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    g.add_tuple("E", vec![i, j]).unwrap();
                    g.add_tuple("E", vec![j, i]).unwrap();
                }
            }
            let brute = three_colourable(&g);
            let union = disjoint_union(&g, &three).unwrap();
            let onto = find_surjective_hom(&union, &k3, false).unwrap().is_some();
            if brute != onto {
                return Err(format!("graph {mask:b} on {n} vertices: brute force {brute}, surjection {onto}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// A random sentence for truncation tests: at most two universals after
/// strict alternation, so Skolem arities stay at most 2.
pub fn random_premise(rng: &mut impl Rng) -> PhSentence {
    let sig = graph_and_unary();
    loop {
        let s = random_sentence(rng, &sig, 4, 3, 0.0);
        let form = skolemize(&s).unwrap();
        if form.depth() <= 2 && !form.functions().is_empty() {
            return s;
        }
    }
}

fn truncation(form: &SkolemForm, l: usize, m: usize) -> Truncation {
    build_truncation_with(form, l, m, &TruncationLimits::default()).unwrap()
}

/// |T^m(C_2)| <= 2^((k+1)^m).
pub fn truncation_size_bound(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for case in 0..cases {
        let phi = random_premise(&mut rng);
        let form = skolemize(&phi).unwrap();
        let k = form.depth() as u32;
        let m = rng.gen_range(0..=2u32);
        let t = truncation(&form, 2, m as usize);
        let bound = 2u128.pow((k + 1).pow(m));
        if t.len() as u128 > bound {
            return Err(format!("case {case}: `{phi}` has {} terms at rank {m}, bound {bound}", t.len()));
        }
    }
    Ok(cases)
}

/// T^m is the substructure of T^(m+1) induced on its terms.
pub fn truncation_nesting(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for case in 0..cases {
        let form = skolemize(&random_premise(&mut rng)).unwrap();
        let l = rng.gen_range(1..=2);
        let m = rng.gen_range(0..=1);
        let small = truncation(&form, l, m);
        let big = truncation(&form, l, m + 1);
        let n = small.len();
        if big.terms_up_to_rank(m) != n {
            return Err(format!("case {case}: rank-{m} prefix differs in size"));
        }
        for i in 0..n {
            if small.term(i) != big.term(i) {
                return Err(format!("case {case}: term {i} differs"));
            }
        }
        for (rel, facts) in big.all_facts() {
            let restricted: BTreeSet<Vec<usize>> = facts.iter().filter(|f| f.iter().all(|&x| x < n)).cloned().collect();
            if small.facts(rel) != Some(&restricted) {
                return Err(format!("case {case}: facts of {rel} differ on shared terms"));
            }
        }
    }
    Ok(cases)
}

/// Replacing a constant by another everywhere in a fact gives a fact;
/// permuting the constants is an automorphism.
pub fn constant_substitution_and_permutation(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for case in 0..cases {
        let form = skolemize(&random_premise(&mut rng)).unwrap();
        let l = rng.gen_range(2..=3);
        let m = rng.gen_range(0..=2);
        let Ok(t) = build_truncation_with(&form, l, m, &TruncationLimits { max_terms: 5_000, ..TruncationLimits::default() })
        else {
            continue;
        };
        for (rel, facts) in t.all_facts() {
            for f in facts {
                for c in 0..l {
                    for d in 0..l {
                        let g: Vec<usize> = f.iter().map(|&x| t.map_constants(x, &|k| if k == c { d } else { k })).collect();
                        if !t.has_fact(rel, &g) {
                            return Err(format!("case {case}: {rel}{f:?} with c{} -> c{} is not a fact", c + 1, d + 1));
                        }
                    }
                }
            }
        }
        let perm: Vec<usize> = (0..l).map(|i| (i + 1) % l).collect();
        let image = t.permutation_table(&perm);
        let distinct: BTreeSet<usize> = image.iter().copied().collect();
        if distinct.len() != t.len() {
            return Err(format!("case {case}: permutation is not a bijection on terms"));
        }
        for (rel, facts) in t.all_facts() {
            for f in facts {
                let g: Vec<usize> = f.iter().map(|&x| image[x]).collect();
                if !t.has_fact(rel, &g) {
                    return Err(format!("case {case}: permutation loses {rel}{f:?}"));
                }
            }
        }
    }
    Ok(cases)
}

/// Substituting a term whose rank differs from every argument of a fact
/// by a term of no larger rank gives a fact.
pub fn distinct_rank_substitution(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut applied = 0;
    for case in 0..cases {
        let form = skolemize(&random_premise(&mut rng)).unwrap();
        let t = truncation(&form, 2, 2);
        let n = t.len();
        for _ in 0..20 {
            let old = rng.gen_range(0..n);
            let new = rng.gen_range(0..t.terms_up_to_rank(t.rank(old)));
            let (old_t, new_t) = (t.term(old), t.term(new));
            for (rel, facts) in t.all_facts() {
                for f in facts {
                    if f.iter().any(|&x| t.rank(x) == t.rank(old)) {
                        continue;
                    }
                    let g: Option<Vec<usize>> = f.iter().map(|&x| t.index_of(&t.term(x).substitute(&old_t, &new_t))).collect();
                    match g {
                        Some(g) if t.has_fact(rel, &g) => applied += 1,
                        _ => return Err(format!("case {case}: {rel}{f:?} under [{old}/{new}] is not a fact")),
                    }
                }
            }
        }
    }
    Ok(applied)
}

/// Adds unary relations `N_c` holding on terms without constant `c`; a
/// homomorphism of the expanded structures is constant-conservative.
fn with_support_relations(t: &Truncation, keep: &[usize]) -> Structure {
    let l = t.constant_count();
    let mut rels: Vec<(String, usize)> = t
        .form()
        .signature()
        .relations()
        .iter()
        .map(|r| (r.name.clone(), r.arity))
        .collect();
    rels.extend((0..l).map(|c| (format!("N{c}"), 1)));
    let sig = Signature::new(rels, 0).unwrap();
    let mut index = vec![usize::MAX; t.len()];
    for (i, &x) in keep.iter().enumerate() {
        index[x] = i;
    }
    let mut s = Structure::new(sig, keep.len()).unwrap();
    for (rel, facts) in t.all_facts() {
        for f in facts {
            if f.iter().all(|&x| index[x] != usize::MAX) {
                s.add_tuple(rel, f.iter().map(|&x| index[x]).collect()).unwrap();
            }
        }
    }
    for (i, &x) in keep.iter().enumerate() {
        let support = t.term(x).support().clone();
        for c in 0..l {
            if !support.contains(&c) {
                s.add_tuple(&format!("N{c}"), vec![i]).unwrap();
            }
        }
    }
    s
}

/// Every small induced substructure of a truncation maps
/// constant-conservatively into the truncation at rank |S|.
pub fn small_substructures_map_down(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for case in 0..cases {
        let form = skolemize(&random_premise(&mut rng)).unwrap();
        let Ok(big) = build_truncation_with(&form, 2, 5, &TruncationLimits { max_terms: 3_000, ..TruncationLimits::default() })
        else {
            continue;
        };
        let size = rng.gen_range(1..=4usize);
        let mut keep: BTreeSet<usize> = BTreeSet::new();
        while keep.len() < size.min(big.len()) {
            keep.insert(rng.gen_range(0..big.len()));
        }
        let keep: Vec<usize> = keep.into_iter().collect();
        let s = with_support_relations(&big, &keep);
        let low = truncation(&form, 2, keep.len().min(5));
        let all: Vec<usize> = (0..low.len()).collect();
        let target = with_support_relations(&low, &all);
        if find_hom(&s, &target, None, false).unwrap().is_none() {
            return Err(format!("case {case}: no constant-conservative map for terms {keep:?}"));
        }
    }
    Ok(cases)
}

/// A win at rank m replays at rank m+1.
pub fn rank_monotonicity(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let sig = Signature::graph();
    let mut wins = 0;
    for _ in 0..cases {
        let form = skolemize(&random_premise(&mut rng)).unwrap();
        let (u, e) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let psi = random_pi2(&mut rng, &sig, u, e, 3);
        let l = normalize_strict_alternation(&psi).universal_variables().len();
        for m in 0..=1 {
            let t = truncation(&form, l, m);
            let r = solve_rel_cc_game(&t, &psi).map_err(|e| e.to_string())?;
            if let (true, Some(s)) = (r.wins, r.strategy) {
                let next = truncation(&form, l, m + 1);
                if !check_rel_cc_strategy(&next, &psi, &s).unwrap() {
                    return Err(format!("win for `{psi}` at rank {m} does not replay"));
                }
                wins += 1;
            }
        }
    }
    Ok(wins)
}

fn weaken(rng: &mut impl Rng, s: &PhSentence) -> PhSentence {
    let seq: Vec<(Quantifier, String)> = s.variables().into_iter().map(|(q, v)| (q, v.to_string())).collect();
    let matrix: Vec<Atom> = s.matrix().iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
    PhSentence::from_sequence(seq, matrix).unwrap()
}

/// A Yes from the entailment procedure is never contradicted by a model
/// with at most three elements. Returns the number of Yes answers checked.
pub fn entailment_soundness(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let sig = Signature::graph();
    let models = all_digraphs_up_to(3);
    let opts = EntailmentOptions {
        max_terms: 2_000,
        max_states: 200_000,
        ..EntailmentOptions::default()
    };
    let mut yes = 0;
    for case in 0..cases {
        let phi = random_sentence(&mut rng, &sig, 4, 3, 0.05);
        let psi = if case % 3 == 0 {
            weaken(&mut rng, &phi)
        } else {
            random_sentence(&mut rng, &sig, 3, 3, 0.05)
        };
        let r = decide_entailment(&phi, &psi, &opts).map_err(|e| format!("case {case}: {e}"))?;
        if r.verdict != Entailment::Yes {
            continue;
        }
        yes += 1;
        for a in &models {
            if truth(a, &phi) && !truth(a, &psi) {
                return Err(format!("case {case}: claimed `{phi}` entails `{psi}`, refuted on a {}-element model", a.size()));
            }
        }
    }
    Ok(yes)
}

/// Yes verdicts are never contradicted by random sentences.
pub fn containment_soundness(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let sig = graph_and_unary();
    let opts = ContainmentOptions {
        cap: Some(4),
        ..ContainmentOptions::default()
    };
    let mut checked = 0;
    while checked < cases {
        let n = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &sig, n, 0.5);
        let k = rng.gen_range(1..=n);
        let b = if rng.gen_bool(0.5) {
            random_image(&mut rng, &a, k).0
        } else {
            let m = rng.gen_range(1..=3);
            random_structure(&mut rng, &sig, m, 0.5)
        };
        let v = decide_containment(&a, &b, &opts).unwrap();
        if let Outcome::Yes { r, witness } = &v.outcome {
            let p = power(&a, *r, &SizeLimits::DEFAULT).unwrap();
            verify_hom(&p, &b, &witness.mapping, false)?;
            for _ in 0..10 {
                let phi = random_sentence(&mut rng, &sig, 6, 4, 0.1);
                if truth(&a, &phi) && !truth(&b, &phi) {
                    return Err(format!("containment claimed but `{phi}` separates"));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Superproduct refutations come with a Π2 sentence true on A, false on B.
pub fn refutations_are_pi2(cases: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let sig = Signature::graph();
    let mut found = 0;
    for _ in 0..cases {
        let (na, nb) = (rng.gen_range(1..=2), rng.gen_range(1..=3));
        let a = random_structure(&mut rng, &sig, na, 0.5);
        let b = random_structure(&mut rng, &sig, nb, 0.5);
        let v = decide_containment(&a, &b, &ContainmentOptions::default()).unwrap();
        if let Outcome::No {
            refutation: Refutation::Superproduct { m, .. },
        } = v.outcome
        {
            let s = distinguishing_sentence(&a, &b, m, &SizeLimits::DEFAULT)
                .unwrap()
                .ok_or("superproduct refutation without a distinguishing sentence")?;
            if !classify(&s).is_pi2 {
                return Err(format!("`{s}` is not of the form forall .. exists .."));
            }
            found += 1;
        }
    }
    Ok(found)
}

pub fn parse(s: &str) -> PhSentence {
    parse_sentence(s).unwrap()
}

/// Builds a weak substructure from element and per-relation tuple lists.
pub fn weak(a: &Structure, elements: &[usize], tuples: &[(&str, Vec<usize>)]) -> Structure {
    let mut keep = vec![BTreeSet::new(); a.relations().len()];
    for (rel, t) in tuples {
        keep[a.signature().index_of(rel).unwrap()].insert(t.clone());
    }
    substructure(a, &elements.iter().copied().collect(), &keep).unwrap()
}
