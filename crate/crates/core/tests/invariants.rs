mod common;

use std::collections::BTreeSet;

use common::*;
use qcsp_core::containment::{decide_containment, equivalent, ContainmentOptions};
use qcsp_core::format::{structure_from_json, structure_to_json};
use qcsp_core::game::evaluate;
use qcsp_core::hom::{automorphisms, find_hom, find_majority_polymorphism, find_surjective_hom, orbit_count, verify_hom};
use qcsp_core::qcore::{find_qcore, Failure, QcoreOptions};
use qcsp_core::sentence::{
    classify, normalize_strict_alternation, parse_sentence, propagate_equalities, sentence_to_structure,
    structure_to_sentence,
};
use qcsp_core::structure::{power, power_coordinates, product, substructure, superproduct};
use qcsp_core::{Signature, SizeLimits, Structure};
use rand::Rng;

const L: SizeLimits = SizeLimits::DEFAULT;

fn sig() -> Signature {
    Signature::new([("E", 2), ("U", 1)], 0).unwrap()
}

#[test]
fn product_swaps_and_reassociates() {
    let mut rng = rng(101);
    for _ in 0..200 {
        let (na, nb, nc) = (rng.gen_range(2..=3), rng.gen_range(2..=3), rng.gen_range(2..=3));
        let a = random_structure(&mut rng, &sig(), na, 0.5);
        let b = random_structure(&mut rng, &sig(), nb, 0.5);
        let c = random_structure(&mut rng, &sig(), nc, 0.5);
        let ab = product(&a, &b, &L).unwrap();
        let ba = product(&b, &a, &L).unwrap();
        let swap: Vec<usize> = (0..ab.size()).map(|i| (i % nb) * na + i / nb).collect();
        verify_hom(&ab, &ba, &swap, false).unwrap();
        assert_eq!(swap.iter().copied().collect::<BTreeSet<_>>().len(), ab.size());
        assert_eq!(ab.tuple_count(), ba.tuple_count());
        let left = product(&ab, &c, &L).unwrap();
        let right = product(&a, &product(&b, &c, &L).unwrap(), &L).unwrap();
        assert!(left.same_content(&right));
    }
}

#[test]
fn power_projections_are_surjective_homs() {
    let mut rng = rng(102);
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &sig(), n, 0.5);
        let r = rng.gen_range(1..=3);
        let p = power(&a, r, &L).unwrap();
        assert_eq!(p.size(), n.pow(r as u32));
        for k in 0..r {
            let proj: Vec<usize> = (0..p.size()).map(|x| power_coordinates(n, r, x)[k]).collect();
            verify_hom(&p, &a, &proj, false).unwrap();
        }
        assert!(power(&a, 1, &L).unwrap().same_content(&a));
    }
}

#[test]
fn superproduct_reduct_is_a_power() {
    let mut rng = rng(103);
    for _ in 0..50 {
        let n = rng.gen_range(1..=2);
        let a = random_structure(&mut rng, &sig(), n, 0.5);
        let m = rng.gen_range(1..=2);
        let sp = superproduct(&a, m, &L).unwrap();
        assert_eq!(sp.signature().constant_count(), m);
        let p = power(&a, n.pow(m as u32), &L).unwrap();
        assert!(sp.relational_reduct().same_content(&p));
    }
}

#[test]
fn full_substructure_and_json_round_trip() {
    let mut rng = rng(104);
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let a = random_structure(&mut rng, &sig(), n, 0.4);
        let all: BTreeSet<usize> = (0..n).collect();
        let same = substructure(&a, &all, a.relations()).unwrap();
        assert!(same.same_content(&a));
        let back = structure_from_json(&structure_to_json(&a)).unwrap();
        assert!(back.same_content(&a));
        assert_eq!(structure_to_json(&back), structure_to_json(&a));
    }
}

#[test]
fn sentences_print_and_parse_back() {
    let mut rng = rng(105);
    for _ in 0..500 {
        let s = random_sentence(&mut rng, &sig(), 6, 4, 0.2);
        assert_eq!(parse_sentence(&s.to_string()).unwrap(), s, "{s}");
    }
}

#[test]
fn rewriting_preserves_truth() {
    let mut rng = rng(106);
    let models = all_digraphs_up_to(2);
    let g = Signature::graph();
    for _ in 0..500 {
        let s = random_sentence(&mut rng, &g, 5, 4, 0.3);
        let n = normalize_strict_alternation(&s);
        let shape = classify(&s);
        let flat = (!shape.is_degenerate).then(|| propagate_equalities(&s).unwrap());
        for a in &models {
            let t = evaluate(a, &s).unwrap().truth;
            assert_eq!(evaluate(a, &n).unwrap().truth, t, "{s} vs {n}");
            if let Some(f) = &flat {
                assert_eq!(evaluate(a, f).unwrap().truth, t, "{s} vs {f}");
            }
        }
        if shape.is_pi2 {
            assert!(shape.depth <= 1);
        }
        if shape.is_degenerate {
            assert!(shape.has_equality);
        }
    }
}

#[test]
fn pi2_sentences_and_structures_correspond() {
    let mut rng = rng(107);
    for _ in 0..300 {
        let (u, e) = (rng.gen_range(1..=3), rng.gen_range(0..=3));
        let s = random_pi2(&mut rng, &sig(), u, e, 4);
        let d = sentence_to_structure(&s).unwrap();
        assert_eq!(d.size(), u + e);
        let back = structure_to_sentence(&d).unwrap();
        assert!(sentence_to_structure(&back).unwrap().same_content(&d));
    }
}

#[test]
fn automorphisms_form_a_group() {
    let mut rng = rng(108);
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let a = random_structure(&mut rng, &Signature::graph(), n, 0.4);
        let group = automorphisms(&a, n).unwrap();
        let set: BTreeSet<Vec<usize>> = group.iter().cloned().collect();
        assert!(set.contains(&(0..n).collect::<Vec<_>>()));
        for g in &group {
            verify_hom(&a, &a, g, false).unwrap();
            for h in &group {
                let gh: Vec<usize> = (0..n).map(|x| g[h[x]]).collect();
                assert!(set.contains(&gh));
            }
        }
        // orbits of pairs against brute force
        let mut seen = BTreeSet::new();
        let mut orbits = 0u128;
        for x in 0..n {
            for y in 0..n {
                if seen.insert((x, y)) {
                    orbits += 1;
                    for g in &group {
                        seen.insert((g[x], g[y]));
                    }
                }
            }
        }
        assert_eq!(orbit_count(&a, 2, 24, 1_000_000).unwrap(), orbits);
    }
}

#[test]
fn homomorphism_witnesses_verify_and_repeat() {
    let mut rng = rng(109);
    for _ in 0..300 {
        let (na, nb) = (rng.gen_range(1..=4), rng.gen_range(1..=3));
        let a = random_structure(&mut rng, &sig(), na, 0.3);
        let b = random_structure(&mut rng, &sig(), nb, 0.6);
        if let Some(w) = find_hom(&a, &b, None, false).unwrap() {
            verify_hom(&a, &b, &w.mapping, false).unwrap();
        }
        let s1 = find_surjective_hom(&a, &b, false).unwrap();
        let s2 = find_surjective_hom(&a, &b, false).unwrap();
        assert_eq!(s1, s2);
        if let Some(w) = s1 {
            verify_hom(&a, &b, &w.mapping, false).unwrap();
            assert_eq!(w.mapping.iter().collect::<BTreeSet<_>>().len(), nb);
        }
    }
}

#[test]
fn majority_polymorphisms_satisfy_identities() {
    let mut rng = rng(110);
    let mut found = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &Signature::graph(), n, 0.5);
        let Some(f) = find_majority_polymorphism(&a, &L).unwrap() else {
            continue;
        };
        found += 1;
        let cube = power(&a, 3, &L).unwrap();
        verify_hom(&cube, &a, &f, false).unwrap();
        let at = |x: usize, y: usize, z: usize| f[(x * n + y) * n + z];
        for x in 0..n {
            for y in 0..n {
                assert_eq!(at(x, x, y), x);
                assert_eq!(at(x, y, x), x);
                assert_eq!(at(y, x, x), x);
            }
        }
    }
    assert!(found > 10);
}

#[test]
fn containment_exponents_are_monotone() {
    let mut rng = rng(111);
    let mut checked = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &sig(), n, 0.5);
        let k = rng.gen_range(1..=n);
        let (b, _) = random_image(&mut rng, &a, k);
        let v = decide_containment(&a, &b, &ContainmentOptions::default()).unwrap();
        let qcsp_core::containment::Outcome::Yes { r, .. } = v.outcome else {
            panic!("an image must be reached: {v:?}");
        };
        let next = ContainmentOptions {
            start: r + 1,
            bound: qcsp_core::containment::BoundChoice::Fixed(r as u128 + 1),
            refute: false,
            ..ContainmentOptions::default()
        };
        match decide_containment(&a, &b, &next).unwrap().outcome {
            qcsp_core::containment::Outcome::Yes { r: s, witness } => {
                assert_eq!(s, r + 1);
                let p = power(&a, s, &L).unwrap();
                verify_hom(&p, &b, &witness.mapping, false).unwrap();
                checked += 1;
            }
            other => panic!("exponent {} lost: {other:?}", r + 1),
        }
    }
    assert_eq!(checked, 100);
}

fn check_report(a: &Structure, opts: &QcoreOptions) {
    let rep = find_qcore(a, opts).unwrap();
    assert!(!rep.inconclusive, "{}\n{rep:?}", structure_to_json(a));
    assert!(rep.forward.is_yes() && rep.backward.is_yes());
    assert!(rep.qcore.size() <= a.size());
    assert!(rep.candidate.build(a).unwrap().same_content(&rep.qcore));
    let copts = &opts.containment;
    let weakenings = rep.candidate.immediate_weakenings();
    assert_eq!(rep.minimality.len(), weakenings.len());
    for sub in &rep.minimality {
        let b = sub.candidate.build(a).unwrap();
        match &sub.failure {
            Failure::Forward(_) => assert!(!decide_containment(a, &b, copts).unwrap().is_yes()),
            Failure::Backward(_) => assert!(!decide_containment(&b, a, copts).unwrap().is_yes()),
        }
    }
}

#[test]
fn qcore_reports_reverify() {
    let mut rng = rng(112);
    let opts = QcoreOptions::default();
    for _ in 0..40 {
        let n = rng.gen_range(1..=3);
        let a = random_structure(&mut rng, &Signature::graph(), n, 0.5);
        check_report(&a, &opts);
    }
    for name in ["clique:3", "clique:2", "p01", "k1s", "erg"] {
        check_report(&family(name), &opts);
    }
}

#[test]
fn dominating_vertex_graphs_match_p01() {
    let mut rng = rng(113);
    let p01 = family("p01");
    let opts = ContainmentOptions::default();
    let mut checked = 0;
    while checked < 60 {
        let n = rng.gen_range(2..=4);
        let mut h = random_structure(&mut rng, &Signature::graph(), n, 0.5);
        let d = rng.gen_range(0..n);
        for y in 0..n {
            h.add_tuple("E", vec![d, y]).unwrap();
            h.add_tuple("E", vec![y, d]).unwrap();
        }
        if (0..n).all(|x| h.has_tuple(0, &[x, x])) {
            continue;
        }
        let eq = equivalent(&h, &p01, &opts).unwrap();
        assert_eq!(eq.equivalent, Some(true), "{}", structure_to_json(&h));
        checked += 1;
    }
}
