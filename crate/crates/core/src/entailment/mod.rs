//! Entailment between positive Horn sentences, decided on truncations of
//! the canonical model of the premise.

mod rel_cc;
mod skolem;
mod truncation;

use serde::Serialize;

pub use rel_cc::{
    check_rel_cc_strategy, solve_rel_cc_game, solve_rel_cc_game_with, RelCcOptions, RelCcResult, RelCcStrategy,
};
pub use skolem::{skolemize, substitute, QuantifiedAtom, SkolemArg, SkolemForm, SkolemFunction, SkolemTerm, TermNode};
pub use truncation::{build_truncation, build_truncation_with, Truncation, TruncationLimits};

use crate::error::{Error, Result};
use crate::game::evaluate;
use crate::sentence::{classify, normalize_strict_alternation, propagate_equalities, PhSentence};
use crate::structure::{Signature, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntailmentOptions {
    pub max_terms: usize,
    pub max_states: usize,
    pub max_instantiations: u128,
}

impl Default for EntailmentOptions {
    fn default() -> Self {
        let t = TruncationLimits::default();
        EntailmentOptions {
            max_terms: t.max_terms,
            max_states: RelCcOptions::default().max_states,
            max_instantiations: t.max_instantiations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Entailment {
    Yes,
    No,
    ResourceExceeded,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntailmentReport {
    pub verdict: Entailment,
    pub degenerate: bool,
    /// Constants of the truncations (0 on the degenerate path).
    pub constants: usize,
    pub rank_bound: u128,
    /// Highest rank whose game was solved.
    pub rank_reached: Option<usize>,
    pub terms: usize,
    pub states: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Every structure on a single element: each relation empty or full.
pub fn enumerate_one_element_models(sig: &Signature) -> Result<Vec<Structure>> {
    let rels = sig.relations();
    if rels.len() > 20 {
        return Err(Error::resource("one-element models", 1u128 << rels.len(), 1 << 20));
    }
    let sig = sig.with_constant_count(0);
    let mut out = Vec::with_capacity(1 << rels.len());
    for bits in 0u32..(1 << rels.len()) {
        let mut s = Structure::new(sig.clone(), 1)?;
        for (k, r) in rels.iter().enumerate() {
            if bits >> k & 1 == 1 {
                s.add_tuple(&r.name, vec![0; r.arity])?;
            }
        }
        out.push(s);
    }
    Ok(out)
}

/// The rank up to which truncations must be searched: `u + e * u^u`.
pub fn rank_bound(universals: usize, existentials: usize) -> u128 {
    let u = universals as u128;
    let power = crate::structure::checked_pow(u, universals).unwrap_or(u128::MAX);
    u.saturating_add((existentials as u128).saturating_mul(power))
}

pub fn decide_entailment(phi: &PhSentence, psi: &PhSentence, opts: &EntailmentOptions) -> Result<EntailmentReport> {
    let sig = phi.signature()?.merge(&psi.signature()?)?;
    if classify(phi).is_degenerate {
        let mut verdict = Entailment::Yes;
        for a in enumerate_one_element_models(&sig)? {
            if evaluate(&a, phi)?.truth && !evaluate(&a, psi)?.truth {
                verdict = Entailment::No;
                break;
            }
        }
        return Ok(EntailmentReport {
            verdict,
            degenerate: true,
            constants: 0,
            rank_bound: 0,
            rank_reached: None,
            terms: 1,
            states: 0,
            reason: None,
        });
    }
    let phi = propagate_equalities(phi)?;
    let psi = normalize_strict_alternation(psi);
    let l = psi.universal_variables().len().max(1);
    let bound = rank_bound(l, psi.existential_variables().len());
    let form = skolemize(&phi)?;
    let limits = TruncationLimits {
        max_terms: opts.max_terms,
        max_instantiations: opts.max_instantiations,
    };
    let game = RelCcOptions {
        max_states: opts.max_states,
        strategy_lines: 0,
    };
    let mut report = EntailmentReport {
        verdict: Entailment::No,
        degenerate: false,
        constants: l,
        rank_bound: bound,
        rank_reached: None,
        terms: 0,
        states: 0,
        reason: None,
    };
    let mut m = 1usize;
    loop {
        let t = match build_truncation_with(&form, l, m, &limits) {
            Ok(t) => t,
            Err(e) if e.is_resource() => {
                report.verdict = Entailment::ResourceExceeded;
                report.reason = Some(format!("rank {m}: {e}"));
                return Ok(report);
            }
            Err(e) => return Err(e),
        };
        let result = match solve_rel_cc_game_with(&t, &psi, &game) {
            Ok(r) => r,
            Err(e) if e.is_resource() => {
                report.verdict = Entailment::ResourceExceeded;
                report.reason = Some(format!("rank {m}: {e}"));
                return Ok(report);
            }
            Err(e) => return Err(e),
        };
        let grew = t.len() > report.terms;
        report.rank_reached = Some(m);
        report.terms = t.len();
        report.states = report.states.max(result.states);
        if result.wins {
            report.verdict = Entailment::Yes;
            return Ok(report);
        }
        if m as u128 >= bound {
            return Ok(report);
        }
        if !grew && m > 1 {
            // no Skolem functions: every later truncation is this one
            report.reason = Some(format!("truncations stop growing at rank {}", m - 1));
            return Ok(report);
        }
        m += 1;
    }
}
