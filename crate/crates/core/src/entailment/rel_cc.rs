//! The game in which Universal plays constants and Existential plays terms
//! built only from constants Universal has already played.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::truncation::Truncation;
use crate::error::{Error, Result};
use crate::sentence::{normalize_strict_alternation, Atom, PhSentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelCcOptions {
    pub max_states: usize,
    /// Strategies with more lines than this are not extracted.
    pub strategy_lines: usize,
}

impl Default for RelCcOptions {
    fn default() -> Self {
        RelCcOptions {
            max_states: 10_000_000,
            strategy_lines: 4096,
        }
    }
}

/// Existential's replies, keyed by Universal's plays so far. Universal's
/// plays are listed up to renaming of constants: a constant not played
/// before is always the least unplayed one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RelCcStrategy {
    pub moves: BTreeMap<Vec<usize>, usize>,
}

#[derive(Debug, Clone)]
pub struct RelCcResult {
    pub wins: bool,
    pub states: usize,
    pub strategy: Option<RelCcStrategy>,
}

enum Check<'t> {
    Rel(Option<&'t std::collections::BTreeSet<Vec<usize>>>, Vec<usize>),
    Eq(usize, usize),
}

/// Index of each constant permutation and its table on terms.
type Perms = (HashMap<Vec<usize>, usize>, Vec<Vec<usize>>);

struct Game<'t> {
    t: &'t Truncation,
    rounds: usize,
    checks: Vec<Check<'t>>,
    /// Checks that become decidable once position `i` is assigned.
    ready: Vec<Vec<usize>>,
    /// Assigned positions still mentioned by a pending check, per step.
    live: Vec<Vec<usize>>,
    /// Terms Existential may use once `j` constants are in play.
    allowed: Vec<Vec<usize>>,
    perms: Option<Perms>,
    memo: HashMap<(usize, usize, Vec<usize>), bool>,
    max_states: usize,
}

fn compile<'t>(t: &'t Truncation, psi: &PhSentence) -> Result<(usize, Vec<Check<'t>>)> {
    let vars = psi.variables();
    let rounds = vars.len() / 2;
    if rounds > t.constant_count() {
        return Err(Error::InvalidArgument(format!(
            "the sentence has {rounds} universal variables but the truncation only {} constants",
            t.constant_count()
        )));
    }
    let pos: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, (_, v))| (*v, i)).collect();
    let mut checks = Vec::new();
    for a in psi.matrix() {
        match a {
            Atom::Rel { relation, args } => {
                if let Some(expected) = t.form().signature().arity(relation) {
                    if expected != args.len() {
                        return Err(Error::SignatureMismatch(format!(
                            "`{relation}` has arity {expected}, used with {}",
                            args.len()
                        )));
                    }
                }
                checks.push(Check::Rel(t.facts(relation), args.iter().map(|v| pos[v.as_str()]).collect()));
            }
            Atom::Eq(x, y) => checks.push(Check::Eq(pos[x.as_str()], pos[y.as_str()])),
        }
    }
    Ok((rounds, checks))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn go(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            go(k + 1, p, out);
            p.swap(k, i);
        }
    }
    go(0, &mut p, &mut out);
    out
}

/// Permutation tables are only built while they stay small.
const PERMUTATION_TABLE_CAP: usize = 4_000_000;

impl<'t> Game<'t> {
    fn new(t: &'t Truncation, psi: &PhSentence, max_states: usize) -> Result<Game<'t>> {
        let (rounds, checks) = compile(t, psi)?;
        let n = 2 * rounds;
        let mut ready = vec![Vec::new(); n.max(1)];
        let mut last_use = vec![None; n];
        for (k, c) in checks.iter().enumerate() {
            let positions: Vec<usize> = match c {
                Check::Rel(_, p) => p.clone(),
                Check::Eq(x, y) => vec![*x, *y],
            };
            let at = positions.iter().copied().max().unwrap_or(0);
            ready[at].push(k);
            for p in positions {
                last_use[p] = Some(last_use[p].map_or(at, |u: usize| u.max(at)));
            }
        }
        let live = (0..=n)
            .map(|i| (0..i).filter(|&p| last_use[p].is_some_and(|u| u >= i)).collect())
            .collect();
        let l = t.constant_count();
        let allowed = (0..=l)
            .map(|j| {
                let mask = if j >= 64 { u64::MAX } else { (1u64 << j) - 1 };
                (0..t.len()).filter(|&i| t.support_mask(i) & !mask == 0).collect()
            })
            .collect();
        let factorial = (1..=l).try_fold(1usize, |acc, k| acc.checked_mul(k));
        let perms = match factorial {
            Some(f) if l >= 2 && f.saturating_mul(t.len()) <= PERMUTATION_TABLE_CAP => {
                let all = permutations(l);
                let index = all.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
                let tables = all.iter().map(|p| t.permutation_table(p)).collect();
                Some((index, tables))
            }
            _ => None,
        };
        Ok(Game {
            t,
            rounds,
            checks,
            ready,
            live,
            allowed,
            perms,
            memo: HashMap::new(),
            max_states,
        })
    }

    fn holds(&self, k: usize, vals: &[usize]) -> bool {
        match &self.checks[k] {
            Check::Rel(facts, pos) => {
                let tuple: Vec<usize> = pos.iter().map(|&p| vals[p]).collect();
                facts.is_some_and(|f| f.contains(&tuple))
            }
            Check::Eq(x, y) => vals[*x] == vals[*y],
        }
    }

    /// Memo key: the live values with the played constants renamed in
    /// order of first occurrence.
    fn key(&self, i: usize, j: usize, vals: &[usize]) -> (usize, usize, Vec<usize>) {
        let live: Vec<usize> = self.live[i].iter().map(|&p| vals[p]).collect();
        let Some((index, tables)) = &self.perms else {
            return (i, j, live);
        };
        let mut order = Vec::new();
        for &v in &live {
            self.t.constant_sequence(v, &mut order);
        }
        for c in 0..j {
            if !order.contains(&c) {
                order.push(c);
            }
        }
        let mut perm: Vec<usize> = (0..self.t.constant_count()).collect();
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        let table = &tables[index[&perm]];
        (i, j, live.iter().map(|&v| table[v]).collect())
    }

    /// Universal options at a step with `j` constants in play.
    fn universal_moves(&self, j: usize) -> std::ops::Range<usize> {
        0..(j + 1).min(self.t.constant_count())
    }

    fn existential_moves(&self, i: usize, j: usize, vals: &[usize]) -> Vec<usize> {
        // a relational check that pins this position narrows the search
        for &k in &self.ready[i] {
            if let Check::Rel(facts, pos) = &self.checks[k] {
                let Some(facts) = facts else {
                    return Vec::new();
                };
                let mut out: Vec<usize> = facts
                    .iter()
                    .filter(|f| pos.iter().zip(f.iter()).all(|(&p, &v)| p == i || vals[p] == v))
                    .filter_map(|f| pos.iter().position(|&p| p == i).map(|q| f[q]))
                    .filter(|&v| {
                        let mask = if j >= 64 { u64::MAX } else { (1u64 << j) - 1 };
                        self.t.support_mask(v) & !mask == 0
                    })
                    .collect();
                out.sort_unstable();
                out.dedup();
                return out;
            }
        }
        self.allowed[j].clone()
    }

    fn step_ok(&self, i: usize, vals: &[usize]) -> bool {
        self.ready[i].iter().all(|&k| self.holds(k, vals))
    }

    fn win(&mut self, i: usize, j: usize, vals: &mut Vec<usize>) -> Result<bool> {
        if i == 2 * self.rounds {
            return Ok(true);
        }
        let key = self.key(i, j, vals);
        if let Some(&w) = self.memo.get(&key) {
            return Ok(w);
        }
        let result = if i.is_multiple_of(2) {
            let mut all = true;
            for c in self.universal_moves(j) {
                vals.push(c);
                let ok = self.step_ok(i, vals) && self.win(i + 1, j.max(c + 1), vals)?;
                vals.pop();
                if !ok {
                    all = false;
                    break;
                }
            }
            all
        } else {
            let mut any = false;
            for v in self.existential_moves(i, j, vals) {
                vals.push(v);
                let ok = self.step_ok(i, vals) && self.win(i + 1, j, vals)?;
                vals.pop();
                if ok {
                    any = true;
                    break;
                }
            }
            any
        };
        if self.memo.len() >= self.max_states {
            return Err(Error::resource("game states", self.memo.len() as u128 + 1, self.max_states as u128));
        }
        self.memo.insert(key, result);
        Ok(result)
    }

    fn extract(
        &mut self,
        i: usize,
        j: usize,
        vals: &mut Vec<usize>,
        plays: &mut Vec<usize>,
        out: &mut RelCcStrategy,
        cap: usize,
    ) -> Result<bool> {
        if i == 2 * self.rounds {
            return Ok(true);
        }
        if out.moves.len() > cap {
            return Ok(false);
        }
        if i.is_multiple_of(2) {
            for c in self.universal_moves(j) {
                vals.push(c);
                plays.push(c);
                let ok = self.extract(i + 1, j.max(c + 1), vals, plays, out, cap)?;
                plays.pop();
                vals.pop();
                if !ok {
                    return Ok(false);
                }
            }
            return Ok(true);
        }
        for v in self.existential_moves(i, j, vals) {
            vals.push(v);
            let ok = self.step_ok(i, vals) && self.win(i + 1, j, vals)?;
            if ok {
                out.moves.insert(plays.clone(), v);
                let done = self.extract(i + 1, j, vals, plays, out, cap)?;
                vals.pop();
                return Ok(done);
            }
            vals.pop();
        }
        Ok(false)
    }
}

/// Solves the game for `psi` on `t`. The sentence is brought to strict
/// alternation first; its universal variables must not outnumber the
/// constants of `t`.
pub fn solve_rel_cc_game(t: &Truncation, psi: &PhSentence) -> Result<RelCcResult> {
    solve_rel_cc_game_with(t, psi, &RelCcOptions::default())
}

pub fn solve_rel_cc_game_with(t: &Truncation, psi: &PhSentence, opts: &RelCcOptions) -> Result<RelCcResult> {
    let psi = normalize_strict_alternation(psi);
    let mut game = Game::new(t, &psi, opts.max_states)?;
    // checks without variables are decided up front
    let ground: Vec<usize> = (0..game.checks.len())
        .filter(|&k| matches!(&game.checks[k], Check::Rel(_, p) if p.is_empty()))
        .collect();
    if game.rounds == 0 || !ground.iter().all(|&k| game.holds(k, &[])) {
        let wins = ground.iter().all(|&k| game.holds(k, &[]));
        return Ok(RelCcResult {
            wins,
            states: 0,
            strategy: wins.then(RelCcStrategy::default),
        });
    }
    let wins = game.win(0, 0, &mut Vec::new())?;
    let strategy = if wins {
        let mut out = RelCcStrategy::default();
        let complete = game.extract(0, 0, &mut Vec::new(), &mut Vec::new(), &mut out, opts.strategy_lines)?;
        complete.then_some(out)
    } else {
        None
    };
    Ok(RelCcResult {
        wins,
        states: game.memo.len(),
        strategy,
    })
}

/// Plays `strategy` against every sequence of constants Universal could
/// choose, renaming constants into the strategy's normal form and back.
pub fn check_rel_cc_strategy(t: &Truncation, psi: &PhSentence, strategy: &RelCcStrategy) -> Result<bool> {
    let psi = normalize_strict_alternation(psi);
    let (rounds, checks) = compile(t, &psi)?;
    let l = t.constant_count();
    let total = crate::structure::checked_pow(l as u128, rounds).unwrap_or(u128::MAX);
    if total > 10_000_000 {
        return Err(Error::resource("universal plays", total, 10_000_000));
    }
    let holds = |vals: &[usize]| {
        checks.iter().all(|c| match c {
            Check::Rel(facts, pos) => {
                let tuple: Vec<usize> = pos.iter().map(|&p| vals[p]).collect();
                facts.is_some_and(|f| f.contains(&tuple))
            }
            Check::Eq(x, y) => vals[*x] == vals[*y],
        })
    };
    for code in 0..total {
        let mut plays = Vec::with_capacity(rounds);
        let mut rest = code;
        for _ in 0..rounds {
            plays.push((rest % l as u128) as usize);
            rest /= l as u128;
        }
        // rename constants by first occurrence
        let mut to_canon: Vec<Option<usize>> = vec![None; l];
        let mut from_canon = Vec::new();
        let mut canon = Vec::new();
        for &c in &plays {
            let k = *to_canon[c].get_or_insert_with(|| {
                from_canon.push(c);
                from_canon.len() - 1
            });
            canon.push(k);
        }
        let mut back: Vec<usize> = from_canon.clone();
        for c in 0..l {
            if !back.contains(&c) {
                back.push(c);
            }
        }
        let mut vals = Vec::with_capacity(2 * rounds);
        for r in 0..rounds {
            let Some(&reply) = strategy.moves.get(&canon[..=r]) else {
                return Ok(false);
            };
            let reply = t.map_constants(reply, &|c| back[c]);
            let mask = plays[..=r].iter().fold(0u64, |m, &c| m | 1 << c);
            if t.support_mask(reply) & !mask != 0 {
                return Ok(false);
            }
            vals.push(plays[r]);
            vals.push(reply);
        }
        if !holds(&vals) {
            return Ok(false);
        }
    }
    Ok(true)
}
