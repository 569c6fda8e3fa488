//! The model-checking game for pH sentences on finite structures.
//!
//! Universal and Existential pick elements for the quantified variables in
//! prefix order; Existential wins if the matrix holds at the end. Positions
//! are memoized on the values of the variables that still occur in atoms
//! not yet decided. Once only existential variables remain, the rest of the
//! game is a plain homomorphism problem and is handed to the hom search.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::hom::find_hom;
use crate::sentence::{classify, sentence_to_structure_over, Atom, PhSentence, Quantifier};
use crate::structure::{expansion, power_coordinates, superproduct, SizeLimits, Structure};

/// Existential's choices, keyed by position in the flattened prefix and the
/// elements chosen for all earlier variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Strategy {
    pub choices: BTreeMap<(usize, Vec<usize>), usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameResult {
    pub truth: bool,
    /// Present when the sentence is true and there are at most
    /// `GameOptions::strategy_lines` universal lines.
    pub strategy: Option<Strategy>,
}

#[derive(Debug, Clone, Copy)]
pub struct GameOptions {
    pub strategy_lines: u128,
    pub max_states: usize,
}

impl Default for GameOptions {
    fn default() -> Self {
        GameOptions {
            strategy_lines: 4096,
            max_states: 10_000_000,
        }
    }
}

enum CAtom {
    Rel(usize, Vec<usize>),
    Eq(usize, usize),
}

impl CAtom {
    fn holds(&self, a: &Structure, assign: &[usize]) -> bool {
        match self {
            CAtom::Rel(r, args) => {
                let t: Vec<usize> = args.iter().map(|&p| assign[p]).collect();
                a.has_tuple(*r, &t)
            }
            CAtom::Eq(x, y) => assign[*x] == assign[*y],
        }
    }
}

struct Game<'a> {
    a: &'a Structure,
    quantifiers: Vec<Quantifier>,
    atoms: Vec<CAtom>,
    /// Atoms whose last variable is bound at this position.
    ready: Vec<Vec<usize>>,
    /// Earlier positions whose values still matter at this position.
    live: Vec<Vec<usize>>,
    /// First position of the trailing existential block, when that block
    /// can be solved as a homomorphism problem.
    tail: Option<(usize, Rc<Structure>)>,
    memo: HashMap<(usize, Vec<usize>), bool>,
    max_states: usize,
}

fn compile(s: &PhSentence, a: &Structure) -> Result<(Vec<Quantifier>, Vec<CAtom>)> {
    s.check_signature(a.signature())?;
    let vars = s.variables();
    let pos: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, (_, v))| (*v, i)).collect();
    let atoms = s
        .matrix()
        .iter()
        .map(|at| match at {
            Atom::Rel { relation, args } => CAtom::Rel(
                a.signature().index_of(relation).expect("checked"),
                args.iter().map(|v| pos[v.as_str()]).collect(),
            ),
            Atom::Eq(x, y) => CAtom::Eq(pos[x.as_str()], pos[y.as_str()]),
        })
        .collect();
    Ok((vars.iter().map(|(q, _)| *q).collect(), atoms))
}

impl<'a> Game<'a> {
    fn new(a: &'a Structure, s: &PhSentence, opts: &GameOptions) -> Result<Game<'a>> {
        let (quantifiers, atoms) = compile(s, a)?;
        let n = quantifiers.len();
        if n > 0 && a.size() == 0 {
            return Err(Error::InvalidArgument("quantification over an empty domain".into()));
        }
        let mut ready = vec![Vec::new(); n.max(1)];
        let mut last_use = vec![None::<usize>; n];
        for (k, at) in atoms.iter().enumerate() {
            let vs: Vec<usize> = match at {
                CAtom::Rel(_, args) => args.clone(),
                CAtom::Eq(x, y) => vec![*x, *y],
            };
            let r = *vs.iter().max().expect("atoms have arguments");
            ready[r].push(k);
            for v in vs {
                last_use[v] = Some(last_use[v].map_or(r, |u: usize| u.max(r)));
            }
        }
        let live = (0..=n)
            .map(|i| (0..i).filter(|&p| last_use[p].is_some_and(|u| u >= i)).collect())
            .collect();
        let tail_start = (0..n)
            .rev()
            .take_while(|&i| quantifiers[i] == Quantifier::Exists)
            .last();
        let tail = match tail_start {
            Some(t) if !s.has_equality() => {
                let sig = a.signature().clone();
                let mut d = Structure::new(sig.with_constant_count(0), n)?;
                for at in &atoms {
                    if let CAtom::Rel(r, args) = at {
                        d.add_tuple_at(*r, args.clone())?;
                    }
                }
                Some((t, Rc::new(d)))
            }
            _ => None,
        };
        Ok(Game {
            a,
            quantifiers,
            atoms,
            ready,
            live,
            tail,
            memo: HashMap::new(),
            max_states: opts.max_states,
        })
    }

    fn tail_solution(&self, d: &Structure, start: usize, assign: &[usize]) -> Result<Option<Vec<usize>>> {
        let partial: Vec<Option<usize>> = assign[..start].iter().map(|&v| Some(v)).collect();
        Ok(find_hom(d, self.a, Some(&partial), false)?.map(|w| w.mapping))
    }

    fn atoms_hold(&self, i: usize, assign: &[usize]) -> bool {
        self.ready[i].iter().all(|&k| self.atoms[k].holds(self.a, assign))
    }

    fn win(&mut self, i: usize, assign: &mut Vec<usize>) -> Result<bool> {
        let n = self.quantifiers.len();
        if i == n {
            return Ok(true);
        }
        if let Some((t, d)) = &self.tail {
            if *t == i {
                let d = Rc::clone(d);
                return Ok(self.tail_solution(&d, i, assign)?.is_some());
            }
        }
        let key = (i, self.live[i].iter().map(|&p| assign[p]).collect::<Vec<_>>());
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let forall = self.quantifiers[i] == Quantifier::Forall;
        let mut result = forall;
        for v in 0..self.a.size() {
            assign[i] = v;
            let ok = self.atoms_hold(i, assign) && self.win(i + 1, assign)?;
            if ok != forall {
                result = ok;
                break;
            }
        }
        if self.memo.len() >= self.max_states {
            return Err(Error::resource("game states", self.memo.len() as u128 + 1, self.max_states as u128));
        }
        self.memo.insert(key, result);
        Ok(result)
    }

    fn extract(&mut self, i: usize, assign: &mut Vec<usize>, out: &mut Strategy) -> Result<()> {
        let n = self.quantifiers.len();
        if i == n {
            return Ok(());
        }
        if let Some((t, d)) = &self.tail {
            if *t == i {
                let d = Rc::clone(d);
                let m = self.tail_solution(&d, i, assign)?.expect("winning position");
                for p in i..n {
                    assign[p] = m[p];
                    out.choices.insert((p, assign[..p].to_vec()), m[p]);
                }
                return Ok(());
            }
        }
        if self.quantifiers[i] == Quantifier::Forall {
            for v in 0..self.a.size() {
                assign[i] = v;
                self.extract(i + 1, assign, out)?;
            }
        } else {
            let mut chosen = None;
            for v in 0..self.a.size() {
                assign[i] = v;
                if self.atoms_hold(i, assign) && self.win(i + 1, assign)? {
                    chosen = Some(v);
                    break;
                }
            }
            let v = chosen.expect("winning position");
            assign[i] = v;
            out.choices.insert((i, assign[..i].to_vec()), v);
            self.extract(i + 1, assign, out)?;
        }
        Ok(())
    }
}

pub fn evaluate(a: &Structure, s: &PhSentence) -> Result<GameResult> {
    evaluate_with(a, s, &GameOptions::default())
}

pub fn evaluate_with(a: &Structure, s: &PhSentence, opts: &GameOptions) -> Result<GameResult> {
    let mut game = Game::new(a, s, opts)?;
    let n = game.quantifiers.len();
    let mut assign = vec![0; n];
    if n == 0 {
        // only possible for constructed sentences; the matrix has no atoms
        return Ok(GameResult {
            truth: true,
            strategy: Some(Strategy::default()),
        });
    }
    let truth = game.win(0, &mut assign)?;
    let u = game.quantifiers.iter().filter(|q| **q == Quantifier::Forall).count();
    let lines = crate::structure::checked_pow(a.size() as u128, u).unwrap_or(u128::MAX);
    let strategy = if truth && lines <= opts.strategy_lines {
        let mut st = Strategy::default();
        game.extract(0, &mut assign, &mut st)?;
        Some(st)
    } else {
        None
    };
    Ok(GameResult { truth, strategy })
}

/// Plays `strategy` against every line of Universal and checks that each
/// play satisfies the matrix.
pub fn replay_strategy(a: &Structure, s: &PhSentence, strategy: &Strategy) -> Result<bool> {
    let (quantifiers, atoms) = compile(s, a)?;
    fn go(
        i: usize,
        assign: &mut Vec<usize>,
        q: &[Quantifier],
        atoms: &[CAtom],
        a: &Structure,
        st: &Strategy,
    ) -> bool {
        if i == q.len() {
            return atoms.iter().all(|at| at.holds(a, assign));
        }
        match q[i] {
            Quantifier::Forall => (0..a.size()).all(|v| {
                assign.truncate(i);
                assign.push(v);
                go(i + 1, assign, q, atoms, a, st)
            }),
            Quantifier::Exists => match st.choices.get(&(i, assign[..i].to_vec())) {
                Some(&v) if v < a.size() => {
                    assign.truncate(i);
                    assign.push(v);
                    go(i + 1, assign, q, atoms, a, st)
                }
                _ => false,
            },
        }
    }
    Ok(go(0, &mut Vec::new(), &quantifiers, &atoms, a, strategy))
}

/// Truth of a Π2 sentence through a constant-preserving homomorphism from
/// the sentence's structure into the superproduct of `a`.
pub fn evaluate_pi2_via_superproduct(a: &Structure, s: &PhSentence, limits: &SizeLimits) -> Result<bool> {
    let shape = classify(s);
    if !shape.is_pi2 || shape.has_equality {
        return Err(Error::InvalidSentence(
            "expected an equality-free sentence of the form forall .. exists ..".into(),
        ));
    }
    if a.signature().constant_count() > 0 {
        return Err(Error::InvalidArgument("structure already interprets constants".into()));
    }
    if a.size() == 0 {
        return Err(Error::InvalidArgument("quantification over an empty domain".into()));
    }
    let d = sentence_to_structure_over(s, a.signature())?;
    if shape.universal_count == 0 {
        return Ok(find_hom(&d, a, None, false)?.is_some());
    }
    match superproduct(a, shape.universal_count, limits) {
        Ok(sp) => Ok(find_hom(&d, &sp, None, true)?.is_some()),
        Err(e) if e.is_resource() => evaluate_pi2_factorwise(a, &d),
        Err(e) => Err(e),
    }
}

/// A map into a product is a family of maps into the factors, so the
/// superproduct test splits into one test per constant assignment.
fn evaluate_pi2_factorwise(a: &Structure, d: &Structure) -> Result<bool> {
    let m = d.signature().constant_count();
    let count = crate::structure::checked_pow(a.size() as u128, m)
        .ok_or_else(|| Error::resource("constant assignments", u128::MAX, u64::MAX as u128))?;
    for lambda in 0..count as usize {
        let coords = power_coordinates(a.size(), m, lambda);
        let factor = expansion(a, &coords)?;
        if find_hom(d, &factor, None, true)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, isolated};
    use crate::sentence::parse_sentence;

    fn g(s: &str) -> Structure {
        generate(&s.parse().unwrap()).unwrap()
    }

    fn holds(a: &Structure, s: &str) -> bool {
        let s = parse_sentence(s).unwrap();
        let r = evaluate(a, &s).unwrap();
        if let Some(st) = &r.strategy {
            assert!(replay_strategy(a, &s, st).unwrap(), "strategy for {s} fails replay");
        }
        r.truth
    }

    #[test]
    fn dominating_vertex() {
        assert!(holds(&g("p01"), "exists x forall y : E(x,y) & E(y,x)"));
        assert!(!holds(&g("clique:3"), "exists x forall y : E(x,y) & E(y,x)"));
    }

    #[test]
    fn size_one() {
        let s = "exists x forall y : x = y";
        assert!(holds(&g("clique:1"), s));
        assert!(!holds(&isolated(2).unwrap(), s));
    }

    #[test]
    fn least_element() {
        assert!(holds(&g("dp1_star"), "exists x forall y : E(x,y)"));
        assert!(!holds(&g("dp1_star"), "forall x y : E(x,y)"));
    }

    #[test]
    fn alternating_prefix() {
        let k3 = g("clique:3");
        assert!(holds(&k3, "forall x exists y forall z exists w : E(x,y) & E(z,w) & E(y,w)"));
        assert!(!holds(&g("clique:2"), "forall x exists y forall z exists w : E(x,y) & E(z,w) & E(y,w)"));
    }

    #[test]
    fn empty_domain_rejected() {
        let empty = Structure::new(crate::structure::Signature::graph(), 0).unwrap();
        let s = parse_sentence("forall x : true").unwrap();
        assert!(evaluate(&empty, &s).is_err());
    }

    #[test]
    fn factorwise_matches_literal_superproduct() {
        let s = parse_sentence("forall x1 x2 exists y : E(x1,y) & E(x2,y)").unwrap();
        for a in ["clique:2", "k1s", "p01", "dp1_star"] {
            let a = g(a);
            let d = sentence_to_structure_over(&s, a.signature()).unwrap();
            let sp = superproduct(&a, 2, &SizeLimits::DEFAULT).unwrap();
            assert_eq!(
                find_hom(&d, &sp, None, true).unwrap().is_some(),
                evaluate_pi2_factorwise(&a, &d).unwrap()
            );
        }
    }

    #[test]
    fn superproduct_path_agrees() {
        let l = SizeLimits::DEFAULT;
        for (a, s) in [
            ("clique:1", "forall x exists y : E(x,y)"),
            ("clique:2", "forall x exists y : E(x,y)"),
            ("clique:3", "forall x1 x2 x3 exists y1 y2 y3 y4 : E(y1,x1) & E(x1,y2) & E(x1,y3) & E(y3,y2) & E(y4,x2) & E(x3,y4)"),
            ("clique:2", "forall x1 x2 exists y : E(x1,y) & E(x2,y)"),
            ("h2", "forall x1 x2 exists y : E(x1,y) & E(x2,y)"),
        ] {
            let a = g(a);
            let s = parse_sentence(s).unwrap();
            assert_eq!(
                evaluate(&a, &s).unwrap().truth,
                evaluate_pi2_via_superproduct(&a, &s, &l).unwrap(),
                "{s}"
            );
        }
    }
}
