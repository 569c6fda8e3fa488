//! Homomorphism search: plain, surjective, constant-preserving and
//! injective (automorphisms), plus orbit counting and majority
//! polymorphisms.
//!
//! The search is backtracking with generalized arc consistency maintained
//! after every assignment. Variables are taken in a fixed order (descending
//! number of tuple occurrences, then index) and values ascending, so the
//! first solution found is the lexicographically least in that order.

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::structure::{checked_pow, power, SizeLimits, Structure};

/// A homomorphism `mapping[x]` from the elements of the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomWitness {
    pub mapping: Vec<usize>,
    pub surjective: bool,
    pub constant_preserving: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    pub respect_constants: bool,
    pub surjective: bool,
    pub injective: bool,
    /// Pre-assigned images; indices beyond the vector are free.
    pub partial: Vec<Option<usize>>,
    /// Give up after this many search nodes.
    pub max_nodes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(HomWitness),
    NotFound,
    /// The node budget ran out before the search space was exhausted.
    Aborted,
}

/// Independent re-check of a candidate homomorphism.
pub fn verify_hom(
    a: &Structure,
    b: &Structure,
    mapping: &[usize],
    respect_constants: bool,
) -> std::result::Result<(), String> {
    if !a.signature().same_relations(b.signature()) {
        return Err("signatures differ".into());
    }
    if mapping.len() != a.size() {
        return Err(format!("mapping has {} entries for {} elements", mapping.len(), a.size()));
    }
    if let Some(x) = mapping.iter().position(|&y| y >= b.size()) {
        return Err(format!("image of {x} out of range"));
    }
    for (sym, tuples) in a.signature().relations().iter().zip(a.relations()) {
        let j = b.signature().index_of(&sym.name).expect("same relations");
        for t in tuples {
            let image: Vec<usize> = t.iter().map(|&x| mapping[x]).collect();
            if !b.has_tuple(j, &image) {
                return Err(format!("{}{:?} maps to {:?}, not a tuple of the target", sym.name, t, image));
            }
        }
    }
    if respect_constants {
        if a.constants().len() != b.constants().len() {
            return Err("constant counts differ".into());
        }
        for (i, (&ca, &cb)) in a.constants().iter().zip(b.constants()).enumerate() {
            if mapping[ca] != cb {
                return Err(format!("constant c{} not preserved", i + 1));
            }
        }
    }
    Ok(())
}

pub fn is_surjective(mapping: &[usize], target_size: usize) -> bool {
    let mut hit = FixedBitSet::with_capacity(target_size);
    for &y in mapping {
        hit.insert(y);
    }
    hit.count_ones(..) == target_size
}

struct Constraint {
    relation: usize,
    vars: Vec<usize>,
    /// Positions holding the same variable: (i, j) with i < j.
    equal: Vec<(usize, usize)>,
}

struct Target {
    tuples: Vec<Vec<usize>>,
    /// `by_pos[p][v]`: indices of tuples with value `v` at position `p`.
    by_pos: Vec<Vec<Vec<u32>>>,
}

struct Solver<'a> {
    nb: usize,
    constraints: Vec<Constraint>,
    watch: Vec<Vec<usize>>,
    targets: Vec<Target>,
    order: Vec<usize>,
    opts: &'a SearchOptions,
    nodes: u64,
    dom: Vec<FixedBitSet>,
    /// Old domains, restored on backtracking.
    trail: Vec<(usize, FixedBitSet)>,
}

enum Step {
    Solution(Vec<usize>),
    Exhausted,
    Aborted,
}

struct Frame {
    pos: usize,
    values: Vec<usize>,
    next: usize,
    mark: usize,
}

impl<'a> Solver<'a> {
    fn new(a: &Structure, b: &Structure, opts: &'a SearchOptions, dom: Vec<FixedBitSet>) -> Solver<'a> {
        let nb = b.size();
        let mut constraints = Vec::new();
        let mut watch = vec![Vec::new(); a.size()];
        let mut degree = vec![0usize; a.size()];
        for (sym, tuples) in a.signature().relations().iter().zip(a.relations()) {
            let j = b.signature().index_of(&sym.name).expect("same relations");
            for t in tuples {
                let mut equal = Vec::new();
                for p in 0..t.len() {
                    for q in p + 1..t.len() {
                        if t[p] == t[q] {
                            equal.push((p, q));
                        }
                    }
                }
                let id = constraints.len();
                let mut seen = Vec::new();
                for &x in t {
                    degree[x] += 1;
                    if !seen.contains(&x) {
                        watch[x].push(id);
                        seen.push(x);
                    }
                }
                constraints.push(Constraint {
                    relation: j,
                    vars: t.clone(),
                    equal,
                });
            }
        }
        let targets = b
            .signature()
            .relations()
            .iter()
            .zip(b.relations())
            .map(|(sym, tuples)| {
                let tuples: Vec<Vec<usize>> = tuples.iter().cloned().collect();
                let mut by_pos = vec![vec![Vec::new(); nb]; sym.arity];
                for (k, t) in tuples.iter().enumerate() {
                    for (p, &v) in t.iter().enumerate() {
                        by_pos[p][v].push(k as u32);
                    }
                }
                Target { tuples, by_pos }
            })
            .collect();
        let mut order: Vec<usize> = (0..a.size()).collect();
        order.sort_by_key(|&x| (std::cmp::Reverse(degree[x]), x));
        Solver {
            nb,
            constraints,
            watch,
            targets,
            order,
            opts,
            nodes: 0,
            dom,
            trail: Vec::new(),
        }
    }

    fn fix(&mut self, x: usize, v: usize) {
        let mut d = FixedBitSet::with_capacity(self.nb);
        d.insert(v);
        let old = std::mem::replace(&mut self.dom[x], d);
        self.trail.push((x, old));
    }

    /// Returns false if the domain of `x` becomes empty.
    fn remove(&mut self, x: usize, values: &[usize]) -> bool {
        self.trail.push((x, self.dom[x].clone()));
        for &v in values {
            self.dom[x].set(v, false);
        }
        !self.dom[x].is_clear()
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (x, old) = self.trail.pop().expect("above mark");
            self.dom[x] = old;
        }
    }

    /// Removes unsupported values from the domains of constraint `c`;
    /// returns the variables whose domains shrank, or `None` on a wipe-out.
    fn revise(&mut self, c: usize) -> Option<Vec<usize>> {
        let mut changed = Vec::new();
        let arity = self.constraints[c].vars.len();
        for p in 0..arity {
            let con = &self.constraints[c];
            let x = con.vars[p];
            if con.vars[..p].contains(&x) {
                continue;
            }
            let target = &self.targets[con.relation];
            let dom = &self.dom;
            let remove: Vec<usize> = dom[x]
                .ones()
                .filter(|&v| {
                    !target.by_pos[p][v].iter().any(|&k| {
                        let t = &target.tuples[k as usize];
                        con.vars.iter().zip(t).all(|(&y, &w)| dom[y].contains(w))
                            && con.equal.iter().all(|&(i, j)| t[i] == t[j])
                    })
                })
                .collect();
            if !remove.is_empty() {
                if !self.remove(x, &remove) {
                    return None;
                }
                changed.push(x);
            }
        }
        Some(changed)
    }

    fn propagate(&mut self, mut queue: Vec<usize>) -> bool {
        let mut queued = FixedBitSet::with_capacity(self.constraints.len());
        for &c in &queue {
            queued.insert(c);
        }
        loop {
            while let Some(c) = queue.pop() {
                queued.set(c, false);
                let Some(changed) = self.revise(c) else {
                    return false;
                };
                for x in changed {
                    for &d in &self.watch[x] {
                        if d != c && !queued.contains(d) {
                            queued.insert(d);
                            queue.push(d);
                        }
                    }
                }
            }
            if self.opts.injective {
                // a fixed value is unavailable to every other variable
                let mut changed = Vec::new();
                for x in 0..self.dom.len() {
                    if self.dom[x].count_ones(..) != 1 {
                        continue;
                    }
                    let v = self.dom[x].ones().next().expect("singleton");
                    for y in 0..self.dom.len() {
                        if y != x && self.dom[y].contains(v) {
                            if !self.remove(y, &[v]) {
                                return false;
                            }
                            changed.push(y);
                        }
                    }
                }
                if !changed.is_empty() {
                    for x in changed {
                        for &d in &self.watch[x] {
                            if !queued.contains(d) {
                                queued.insert(d);
                                queue.push(d);
                            }
                        }
                    }
                    continue;
                }
            }
            break;
        }
        !self.opts.surjective || self.cover().is_some()
    }

    /// Hall-type check: the values not yet forced can be matched to
    /// distinct unfixed variables that still allow them. Returns the
    /// matching as `owner[x] = value`.
    fn cover(&self) -> Option<Vec<Option<usize>>> {
        let mut covered = FixedBitSet::with_capacity(self.nb);
        let mut free = Vec::new();
        for (x, d) in self.dom.iter().enumerate() {
            if d.count_ones(..) == 1 {
                covered.insert(d.ones().next().expect("singleton"));
            } else {
                free.push(x);
            }
        }
        let missing: Vec<usize> = (0..self.nb).filter(|&v| !covered.contains(v)).collect();
        if missing.len() > free.len() {
            return None;
        }
        let mut owner: Vec<Option<usize>> = vec![None; self.dom.len()];
        for &v in &missing {
            let mut seen = FixedBitSet::with_capacity(self.dom.len());
            if !augment(v, &self.dom, &free, &mut owner, &mut seen) {
                return None;
            }
        }
        Some(owner)
    }

    /// Variables in no constraint are never branched on; they take their
    /// least value, or a value that completes surjectivity.
    fn unconstrained(&self, x: usize) -> bool {
        !self.opts.injective && self.watch[x].is_empty()
    }

    fn next_var(&self, from: usize) -> Option<usize> {
        (from..self.order.len()).find(|&p| {
            let x = self.order[p];
            self.dom[x].count_ones(..) > 1 && !self.unconstrained(x)
        })
    }

    fn complete(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.dom.iter().map(|d| d.ones().next().expect("nonempty")).collect();
        if self.opts.surjective {
            let owner = self.cover().expect("checked by propagation");
            for (x, v) in owner.into_iter().enumerate() {
                if let Some(v) = v {
                    m[x] = v;
                }
            }
        }
        m
    }

    fn search(&mut self, on_solution: &mut dyn FnMut(&[usize]) -> bool) -> Step {
        let mut stack: Vec<Frame> = Vec::new();
        let mut from = 0;
        loop {
            match self.next_var(from) {
                None => {
                    let m = self.complete();
                    if on_solution(&m) {
                        return Step::Solution(m);
                    }
                }
                Some(p) => {
                    let x = self.order[p];
                    stack.push(Frame {
                        pos: p,
                        values: self.dom[x].ones().collect(),
                        next: 0,
                        mark: self.trail.len(),
                    });
                }
            }
            // advance to the next consistent value, backtracking as needed
            loop {
                let Some(f) = stack.last_mut() else {
                    return Step::Exhausted;
                };
                let mark = f.mark;
                if f.next == f.values.len() {
                    stack.pop();
                    self.undo(mark);
                    continue;
                }
                let (pos, v) = (f.pos, f.values[f.next]);
                f.next += 1;
                self.undo(mark);
                self.nodes += 1;
                if self.opts.max_nodes.is_some_and(|limit| self.nodes > limit) {
                    return Step::Aborted;
                }
                let x = self.order[pos];
                self.fix(x, v);
                if self.propagate(self.watch[x].clone()) {
                    from = pos + 1;
                    break;
                }
            }
        }
    }
}

fn augment(
    v: usize,
    dom: &[FixedBitSet],
    free: &[usize],
    owner: &mut [Option<usize>],
    seen: &mut FixedBitSet,
) -> bool {
    for &x in free {
        if dom[x].contains(v) && !seen.contains(x) {
            seen.insert(x);
            let reassign = match owner[x] {
                None => true,
                Some(w) => augment(w, dom, free, owner, seen),
            };
            if reassign {
                owner[x] = Some(v);
                return true;
            }
        }
    }
    false
}

fn check_signatures(a: &Structure, b: &Structure, respect_constants: bool) -> Result<()> {
    if !a.signature().same_relations(b.signature()) {
        return Err(Error::SignatureMismatch(format!(
            "{} vs {}",
            a.signature(),
            b.signature()
        )));
    }
    if respect_constants && a.signature().constant_count() != b.signature().constant_count() {
        return Err(Error::SignatureMismatch(format!(
            "{} constants vs {}",
            a.signature().constant_count(),
            b.signature().constant_count()
        )));
    }
    Ok(())
}

fn initial_domains(a: &Structure, b: &Structure, opts: &SearchOptions) -> Result<Option<Vec<FixedBitSet>>> {
    let nb = b.size();
    let mut full = FixedBitSet::with_capacity(nb);
    full.insert_range(..);
    let mut dom = vec![full; a.size()];
    let fix = |dom: &mut [FixedBitSet], x: usize, v: usize| {
        let keep = dom[x].contains(v);
        dom[x].clear();
        if keep {
            dom[x].insert(v);
        }
    };
    for (x, p) in opts.partial.iter().enumerate() {
        if let Some(v) = *p {
            if x >= a.size() || v >= nb {
                return Err(Error::InvalidArgument(format!("partial map entry {x} -> {v} out of range")));
            }
            fix(&mut dom, x, v);
        }
    }
    if opts.respect_constants {
        for (&ca, &cb) in a.constants().iter().zip(b.constants()) {
            fix(&mut dom, ca, cb);
        }
    }
    if dom.iter().any(|d| d.is_clear()) {
        return Ok(None);
    }
    Ok(Some(dom))
}

/// Visits homomorphisms in search order until `on_solution` returns true.
fn run(
    a: &Structure,
    b: &Structure,
    opts: &SearchOptions,
    on_solution: &mut dyn FnMut(&[usize]) -> bool,
) -> Result<SearchOutcome> {
    check_signatures(a, b, opts.respect_constants)?;
    if opts.surjective && a.size() < b.size() {
        return Ok(SearchOutcome::NotFound);
    }
    if opts.injective && a.size() > b.size() {
        return Ok(SearchOutcome::NotFound);
    }
    if a.size() == 0 {
        let mapping = Vec::new();
        if (!opts.surjective || b.size() == 0) && on_solution(&mapping) {
            return Ok(SearchOutcome::Found(witness(a, b, mapping, opts)));
        }
        return Ok(SearchOutcome::NotFound);
    }
    let Some(dom) = initial_domains(a, b, opts)? else {
        return Ok(SearchOutcome::NotFound);
    };
    let mut solver = Solver::new(a, b, opts, dom);
    let all: Vec<usize> = (0..solver.constraints.len()).collect();
    if !solver.propagate(all) {
        return Ok(SearchOutcome::NotFound);
    }
    Ok(match solver.search(on_solution) {
        Step::Solution(m) => SearchOutcome::Found(witness(a, b, m, opts)),
        Step::Exhausted => SearchOutcome::NotFound,
        Step::Aborted => SearchOutcome::Aborted,
    })
}

fn witness(a: &Structure, b: &Structure, mapping: Vec<usize>, opts: &SearchOptions) -> HomWitness {
    let constant_preserving = a.constants().len() == b.constants().len()
        && a.constants().iter().zip(b.constants()).all(|(&x, &y)| mapping[x] == y);
    HomWitness {
        surjective: is_surjective(&mapping, b.size()),
        constant_preserving: constant_preserving && (opts.respect_constants || !a.constants().is_empty()),
        mapping,
    }
}

/// General entry point.
pub fn search(a: &Structure, b: &Structure, opts: &SearchOptions) -> Result<SearchOutcome> {
    run(a, b, opts, &mut |_| true)
}

/// A homomorphism extending `partial`, if one exists.
pub fn find_hom(
    a: &Structure,
    b: &Structure,
    partial: Option<&[Option<usize>]>,
    respect_constants: bool,
) -> Result<Option<HomWitness>> {
    let opts = SearchOptions {
        respect_constants,
        partial: partial.map(<[_]>::to_vec).unwrap_or_default(),
        ..SearchOptions::default()
    };
    Ok(match search(a, b, &opts)? {
        SearchOutcome::Found(w) => Some(w),
        _ => None,
    })
}

pub fn find_surjective_hom(a: &Structure, b: &Structure, respect_constants: bool) -> Result<Option<HomWitness>> {
    let opts = SearchOptions {
        respect_constants,
        surjective: true,
        ..SearchOptions::default()
    };
    Ok(match search(a, b, &opts)? {
        SearchOutcome::Found(w) => Some(w),
        _ => None,
    })
}

pub const DEFAULT_AUTOMORPHISM_CAP: usize = 8;

/// All automorphisms, in lexicographic order of the permutation under the
/// search's variable order. Constants, if any, are fixed.
pub fn automorphisms(a: &Structure, cap: usize) -> Result<Vec<Vec<usize>>> {
    if a.size() > cap {
        return Err(Error::resource("automorphism search domain", a.size() as u128, cap as u128));
    }
    let opts = SearchOptions {
        respect_constants: true,
        injective: true,
        ..SearchOptions::default()
    };
    let mut out = Vec::new();
    run(a, a, &opts, &mut |m| {
        out.push(m.to_vec());
        false
    })?;
    out.sort();
    Ok(out)
}

pub const DEFAULT_TUPLE_CAP: u128 = 1_000_000;

/// Number of orbits of `n`-tuples of elements under the automorphism group.
pub fn orbit_count(a: &Structure, n: usize, automorphism_cap: usize, tuple_cap: u128) -> Result<u128> {
    if n == 0 {
        return Err(Error::InvalidArgument("tuple length must be at least 1".into()));
    }
    let total = checked_pow(a.size() as u128, n).unwrap_or(u128::MAX);
    if total > tuple_cap {
        return Err(Error::resource("tuples for orbit counting", total, tuple_cap));
    }
    let group = automorphisms(a, automorphism_cap)?;
    Ok(orbits_under(&group, a.size(), n))
}

pub(crate) fn orbits_under(group: &[Vec<usize>], size: usize, n: usize) -> u128 {
    let total = size.pow(n as u32);
    let mut seen = FixedBitSet::with_capacity(total);
    let mut count = 0u128;
    let mut coords = vec![0usize; n];
    for t in 0..total {
        if seen.contains(t) {
            continue;
        }
        count += 1;
        let mut rest = t;
        for c in coords.iter_mut().rev() {
            *c = rest % size;
            rest /= size;
        }
        for g in group {
            let image = coords.iter().fold(0, |acc, &c| acc * size + g[c]);
            seen.insert(image);
        }
    }
    count
}

/// A majority polymorphism `f: a^3 -> a` with
/// `f(x,x,y) = f(x,y,x) = f(y,x,x) = x`, returned as a map on the
/// elements of `power(a, 3)`.
pub fn find_majority_polymorphism(a: &Structure, limits: &SizeLimits) -> Result<Option<Vec<usize>>> {
    if a.signature().constant_count() > 0 {
        return Err(Error::InvalidArgument("majority polymorphisms of structures with constants".into()));
    }
    let cube = power(a, 3, limits)?;
    let n = a.size();
    let partial: Vec<Option<usize>> = (0..cube.size())
        .map(|i| {
            let (x, y, z) = (i / (n * n), (i / n) % n, i % n);
            if x == y || x == z {
                Some(x)
            } else if y == z {
                Some(y)
            } else {
                None
            }
        })
        .collect();
    Ok(find_hom(&cube, a, Some(&partial), false)?.map(|w| w.mapping))
}

/// True if `a` and `b` are isomorphic (constants respected).
pub fn is_isomorphic(a: &Structure, b: &Structure) -> Result<bool> {
    if a.size() != b.size() || a.tuple_count() != b.tuple_count() {
        return Ok(false);
    }
    if !a.signature().same_relations(b.signature()) {
        return Ok(false);
    }
    let opts = SearchOptions {
        respect_constants: true,
        injective: true,
        ..SearchOptions::default()
    };
    Ok(matches!(search(a, b, &opts)?, SearchOutcome::Found(_)))
}
