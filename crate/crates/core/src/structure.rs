//! Finite relational structures and the constructions used throughout the
//! crate: products, powers, disjoint unions, constant expansions, the
//! superproduct and weak substructures.
//!
//! Elements are dense indices `0..n`. Products use the pair encoding
//! `x * |b| + y`, so in a power the first coordinate is the most
//! significant digit in base `|a|`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

pub type Tuple = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
}

/// A finite relational signature together with a number of constant
/// symbols `c1..cm`.
///
/// Relation symbols are kept sorted by name so that two signatures with
/// the same symbols compare equal regardless of declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Signature {
    relations: Vec<RelationSymbol>,
    constant_count: usize,
}

impl Signature {
    pub fn new<I, S>(relations: I, constant_count: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut rels: Vec<RelationSymbol> = relations
            .into_iter()
            .map(|(name, arity)| RelationSymbol {
                name: name.into(),
                arity,
            })
            .collect();
        rels.sort();
        for w in rels.windows(2) {
            if w[0].name == w[1].name {
                return Err(Error::InvalidStructure(format!(
                    "relation symbol `{}` declared twice",
                    w[0].name
                )));
            }
        }
        if let Some(r) = rels.iter().find(|r| r.arity == 0) {
            return Err(Error::InvalidStructure(format!(
                "relation symbol `{}` has arity 0",
                r.name
            )));
        }
        Ok(Signature {
            relations: rels,
            constant_count,
        })
    }

    /// The signature of digraphs: one binary relation `E`.
    pub fn graph() -> Self {
        Signature::new([("E", 2)], 0).expect("valid")
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.relations
            .binary_search_by(|r| r.name.as_str().cmp(name))
            .ok()
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.index_of(name).map(|i| self.relations[i].arity)
    }

    pub fn constant_count(&self) -> usize {
        self.constant_count
    }

    pub fn with_constant_count(&self, m: usize) -> Signature {
        Signature {
            relations: self.relations.clone(),
            constant_count: m,
        }
    }

    pub fn same_relations(&self, other: &Signature) -> bool {
        self.relations == other.relations
    }

    /// Union of two relational signatures; fails on conflicting arities.
    pub fn merge(&self, other: &Signature) -> Result<Signature> {
        let mut map: BTreeMap<&str, usize> = BTreeMap::new();
        for r in self.relations.iter().chain(other.relations.iter()) {
            if let Some(&a) = map.get(r.name.as_str()) {
                if a != r.arity {
                    return Err(Error::SignatureMismatch(format!(
                        "`{}` used with arities {} and {}",
                        r.name, a, r.arity
                    )));
                }
            }
            map.insert(&r.name, r.arity);
        }
        Signature::new(map, self.constant_count.max(other.constant_count))
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rels: Vec<String> = self
            .relations
            .iter()
            .map(|r| format!("{}/{}", r.name, r.arity))
            .collect();
        write!(f, "<{}>", rels.join(", "))?;
        if self.constant_count > 0 {
            write!(f, " + c1..c{}", self.constant_count)?;
        }
        Ok(())
    }
}

/// Size limits for constructions that blow up (products, powers, the
/// superproduct).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeLimits {
    pub max_elements: u128,
    pub max_tuples: u128,
}

impl SizeLimits {
    pub const DEFAULT: SizeLimits = SizeLimits {
        max_elements: 1_000_000,
        max_tuples: 10_000_000,
    };

    fn check_elements(&self, what: &'static str, n: u128) -> Result<()> {
        if n > self.max_elements {
            return Err(Error::resource(what, n, self.max_elements));
        }
        Ok(())
    }

    fn check_tuples(&self, what: &'static str, n: u128) -> Result<()> {
        if n > self.max_tuples {
            return Err(Error::resource(what, n, self.max_tuples));
        }
        Ok(())
    }
}

impl Default for SizeLimits {
    fn default() -> Self {
        SizeLimits::DEFAULT
    }
}

/// A finite structure over a [`Signature`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    name: String,
    signature: Signature,
    size: usize,
    labels: Option<Vec<String>>,
    relations: Vec<BTreeSet<Tuple>>,
    constants: Vec<usize>,
}

impl Structure {
    /// An empty (no tuples) constant-free structure on `size` elements.
    pub fn new(signature: Signature, size: usize) -> Result<Self> {
        if signature.constant_count() > 0 {
            return Err(Error::InvalidStructure(
                "use Structure::with_constants for signatures with constants".into(),
            ));
        }
        Ok(Structure {
            name: String::new(),
            relations: vec![BTreeSet::new(); signature.relations().len()],
            signature,
            size,
            labels: None,
            constants: Vec::new(),
        })
    }

    pub fn with_constants(signature: Signature, size: usize, constants: Vec<usize>) -> Result<Self> {
        if constants.len() != signature.constant_count() {
            return Err(Error::InvalidStructure(format!(
                "{} constants interpreted, signature declares {}",
                constants.len(),
                signature.constant_count()
            )));
        }
        if let Some(&c) = constants.iter().find(|&&c| c >= size) {
            return Err(Error::InvalidStructure(format!(
                "constant interpreted as element {c}, domain has {size}"
            )));
        }
        Ok(Structure {
            name: String::new(),
            relations: vec![BTreeSet::new(); signature.relations().len()],
            signature,
            size,
            labels: None,
            constants,
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.size {
            return Err(Error::InvalidStructure(format!(
                "{} labels for {} elements",
                labels.len(),
                self.size
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn add_tuple(&mut self, relation: &str, tuple: Tuple) -> Result<()> {
        let idx = self.signature.index_of(relation).ok_or_else(|| {
            Error::InvalidStructure(format!("unknown relation symbol `{relation}`"))
        })?;
        self.add_tuple_at(idx, tuple)
    }

    pub fn add_tuple_at(&mut self, relation: usize, tuple: Tuple) -> Result<()> {
        let sym = &self.signature.relations()[relation];
        if tuple.len() != sym.arity {
            return Err(Error::InvalidStructure(format!(
                "tuple of length {} for `{}` of arity {}",
                tuple.len(),
                sym.name,
                sym.arity
            )));
        }
        if let Some(&x) = tuple.iter().find(|&&x| x >= self.size) {
            return Err(Error::InvalidStructure(format!(
                "tuple entry {x} out of range for `{}` (domain has {})",
                sym.name, self.size
            )));
        }
        self.relations[relation].insert(tuple);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, element: usize) -> String {
        match &self.labels {
            Some(l) => l[element].clone(),
            None => element.to_string(),
        }
    }

    /// Index of the element carrying `label`, if any.
    pub fn element_by_label(&self, label: &str) -> Option<usize> {
        match &self.labels {
            Some(l) => l.iter().position(|x| x == label),
            None => label.parse().ok().filter(|&i| i < self.size),
        }
    }

    /// Tuple sets, parallel to `signature().relations()`.
    pub fn relations(&self) -> &[BTreeSet<Tuple>] {
        &self.relations
    }

    pub fn tuples(&self, relation: &str) -> Option<&BTreeSet<Tuple>> {
        self.signature
            .index_of(relation)
            .map(|i| &self.relations[i])
    }

    pub fn has_tuple(&self, relation: usize, tuple: &[usize]) -> bool {
        self.relations[relation].contains(tuple)
    }

    /// Constant interpretations: `constants()[i]` interprets `c(i+1)`.
    pub fn constants(&self) -> &[usize] {
        &self.constants
    }

    pub fn tuple_count(&self) -> usize {
        self.relations.iter().map(BTreeSet::len).sum()
    }

    /// Equality of domain size, tuples and constants, ignoring name and labels.
    pub fn same_content(&self, other: &Structure) -> bool {
        self.signature == other.signature
            && self.size == other.size
            && self.relations == other.relations
            && self.constants == other.constants
    }

    /// Drops constants, keeping the relational part.
    pub fn relational_reduct(&self) -> Structure {
        Structure {
            name: self.name.clone(),
            signature: self.signature.with_constant_count(0),
            size: self.size,
            labels: self.labels.clone(),
            relations: self.relations.clone(),
            constants: Vec::new(),
        }
    }

    /// Same structure over a larger relational signature (new relations empty).
    pub fn extend_signature(&self, signature: &Signature) -> Result<Structure> {
        let mut out = Structure {
            name: self.name.clone(),
            signature: signature.with_constant_count(self.signature.constant_count()),
            size: self.size,
            labels: self.labels.clone(),
            relations: vec![BTreeSet::new(); signature.relations().len()],
            constants: self.constants.clone(),
        };
        for (sym, tuples) in self.signature.relations().iter().zip(&self.relations) {
            match signature.arity(&sym.name) {
                Some(a) if a == sym.arity => {
                    let idx = signature.index_of(&sym.name).expect("present");
                    out.relations[idx] = tuples.clone();
                }
                _ => {
                    return Err(Error::SignatureMismatch(format!(
                        "`{}`/{} is not in {}",
                        sym.name, sym.arity, signature
                    )))
                }
            }
        }
        Ok(out)
    }
}

fn require_same_signature(a: &Structure, b: &Structure) -> Result<()> {
    if a.signature != b.signature {
        return Err(Error::SignatureMismatch(format!(
            "{} vs {}",
            a.signature, b.signature
        )));
    }
    Ok(())
}

/// Direct (categorical) product. Element `(x, y)` has index `x * |b| + y`.
pub fn product(a: &Structure, b: &Structure, limits: &SizeLimits) -> Result<Structure> {
    require_same_signature(a, b)?;
    let n = a.size as u128 * b.size as u128;
    limits.check_elements("product domain", n)?;
    let t: u128 = a
        .relations
        .iter()
        .zip(&b.relations)
        .map(|(x, y)| x.len() as u128 * y.len() as u128)
        .sum();
    limits.check_tuples("product tuples", t)?;

    let nb = b.size;
    let relations = a
        .relations
        .iter()
        .zip(&b.relations)
        .map(|(ra, rb)| {
            let mut out = BTreeSet::new();
            for ta in ra {
                for tb in rb {
                    out.insert(ta.iter().zip(tb).map(|(&x, &y)| x * nb + y).collect());
                }
            }
            out
        })
        .collect();
    let constants = a
        .constants
        .iter()
        .zip(&b.constants)
        .map(|(&x, &y)| x * nb + y)
        .collect();
    let mut labels = Vec::with_capacity(n as usize);
    for x in 0..a.size {
        for y in 0..b.size {
            labels.push(format!("({},{})", a.label(x), b.label(y)));
        }
    }
    Ok(Structure {
        name: format!("{}x{}", a.name, b.name),
        signature: a.signature.clone(),
        size: n as usize,
        labels: Some(labels),
        relations,
        constants,
    })
}

/// Decodes an element of `a^r` into its coordinates (most significant first).
pub fn power_coordinates(base: usize, r: usize, mut element: usize) -> Vec<usize> {
    let mut coords = vec![0; r];
    for c in coords.iter_mut().rev() {
        *c = element % base;
        element /= base;
    }
    coords
}

/// Inverse of [`power_coordinates`].
pub fn power_index(base: usize, coords: &[usize]) -> usize {
    coords.iter().fold(0, |acc, &c| acc * base + c)
}

/// `a^r`, the product of `r` copies of `a`, with coordinate-tuple labels.
pub fn power(a: &Structure, r: usize, limits: &SizeLimits) -> Result<Structure> {
    if r == 0 {
        return Err(Error::InvalidArgument("power exponent must be at least 1".into()));
    }
    let n = checked_pow(a.size as u128, r).unwrap_or(u128::MAX);
    limits.check_elements("power domain", n)?;
    let t = a
        .relations
        .iter()
        .map(|x| checked_pow(x.len() as u128, r).unwrap_or(u128::MAX))
        .fold(0u128, |acc, x| acc.saturating_add(x));
    limits.check_tuples("power tuples", t)?;

    let base = a.size;
    let relations = a
        .relations
        .iter()
        .zip(a.signature.relations())
        .map(|(ra, sym)| {
            let tuples: Vec<&Tuple> = ra.iter().collect();
            let mut layer: Vec<Tuple> = vec![vec![0; sym.arity]];
            for _ in 0..r {
                let mut next = Vec::with_capacity(layer.len() * tuples.len());
                for acc in &layer {
                    for t in &tuples {
                        next.push(acc.iter().zip(t.iter()).map(|(&x, &y)| x * base + y).collect());
                    }
                }
                layer = next;
            }
            if tuples.is_empty() {
                BTreeSet::new()
            } else {
                layer.into_iter().collect()
            }
        })
        .collect();
    let constants = a
        .constants
        .iter()
        .map(|&c| power_index(base, &vec![c; r]))
        .collect();
    let labels = (0..n as usize)
        .map(|i| {
            if r == 1 {
                a.label(i)
            } else {
                let parts: Vec<String> = power_coordinates(base, r, i)
                    .into_iter()
                    .map(|c| a.label(c))
                    .collect();
                format!("({})", parts.join(","))
            }
        })
        .collect();
    Ok(Structure {
        name: format!("{}^{}", a.name, r),
        signature: a.signature.clone(),
        size: n as usize,
        labels: Some(labels),
        relations,
        constants,
    })
}

pub(crate) fn checked_pow(base: u128, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// Disjoint union; elements of `b` are shifted by `|a|`.
pub fn disjoint_union(a: &Structure, b: &Structure) -> Result<Structure> {
    require_same_signature(a, b)?;
    if a.signature.constant_count() > 0 {
        return Err(Error::InvalidArgument(
            "disjoint union of structures with constants is not defined".into(),
        ));
    }
    let shift = a.size;
    let relations = a
        .relations
        .iter()
        .zip(&b.relations)
        .map(|(ra, rb)| {
            ra.iter()
                .cloned()
                .chain(rb.iter().map(|t| t.iter().map(|&x| x + shift).collect()))
                .collect()
        })
        .collect();
    let labels = (0..a.size)
        .map(|i| format!("{}.{}", 0, a.label(i)))
        .chain((0..b.size).map(|i| format!("{}.{}", 1, b.label(i))))
        .collect();
    Ok(Structure {
        name: format!("{}+{}", a.name, b.name),
        signature: a.signature.clone(),
        size: a.size + b.size,
        labels: Some(labels),
        relations,
        constants: Vec::new(),
    })
}

/// `n` disjoint copies of `a`.
pub fn multiple(a: &Structure, n: usize) -> Result<Structure> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one copy required".into()));
    }
    let mut acc = a.clone();
    for _ in 1..n {
        acc = disjoint_union(&acc, a)?;
    }
    let size = acc.size;
    let labels = (0..size).map(|i| i.to_string()).collect();
    acc.labels = Some(labels);
    acc.name = format!("{}*{}", n, a.name);
    Ok(acc)
}

/// Expands a constant-free structure by constants `c(i+1) -> lambda[i]`.
pub fn expansion(a: &Structure, lambda: &[usize]) -> Result<Structure> {
    if a.signature.constant_count() > 0 {
        return Err(Error::InvalidArgument(
            "structure already interprets constants".into(),
        ));
    }
    if let Some(&x) = lambda.iter().find(|&&x| x >= a.size) {
        return Err(Error::InvalidArgument(format!(
            "constant assignment {x} out of range (domain has {})",
            a.size
        )));
    }
    Ok(Structure {
        name: a.name.clone(),
        signature: a.signature.with_constant_count(lambda.len()),
        size: a.size,
        labels: a.labels.clone(),
        relations: a.relations.clone(),
        constants: lambda.to_vec(),
    })
}

/// The product of all expansions of `a` by `m` constants.
///
/// Factors are ordered lexicographically by constant assignment, `c1`
/// most significant, so the relational reduct coincides element for
/// element with `power(a, |a|^m)`.
pub fn superproduct(a: &Structure, m: usize, limits: &SizeLimits) -> Result<Structure> {
    if m == 0 {
        return Err(Error::InvalidArgument("superproduct needs m >= 1".into()));
    }
    if a.signature.constant_count() > 0 {
        return Err(Error::InvalidArgument(
            "superproduct base must be constant-free".into(),
        ));
    }
    if a.size == 0 {
        return Err(Error::InvalidArgument("superproduct of an empty structure".into()));
    }
    let factors = checked_pow(a.size as u128, m)
        .filter(|&f| f <= limits.max_elements)
        .ok_or_else(|| Error::resource("superproduct factor count", u128::MAX, limits.max_elements))?;
    let n = checked_pow(a.size as u128, factors as usize).unwrap_or(u128::MAX);
    limits.check_elements("superproduct domain", n)?;
    let factors = factors as usize;
    let mut sp = power(a, factors, limits)?;
    let constants = (0..m)
        .map(|i| {
            let coords: Vec<usize> = (0..factors)
                .map(|lambda| power_coordinates(a.size, m, lambda)[i])
                .collect();
            power_index(a.size, &coords)
        })
        .collect();
    sp.signature = a.signature.with_constant_count(m);
    sp.constants = constants;
    sp.name = format!("SP({},{})", a.name, m);
    Ok(sp)
}

/// A weak substructure: the kept elements (re-indexed in ascending order)
/// together with a subset of the tuples on them.
///
/// `keep_tuples` is parallel to the signature's relations; every kept tuple
/// must be a tuple of `a` on kept elements.
pub fn substructure(
    a: &Structure,
    keep_elements: &BTreeSet<usize>,
    keep_tuples: &[BTreeSet<Tuple>],
) -> Result<Structure> {
    if keep_tuples.len() != a.relations.len() {
        return Err(Error::InvalidArgument(format!(
            "{} tuple sets for {} relations",
            keep_tuples.len(),
            a.relations.len()
        )));
    }
    if let Some(&x) = keep_elements.iter().find(|&&x| x >= a.size) {
        return Err(Error::InvalidArgument(format!("element {x} out of range")));
    }
    let mut index = vec![usize::MAX; a.size];
    for (new, &old) in keep_elements.iter().enumerate() {
        index[old] = new;
    }
    let mut relations = Vec::with_capacity(a.relations.len());
    for ((kept, orig), sym) in keep_tuples
        .iter()
        .zip(&a.relations)
        .zip(a.signature.relations())
    {
        let mut out = BTreeSet::new();
        for t in kept {
            if !orig.contains(t) {
                return Err(Error::InvalidArgument(format!(
                    "tuple {t:?} is not in `{}`",
                    sym.name
                )));
            }
            if t.iter().any(|&x| index[x] == usize::MAX) {
                return Err(Error::InvalidArgument(format!(
                    "tuple {t:?} of `{}` mentions a dropped element",
                    sym.name
                )));
            }
            out.insert(t.iter().map(|&x| index[x]).collect());
        }
        relations.push(out);
    }
    let mut constants = Vec::with_capacity(a.constants.len());
    for &c in &a.constants {
        if index[c] == usize::MAX {
            return Err(Error::InvalidArgument(format!(
                "constant on dropped element {c}"
            )));
        }
        constants.push(index[c]);
    }
    let labels = keep_elements.iter().map(|&x| a.label(x)).collect();
    Ok(Structure {
        name: a.name.clone(),
        signature: a.signature.clone(),
        size: keep_elements.len(),
        labels: Some(labels),
        relations,
        constants,
    })
}

/// The substructure induced on `elements`.
pub fn induced_substructure(a: &Structure, elements: &BTreeSet<usize>) -> Result<Structure> {
    let keep: Vec<BTreeSet<Tuple>> = a
        .relations
        .iter()
        .map(|r| {
            r.iter()
                .filter(|t| t.iter().all(|x| elements.contains(x)))
                .cloned()
                .collect()
        })
        .collect();
    substructure(a, elements, &keep)
}
