//! Generators for the concrete structure families used in examples and tests.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::structure::{multiple, Signature, Structure};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// `K_n`, or the reflexive clique `K_n*`.
    Clique { n: usize, reflexive: bool },
    /// Undirected path on `[n]` with loops at the positions where the bit
    /// string has a `1`.
    Path { loops: String },
    /// Undirected cycle `C_n`.
    Cycle { n: usize },
    /// Complete bipartite graph `K_{p,q}`.
    Bipartite { p: usize, q: usize },
    /// `n` isolated loopless vertices.
    Edgeless { n: usize },
    /// `k` unary relations on `[k]` with `U_i = [k] \ {i}`.
    AkUnary { k: usize },
    /// Two-element target for [`Family::AkUnary`]: `1` in every `U_i`.
    BkUnary { k: usize },
    /// Directed `k`-cycle with `U` on every vertex except the first.
    AkCycle { k: usize },
    /// Two-element target for [`Family::AkCycle`]: loops on both, `U = {1}`.
    BCycle,
    /// Vertices `{1,2}`, edges `(1,1),(1,2),(2,2)`.
    Dp1Star,
    /// `([m]; <=)` as a digraph.
    LinearOrder { m: usize },
    /// Vertices `{0,1}`, edges `(0,1),(1,0),(1,1)`.
    P01,
    /// `K_4` minus the edge `{0,3}`.
    H2,
    /// A single looped vertex.
    K1Star,
    /// Three elements with `E = {(1,1),(2,3),(3,2)}`, `R = {1,2}`, `G = {1,3}`.
    ErgExample,
}

impl Family {
    pub const NAMES: &'static [&'static str] = &[
        "clique", "path", "cycle", "bipartite", "edgeless", "a_k_unary", "b_k_unary",
        "a_k_cycle", "b_cycle", "dp1_star", "linear_order", "p01", "h2", "k1s", "erg",
    ];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Clique { n, reflexive } => {
                write!(f, "clique:{n}{}", if *reflexive { ":r" } else { "" })
            }
            Family::Path { loops } => write!(f, "path:{loops}"),
            Family::Cycle { n } => write!(f, "cycle:{n}"),
            Family::Bipartite { p, q } => write!(f, "bipartite:{p}:{q}"),
            Family::Edgeless { n } => write!(f, "edgeless:{n}"),
            Family::AkUnary { k } => write!(f, "a_k_unary:{k}"),
            Family::BkUnary { k } => write!(f, "b_k_unary:{k}"),
            Family::AkCycle { k } => write!(f, "a_k_cycle:{k}"),
            Family::BCycle => write!(f, "b_cycle"),
            Family::Dp1Star => write!(f, "dp1_star"),
            Family::LinearOrder { m } => write!(f, "linear_order:{m}"),
            Family::P01 => write!(f, "p01"),
            Family::H2 => write!(f, "h2"),
            Family::K1Star => write!(f, "k1s"),
            Family::ErgExample => write!(f, "erg"),
        }
    }
}

/// Parses `name[:param[:param]]`, e.g. `clique:3`, `clique:2:r`,
/// `path:0110`, `a_k_unary:4`.
impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let params: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<usize> {
            params
                .get(i)
                .ok_or_else(|| Error::InvalidArgument(format!("`{name}` needs parameter {}", i + 1)))?
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad numeric parameter in `{s}`")))
        };
        let no_params = |f: Family| -> Result<Family> {
            if params.is_empty() {
                Ok(f)
            } else {
                Err(Error::InvalidArgument(format!("`{name}` takes no parameters")))
            }
        };
        match name {
            "clique" => {
                let reflexive = match params.get(1) {
                    None => false,
                    Some(&"r") | Some(&"reflexive") => true,
                    Some(&"i") | Some(&"irreflexive") => false,
                    Some(other) => {
                        return Err(Error::InvalidArgument(format!("unknown clique flag `{other}`")))
                    }
                };
                Ok(Family::Clique { n: num(0)?, reflexive })
            }
            "path" => Ok(Family::Path {
                loops: params
                    .first()
                    .ok_or_else(|| Error::InvalidArgument("path needs a bit string".into()))?
                    .to_string(),
            }),
            "cycle" => Ok(Family::Cycle { n: num(0)? }),
            "bipartite" => Ok(Family::Bipartite { p: num(0)?, q: num(1)? }),
            "edgeless" => Ok(Family::Edgeless { n: num(0)? }),
            "a_k_unary" => Ok(Family::AkUnary { k: num(0)? }),
            "b_k_unary" => Ok(Family::BkUnary { k: num(0)? }),
            "a_k_cycle" => Ok(Family::AkCycle { k: num(0)? }),
            "b_cycle" => no_params(Family::BCycle),
            "dp1_star" => no_params(Family::Dp1Star),
            "linear_order" => Ok(Family::LinearOrder { m: num(0)? }),
            "p01" => no_params(Family::P01),
            "h2" => no_params(Family::H2),
            "k1s" => no_params(Family::K1Star),
            "erg" => no_params(Family::ErgExample),
            _ => Err(Error::InvalidArgument(format!(
                "unknown family `{name}` (known: {})",
                Family::NAMES.join(", ")
            ))),
        }
    }
}

fn labels_from(start: usize, n: usize) -> Vec<String> {
    (start..start + n).map(|i| i.to_string()).collect()
}

fn graph(n: usize, label_start: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Structure {
    let mut g = Structure::new(Signature::graph(), n)
        .expect("constant-free")
        .with_labels(labels_from(label_start, n))
        .expect("label count");
    for (x, y) in edges {
        g.add_tuple_at(0, vec![x, y]).expect("in range");
    }
    g
}

fn symmetric(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    edges.iter().flat_map(|&(x, y)| [(x, y), (y, x)]).collect()
}

pub fn generate(family: &Family) -> Result<Structure> {
    let s = match family {
        Family::Clique { n, reflexive } => {
            if *n == 0 {
                return Err(Error::InvalidArgument("clique needs n >= 1".into()));
            }
            let edges = (0..*n).flat_map(|x| (0..*n).map(move |y| (x, y)));
            let edges: Vec<_> = edges.filter(|(x, y)| *reflexive || x != y).collect();
            let name = if *reflexive { format!("K{n}*") } else { format!("K{n}") };
            graph(*n, 0, edges).named(name)
        }
        Family::Path { loops } => {
            if loops.is_empty() || loops.chars().any(|c| c != '0' && c != '1') {
                return Err(Error::InvalidArgument(format!(
                    "path needs a non-empty bit string, got `{loops}`"
                )));
            }
            let n = loops.len();
            let mut edges: Vec<(usize, usize)> =
                symmetric(&(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>());
            edges.extend(loops.chars().enumerate().filter(|(_, c)| *c == '1').map(|(i, _)| (i, i)));
            graph(n, 1, edges).named(format!("P{loops}"))
        }
        Family::Cycle { n } => {
            if *n < 3 {
                return Err(Error::InvalidArgument("cycle needs n >= 3".into()));
            }
            let edges = symmetric(&(0..*n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>());
            graph(*n, 0, edges).named(format!("C{n}"))
        }
        Family::Bipartite { p, q } => {
            if *p == 0 || *q == 0 {
                return Err(Error::InvalidArgument("bipartite needs p, q >= 1".into()));
            }
            let e: Vec<_> = (0..*p).flat_map(|x| (0..*q).map(move |y| (x, p + y))).collect();
            graph(p + q, 0, symmetric(&e)).named(format!("K{p},{q}"))
        }
        Family::Edgeless { n } => {
            if *n == 0 {
                return Err(Error::InvalidArgument("edgeless needs n >= 1".into()));
            }
            graph(*n, 0, []).named(format!("{n}K1"))
        }
        Family::AkUnary { k } => {
            if *k < 2 {
                return Err(Error::InvalidArgument("a_k_unary needs k >= 2".into()));
            }
            let sig = Signature::new((1..=*k).map(|i| (format!("U{i}"), 1)), 0)?;
            let mut s = Structure::new(sig, *k)?.with_labels(labels_from(1, *k))?;
            for i in 1..=*k {
                for x in (0..*k).filter(|&x| x != i - 1) {
                    s.add_tuple(&format!("U{i}"), vec![x])?;
                }
            }
            s.named(format!("A{k}"))
        }
        Family::BkUnary { k } => {
            if *k < 2 {
                return Err(Error::InvalidArgument("b_k_unary needs k >= 2".into()));
            }
            let sig = Signature::new((1..=*k).map(|i| (format!("U{i}"), 1)), 0)?;
            let mut s = Structure::new(sig, 2)?.with_labels(labels_from(0, 2))?;
            for i in 1..=*k {
                s.add_tuple(&format!("U{i}"), vec![1])?;
            }
            s.named(format!("B{k}"))
        }
        Family::AkCycle { k } => {
            if *k < 2 {
                return Err(Error::InvalidArgument("a_k_cycle needs k >= 2".into()));
            }
            let sig = Signature::new([("E", 2), ("U", 1)], 0)?;
            let mut s = Structure::new(sig, *k)?.with_labels(labels_from(1, *k))?;
            for i in 0..*k {
                s.add_tuple("E", vec![i, (i + 1) % k])?;
                if i > 0 {
                    s.add_tuple("U", vec![i])?;
                }
            }
            s.named(format!("DC{k}U"))
        }
        Family::BCycle => {
            let sig = Signature::new([("E", 2), ("U", 1)], 0)?;
            let mut s = Structure::new(sig, 2)?.with_labels(labels_from(0, 2))?;
            s.add_tuple("E", vec![0, 0])?;
            s.add_tuple("E", vec![1, 1])?;
            s.add_tuple("U", vec![1])?;
            s.named("Bcyc")
        }
        Family::Dp1Star => graph(2, 1, [(0, 0), (0, 1), (1, 1)]).named("DP1*"),
        Family::LinearOrder { m } => {
            if *m == 0 {
                return Err(Error::InvalidArgument("linear_order needs m >= 1".into()));
            }
            let e: Vec<_> = (0..*m).flat_map(|x| (x..*m).map(move |y| (x, y))).collect();
            graph(*m, 1, e).named(format!("L{m}"))
        }
        Family::P01 => graph(2, 0, [(0, 1), (1, 0), (1, 1)]).named("P01"),
        Family::H2 => graph(4, 0, symmetric(&[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])).named("H2"),
        Family::K1Star => graph(1, 0, [(0, 0)]).named("K1*"),
        Family::ErgExample => {
            let sig = Signature::new([("E", 2), ("R", 1), ("G", 1)], 0)?;
            let mut s = Structure::new(sig, 3)?.with_labels(labels_from(1, 3))?;
            for t in [[0, 0], [1, 2], [2, 1]] {
                s.add_tuple("E", t.to_vec())?;
            }
            s.add_tuple("R", vec![0])?;
            s.add_tuple("R", vec![1])?;
            s.add_tuple("G", vec![0])?;
            s.add_tuple("G", vec![2])?;
            s.named("ERG")
        }
    };
    Ok(s)
}

/// `n` copies of `K1`, i.e. the edgeless graph on `n` vertices.
pub fn isolated(n: usize) -> Result<Structure> {
    multiple(&generate(&Family::Clique { n: 1, reflexive: false })?, n)
}
