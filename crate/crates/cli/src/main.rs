use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qcsp_core::containment::{decide_containment, BoundChoice, ContainmentOptions, ContainmentVerdict, Outcome};
use qcsp_core::entailment::{build_truncation_with, decide_entailment, skolemize, Entailment, EntailmentOptions, TruncationLimits};
use qcsp_core::format::{mapping_to_value, structure_from_json, structure_to_json, structure_to_value};
use qcsp_core::game::evaluate;
use qcsp_core::generate::{generate, Family};
use qcsp_core::hom::{find_majority_polymorphism, find_surjective_hom, orbit_count, DEFAULT_AUTOMORPHISM_CAP, DEFAULT_TUPLE_CAP};
use qcsp_core::qcore::{find_qcore, Failure, QcoreOptions, QcoreReport, Removal};
use qcsp_core::sentence::{classify, parse_sentence, propagate_equalities};
use qcsp_core::structure::{power, product, superproduct};
use qcsp_core::{Error, PhSentence, SizeLimits, Structure};

const YES: u8 = 0;
const NO: u8 = 1;
const USAGE: u8 = 2;
const UNDECIDED: u8 = 3;

#[derive(Parser)]
#[command(name = "qcsp", version, about = "Model containment, entailment and Q-cores for positive Horn logic")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Reserved; nothing here is randomized.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a sentence on a structure.
    Eval { structure: PathBuf, sentence: PathBuf },
    /// Decide QCSP(A) ⊆ QCSP(B) by searching for A^r ->> B.
    Contain {
        a: PathBuf,
        b: PathBuf,
        /// Print the surjection.
        #[arg(long)]
        witness: bool,
        /// orbit, cardinality, or a fixed exponent bound.
        #[arg(long, value_parser = parse_bound)]
        bound: Option<BoundChoice>,
        /// Stop after this exponent.
        #[arg(long)]
        cap: Option<usize>,
        /// Skip the refutation heuristics.
        #[arg(long)]
        no_refute: bool,
    },
    /// Decide whether phi entails psi.
    Entail {
        phi: PathBuf,
        psi: PathBuf,
        #[arg(long)]
        max_terms: Option<usize>,
        #[arg(long)]
        max_states: Option<usize>,
        /// Dump the last truncation built.
        #[arg(long)]
        trace: bool,
    },
    /// Find a Q-core.
    Qcore {
        structure: PathBuf,
        /// Write the full report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        max_size: usize,
    },
    /// Search for a surjective homomorphism.
    Surhom {
        a: PathBuf,
        b: PathBuf,
        /// Require constants to be preserved.
        #[arg(long)]
        constants: bool,
    },
    /// Product of two structures, a power, or a superproduct.
    Product {
        a: PathBuf,
        b: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["b", "superproduct"])]
        power: Option<usize>,
        #[arg(long, conflicts_with = "b")]
        superproduct: Option<usize>,
    },
    /// Print a structure from the built-in families, e.g. `clique:3`, `h2`.
    Gen {
        family: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Count orbits of n-tuples under automorphisms.
    Orbits {
        structure: PathBuf,
        #[arg(long)]
        arity: usize,
    },
    /// Search for a majority polymorphism.
    Majority {
        structure: PathBuf,
        #[arg(long)]
        witness: bool,
    },
}

fn parse_bound(s: &str) -> Result<BoundChoice, String> {
    match s {
        "orbit" => Ok(BoundChoice::Orbit),
        "cardinality" => Ok(BoundChoice::Cardinality),
        "auto" => Ok(BoundChoice::Auto),
        n => n
            .parse::<u128>()
            .map(BoundChoice::Fixed)
            .map_err(|_| format!("expected orbit, cardinality or a number, got `{n}`")),
    }
}

/// An error with the exit code it maps to.
struct Failed(u8, String);

impl From<Error> for Failed {
    fn from(e: Error) -> Self {
        let code = if e.is_resource() { UNDECIDED } else { USAGE };
        Failed(code, e.to_string())
    }
}

type Run = Result<u8, Failed>;

fn read(path: &Path) -> Result<String, Failed> {
    fs::read_to_string(path).map_err(|e| Failed(USAGE, format!("{}: {e}", path.display())))
}

fn load_structure(path: &Path) -> Result<Structure, Failed> {
    structure_from_json(&read(path)?).map_err(|e| Failed(USAGE, format!("{}: {e}", path.display())))
}

fn load_sentence(path: &Path) -> Result<PhSentence, Failed> {
    parse_sentence(&read(path)?).map_err(|e| Failed(USAGE, format!("{}: {e}", path.display())))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn eval(common: &Common, structure: &Path, sentence: &Path) -> Run {
    let a = load_structure(structure)?;
    let s = load_sentence(sentence)?;
    let truth = evaluate(&a, &s)?.truth;
    if common.json {
        print_json(&json!({ "truth": truth, "sentence": s.to_string() }));
    } else {
        println!("{truth}");
    }
    Ok(if truth { YES } else { NO })
}

fn verdict_value(a: &Structure, b: &Structure, v: &ContainmentVerdict, witness: bool) -> Result<Value, Failed> {
    let mut out = json!({ "bound": v.bound.to_string(), "bound_kind": v.bound_kind });
    match &v.outcome {
        Outcome::Yes { r, witness: w } => {
            out["verdict"] = json!("yes");
            out["r"] = json!(r);
            if witness {
                let p = power(a, *r, &SizeLimits::DEFAULT)?;
                out["witness"] = mapping_to_value(&p, b, &w.mapping);
            }
        }
        Outcome::No { refutation } => {
            out["verdict"] = json!("no");
            out["refutation"] = serde_json::to_value(refutation).expect("serializable");
        }
        Outcome::Inconclusive { reached, reason } => {
            out["verdict"] = json!("inconclusive");
            out["reached"] = json!(reached);
            out["reason"] = json!(reason);
        }
    }
    Ok(out)
}

fn exit_for(v: &ContainmentVerdict) -> u8 {
    match v.outcome {
        Outcome::Yes { .. } => YES,
        Outcome::No { .. } => NO,
        Outcome::Inconclusive { .. } => UNDECIDED,
    }
}

fn describe(v: &Value) -> String {
    match v["verdict"].as_str() {
        Some("yes") => format!("yes: r={} (bound {}, {})", v["r"], v["bound"].as_str().unwrap_or(""), v["bound_kind"].as_str().unwrap_or("")),
        Some("no") => {
            let r = &v["refutation"];
            let why = match r["kind"].as_str() {
                Some("no_homomorphism") => "no homomorphism A -> B".to_string(),
                Some("bound_exhausted") => format!("no surjection from any power up to {}", v["bound"].as_str().unwrap_or("")),
                Some("superproduct") => format!("superproduct with {} constants fails at {}", r["m"], r["mu"]),
                Some("sentence") => format!("separated by `{}`", r["sentence"].as_str().unwrap_or("")),
                _ => r.to_string(),
            };
            format!("no: {why}")
        }
        _ => format!("inconclusive after r={}: {}", v["reached"], v["reason"].as_str().unwrap_or("")),
    }
}

fn contain(common: &Common, a: &Path, b: &Path, witness: bool, bound: Option<BoundChoice>, cap: Option<usize>, no_refute: bool) -> Run {
    let (a, b) = (load_structure(a)?, load_structure(b)?);
    let opts = ContainmentOptions {
        cap,
        bound: bound.unwrap_or_default(),
        refute: !no_refute,
        ..ContainmentOptions::default()
    };
    let v = decide_containment(&a, &b, &opts)?;
    let out = verdict_value(&a, &b, &v, witness)?;
    if common.json {
        print_json(&out);
    } else {
        println!("{}", describe(&out));
        if let Some(w) = out.get("witness") {
            print_json(w);
        }
    }
    Ok(exit_for(&v))
}

fn entail(common: &Common, phi: &Path, psi: &Path, max_terms: Option<usize>, max_states: Option<usize>, trace: bool) -> Run {
    let (phi, psi) = (load_sentence(phi)?, load_sentence(psi)?);
    let mut opts = EntailmentOptions::default();
    if let Some(n) = max_terms {
        opts.max_terms = n;
    }
    if let Some(n) = max_states {
        opts.max_states = n;
    }
    let report = decide_entailment(&phi, &psi, &opts)?;
    let truncation = match (trace, report.rank_reached) {
        (true, Some(m)) if !classify(&phi).is_degenerate => {
            let form = skolemize(&propagate_equalities(&phi)?)?;
            let limits = TruncationLimits {
                max_terms: opts.max_terms,
                max_instantiations: opts.max_instantiations,
            };
            Some(structure_to_value(&build_truncation_with(&form, report.constants, m, &limits)?.to_structure()?))
        }
        _ => None,
    };
    if common.json {
        let mut out = serde_json::to_value(&report).expect("serializable");
        if let Some(t) = truncation {
            out["trace"] = t;
        }
        print_json(&out);
    } else {
        let word = match report.verdict {
            Entailment::Yes => "yes",
            Entailment::No => "no",
            Entailment::ResourceExceeded => "resource exceeded",
        };
        println!("{word}");
        if report.degenerate {
            println!("premise is degenerate; decided on one-element models");
        } else {
            println!(
                "constants {}, rank reached {}, rank bound {}, terms {}, game states {}",
                report.constants,
                report.rank_reached.map_or("-".into(), |m| m.to_string()),
                report.rank_bound,
                report.terms,
                report.states
            );
        }
        if let Some(reason) = &report.reason {
            println!("{reason}");
        }
        if let Some(t) = truncation {
            print_json(&t);
        }
    }
    Ok(match report.verdict {
        Entailment::Yes => YES,
        Entailment::No => NO,
        Entailment::ResourceExceeded => UNDECIDED,
    })
}

fn removal_value(a: &Structure, r: &Removal) -> Value {
    match r {
        Removal::Element(x) => json!({ "element": a.label(*x) }),
        Removal::Tuple { relation, tuple } => json!({
            "relation": a.signature().relations()[*relation].name,
            "tuple": tuple.iter().map(|&x| a.label(x)).collect::<Vec<_>>(),
        }),
    }
}

fn qcore_value(a: &Structure, rep: &QcoreReport) -> Result<Value, Failed> {
    let minimality: Vec<Value> = rep
        .minimality
        .iter()
        .map(|s| {
            let b = s.candidate.build(a)?;
            let (direction, v) = match &s.failure {
                Failure::Forward(v) => ("forward", verdict_value(a, &b, v, false)?),
                Failure::Backward(v) => ("backward", verdict_value(&b, a, v, false)?),
            };
            Ok(json!({ "removed": removal_value(a, &s.removal), "fails": direction, "verdict": v }))
        })
        .collect::<Result<_, Failed>>()?;
    Ok(json!({
        "qcore": structure_to_value(&rep.qcore),
        "is_induced": rep.is_induced,
        "forward": verdict_value(a, &rep.qcore, &rep.forward, true)?,
        "backward": verdict_value(&rep.qcore, a, &rep.backward, true)?,
        "minimality": minimality,
        "examined": rep.examined,
        "unresolved": rep.unresolved,
        "inconclusive": rep.inconclusive,
    }))
}

fn qcore(common: &Common, structure: &Path, report: Option<&Path>, max_size: usize) -> Run {
    let a = load_structure(structure)?;
    let opts = QcoreOptions {
        max_size,
        ..QcoreOptions::default()
    };
    let rep = find_qcore(&a, &opts)?;
    let full = qcore_value(&a, &rep)?;
    if let Some(path) = report {
        let text = serde_json::to_string_pretty(&full).expect("serializable");
        fs::write(path, text + "\n").map_err(|e| Failed(USAGE, format!("{}: {e}", path.display())))?;
    }
    if common.json {
        print_json(&full);
    } else {
        println!(
            "{} elements, {} tuples, {}induced{}",
            rep.qcore.size(),
            rep.qcore.tuple_count(),
            if rep.is_induced { "" } else { "not " },
            if rep.inconclusive { ", minimality not established" } else { "" }
        );
        println!("{}", structure_to_json(&rep.qcore));
    }
    Ok(if rep.inconclusive { UNDECIDED } else { YES })
}

fn surhom(common: &Common, a: &Path, b: &Path, constants: bool) -> Run {
    let (a, b) = (load_structure(a)?, load_structure(b)?);
    let w = find_surjective_hom(&a, &b, constants)?;
    let map = w.as_ref().map(|w| mapping_to_value(&a, &b, &w.mapping));
    if common.json {
        print_json(&json!({ "found": map.is_some(), "witness": map }));
    } else if let Some(m) = &map {
        print_json(m);
    } else {
        println!("none");
    }
    Ok(if map.is_some() { YES } else { NO })
}

fn product_cmd(a: &Path, b: Option<&Path>, pow: Option<usize>, sp: Option<usize>) -> Run {
    let a = load_structure(a)?;
    let limits = SizeLimits::DEFAULT;
    let out = match (b, pow, sp) {
        (Some(b), None, None) => product(&a, &load_structure(b)?, &limits)?,
        (None, Some(r), None) => power(&a, r, &limits)?,
        (None, None, Some(m)) => superproduct(&a, m, &limits)?,
        _ => return Err(Failed(USAGE, "give a second structure, --power R or --superproduct M".into())),
    };
    println!("{}", structure_to_json(&out));
    Ok(YES)
}

fn gen(family: &str, output: Option<&Path>) -> Run {
    let f: Family = family.parse()?;
    let text = structure_to_json(&generate(&f)?);
    match output {
        Some(p) => fs::write(p, text + "\n").map_err(|e| Failed(USAGE, format!("{}: {e}", p.display())))?,
        None => println!("{text}"),
    }
    Ok(YES)
}

fn orbits(common: &Common, structure: &Path, arity: usize) -> Run {
    let a = load_structure(structure)?;
    let n = orbit_count(&a, arity, DEFAULT_AUTOMORPHISM_CAP, DEFAULT_TUPLE_CAP)?;
    if common.json {
        print_json(&json!({ "arity": arity, "orbits": n.to_string() }));
    } else {
        println!("{n}");
    }
    Ok(YES)
}

fn majority(common: &Common, structure: &Path, witness: bool) -> Run {
    let a = load_structure(structure)?;
    let f = find_majority_polymorphism(&a, &SizeLimits::DEFAULT)?;
    let map = match (&f, witness) {
        (Some(f), true) => Some(mapping_to_value(&power(&a, 3, &SizeLimits::DEFAULT)?, &a, f)),
        _ => None,
    };
    if common.json {
        print_json(&json!({ "found": f.is_some(), "witness": map }));
    } else {
        println!("{}", if f.is_some() { "present" } else { "absent" });
        if let Some(m) = &map {
            print_json(m);
        }
    }
    Ok(if f.is_some() { YES } else { NO })
}

fn run(cli: Cli) -> Run {
    let c = &cli.common;
    match cli.command {
        Command::Eval { structure, sentence } => eval(c, &structure, &sentence),
        Command::Contain {
            a,
            b,
            witness,
            bound,
            cap,
            no_refute,
        } => contain(c, &a, &b, witness, bound, cap, no_refute),
        Command::Entail {
            phi,
            psi,
            max_terms,
            max_states,
            trace,
        } => entail(c, &phi, &psi, max_terms, max_states, trace),
        Command::Qcore {
            structure,
            report,
            max_size,
        } => qcore(c, &structure, report.as_deref(), max_size),
        Command::Surhom { a, b, constants } => surhom(c, &a, &b, constants),
        Command::Product {
            a,
            b,
            power,
            superproduct,
        } => product_cmd(&a, b.as_deref(), power, superproduct),
        Command::Gen { family, output } => gen(&family, output.as_deref()),
        Command::Orbits { structure, arity } => orbits(c, &structure, arity),
        Command::Majority { structure, witness } => majority(c, &structure, witness),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { YES });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failed(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
