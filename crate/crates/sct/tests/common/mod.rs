//! Shared test material: the enumerated process corpus, a seeded random
//! coalgebra generator, and generators for subsumption triples.
//!
//! Each integration test target compiles this module separately and uses
//! a different slice of it.
#![allow(dead_code)]

use rand::Rng;
use sct::coalgebra::{BasicOrder, CoalgebraTable, Polarity, SessionCoalgebra};
use sct::process::{parse_process, Process};
use sct::types::{parse_type, TypeExpr};

pub fn order() -> BasicOrder {
    BasicOrder::standard()
}

pub fn ty(text: &str) -> TypeExpr {
    parse_type(text, &order()).unwrap_or_else(|e| panic!("type `{text}`: {e}"))
}

pub fn proc(text: &str) -> Process {
    parse_process(text, &order()).unwrap_or_else(|e| panic!("process `{text}`: {e}"))
}

// ---------------------------------------------------------------------------
// Random coalgebras
// ---------------------------------------------------------------------------

/// A valid pseudo-random coalgebra with at most 8 states over the default
/// basic-type universe.
pub fn random_coalgebra(rng: &mut impl Rng) -> SessionCoalgebra {
    let n: usize = rng.gen_range(1..=8);
    let mut table = CoalgebraTable::new(order());
    let basics = ["int", "real", "bool"];
    let labels = ["go", "halt", "more"];
    for i in 0..n {
        let id = format!("s{i}");
        let pol = if rng.gen_bool(0.5) { Polarity::In } else { Polarity::Out };
        let pick = |rng: &mut dyn rand::RngCore| format!("s{}", rng.gen_range(0..n));
        match rng.gen_range(0..10) {
            0..=2 => {
                let data = pick(rng);
                let cont = pick(rng);
                table.com(&id, pol, &data, &cont);
            }
            3..=5 => {
                let mut arms: Vec<(String, String)> = Vec::new();
                for l in labels {
                    if rng.gen_bool(0.5) {
                        arms.push((l.to_owned(), pick(rng)));
                    }
                }
                if arms.is_empty() {
                    arms.push(("go".to_owned(), pick(rng)));
                }
                table.branch(
                    &id,
                    pol,
                    arms.iter().map(|(l, t)| (l.as_str(), t.as_str())),
                );
            }
            6 => {
                table.end(&id);
            }
            7 => {
                table.basic(&id, basics[rng.gen_range(0..basics.len())]);
            }
            _ => {
                let cont = pick(rng);
                table.par(&id, &cont);
            }
        }
    }
    table.validate().expect("generator only produces valid tables")
}

// ---------------------------------------------------------------------------
// The typing corpus
// ---------------------------------------------------------------------------

pub struct CorpusItem {
    pub context: Vec<(String, String)>,
    pub process: String,
}

const CTX_TYPES: [&str; 5] = ["end", "?int", "!int", "un?int", "bool"];

fn sequences() -> Vec<String> {
    // every action string over {input, output} up to length 3
    let mut out = Vec::new();
    for len in 0..=3usize {
        for mask in 0..(1u32 << len) {
            let mut text = String::new();
            let mut binders = 0;
            for i in 0..len {
                if mask & (1 << i) == 0 {
                    binders += 1;
                    text.push_str(&format!("x?(z{binders}:int)."));
                } else {
                    text.push_str("x!(v).");
                }
            }
            text.push('0');
            out.push(text);
        }
    }
    out
}

fn with_bad_annotation(seq: &str) -> Option<String> {
    // turn the first input annotation into bool
    seq.find(":int)").map(|at| {
        let mut s = seq.to_owned();
        s.replace_range(at..at + 5, ":bool)");
        s
    })
}

/// All corpus processes: sequential chains, replications, parallel
/// compositions of up to three components, and up to two restrictions.
pub fn corpus_processes() -> Vec<String> {
    let mut out = Vec::new();
    let seqs = sequences();
    out.extend(seqs.iter().cloned());
    out.extend(seqs.iter().filter_map(|s| with_bad_annotation(s)));
    out.extend(seqs.iter().map(|s| format!("*{s}")));
    // forwarding a received value
    out.push("x?(z1:int).x!(z1).0".to_owned());
    out.push("x?(z1:int).x?(z2:int).x!(z1).0".to_owned());
    out.push("x!(v).x?(z1:int).x!(z1).0".to_owned());

    let components = [
        "0",
        "x?(z:int).0",
        "x!(v).0",
        "*x?(z:int).0",
        "x?(z:int).x!(z).0",
        "x!(true).0",
    ];
    for a in components {
        for b in components {
            out.push(format!("{a} | {b}"));
        }
    }
    for (i, a) in components.iter().enumerate() {
        for (j, b) in components.iter().enumerate().skip(i) {
            for c in components.iter().skip(j) {
                out.push(format!("{a} | {b} | {c}"));
            }
        }
    }

    let res_types = ["?int", "!int", "un?int", "un!int"];
    let left = ["a?(z:int).0", "a!(v).0", "0", "a?(z:int).a?(w:int).0"];
    let right = ["b?(z:int).0", "b!(v).0", "0", "*b?(z:int).0"];
    for t in res_types {
        for a in left {
            for b in right {
                out.push(format!("new(a,b:{t}) ({a} | {b})"));
            }
        }
        for s in ["a?(z:int).0", "a!(v).0", "b!(v).0", "0"] {
            out.push(format!("new(a,b:{t}) {s}"));
        }
    }

    out.push(
        "new(a,b:?int) (a?(z:int).0 | new(c,d:!int) (c!(v).0 | d?(w:int).0) | b!(v).0)".to_owned(),
    );
    out.push(
        "new(a,b:!int) (new(c,d:!int) (c!(v).0 | d?(w:int).0 | a!(v).0) | b?(z:int).0)".to_owned(),
    );
    out.push(
        "new(a,b:un?int) (a?(z:int).0 | a?(w:int).0 | new(c,d:?int) (c?(u:int).0 | d!(v).0))"
            .to_owned(),
    );
    out.push("new(a,b:?int) new(c,d:?int) (a?(z:int).0 | b!(v).0 | c?(w:int).0)".to_owned());
    out
}

pub fn corpus_contexts() -> Vec<Vec<(String, String)>> {
    let mut out = vec![Vec::new(), vec![("v".to_owned(), "int".to_owned())]];
    for t in CTX_TYPES {
        out.push(vec![("x".to_owned(), t.to_owned())]);
        out.push(vec![("x".to_owned(), t.to_owned()), ("v".to_owned(), "int".to_owned())]);
    }
    out
}

pub fn corpus() -> Vec<CorpusItem> {
    let mut out = Vec::new();
    for context in corpus_contexts() {
        for process in corpus_processes() {
            out.push(CorpusItem { context: context.clone(), process: process.clone() });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Subsumption triples
// ---------------------------------------------------------------------------

/// A pair of type texts (supertype, subtype) with `sub ⊑ sup`, plus a
/// driver process that completes a channel of the supertype.
pub struct SubsumptionTriple {
    pub sup: String,
    pub sub: String,
    pub process: String,
}

struct DriverState {
    binders: usize,
    ints: usize,
    reals: usize,
    bools: usize,
}

/// Ambient payload variables available to drivers.
pub fn driver_context() -> Vec<(String, String)> {
    let mut ctx = Vec::new();
    for i in 1..=3 {
        ctx.push((format!("vi{i}"), "int".to_owned()));
        ctx.push((format!("vr{i}"), "real".to_owned()));
        ctx.push((format!("vb{i}"), "bool".to_owned()));
    }
    ctx
}

/// A process that exactly follows the supertype on channel `x`.
fn drive(sup: &Pair, used: &mut DriverState) -> String {
    match sup {
        Pair::End | Pair::Basic(_, _) => "0".to_owned(),
        Pair::Recv(payload, cont) => {
            let annot = payload.sup_basic();
            used.binders += 1;
            let binder = format!("z{}", used.binders);
            format!("x?({binder}:{annot}).{}", drive(cont, used))
        }
        Pair::Send(payload, cont) => {
            // a payload variable of the supertype's expected basic type
            // works for the subtype too (output payloads are contravariant,
            // so the supertype expects the narrower one)
            let var = match payload.sub_basic() {
                "int" => {
                    used.ints += 1;
                    format!("vi{}", used.ints)
                }
                "real" => {
                    used.reals += 1;
                    format!("vr{}", used.reals)
                }
                _ => {
                    used.bools += 1;
                    format!("vb{}", used.bools)
                }
            };
            format!("x!({var}).{}", drive(cont, used))
        }
        Pair::ExtChoice(arm, wide) => {
            // offer everything the supertype's label set mentions
            let mut arms = vec![format!("go: {}", drive(arm, used))];
            if *wide {
                arms.push("halt: 0".to_owned());
            }
            format!("x>>{{{}}}", arms.join(", "))
        }
        Pair::IntChoice(arm, _) => format!("x<<go.{}", drive(arm, used)),
        Pair::UnRecvLoop(d) => format!("*x?(z:{d}).0"),
        Pair::UnSendLoop(_) => "0".to_owned(),
    }
}

/// Structured (supertype, subtype) pairs, kept abstract so both the type
/// texts and the driver can be generated from one description.
#[derive(Clone)]
enum Pair {
    End,
    /// (sup basic, sub basic) with sub <= sup in the preorder
    Basic(&'static str, &'static str),
    Recv(Box<Pair>, Box<Pair>),
    Send(Box<Pair>, Box<Pair>),
    /// sup offers {go} or {go, halt}; sub offers {go}: flag = sup wide
    ExtChoice(Box<Pair>, bool),
    /// sup offers {go}; sub may add {halt}: flag = sub wide
    IntChoice(Box<Pair>, bool),
    UnRecvLoop(&'static str),
    UnSendLoop(&'static str),
}

impl Pair {
    fn sup_basic(&self) -> &'static str {
        match self {
            Pair::Basic(sup, _) => sup,
            _ => "int",
        }
    }

    fn sub_basic(&self) -> &'static str {
        match self {
            Pair::Basic(_, sub) => sub,
            _ => "int",
        }
    }

    /// whether the driver for this pair consumes payload variables; branch
    /// arms must leave identical contexts, so a wide external choice can
    /// only wrap consumption-free continuations
    fn driver_consumes(&self) -> bool {
        match self {
            Pair::Send(_, _) => true,
            Pair::Recv(_, c) | Pair::ExtChoice(c, _) | Pair::IntChoice(c, _) => {
                c.driver_consumes()
            }
            _ => false,
        }
    }

    fn sup_text(&self) -> String {
        match self {
            Pair::End => "end".to_owned(),
            Pair::Basic(sup, _) => (*sup).to_owned(),
            Pair::Recv(p, c) => format!("?{}.{}", p.sup_text(), c.sup_text()),
            // contravariant: the supertype expects the *narrower* payload
            Pair::Send(p, c) => format!("!{}.{}", p.sub_text(), c.sup_text()),
            Pair::ExtChoice(arm, true) => format!("&{{go: {}, halt: end}}", arm.sup_text()),
            Pair::ExtChoice(arm, false) => format!("&{{go: {}}}", arm.sup_text()),
            Pair::IntChoice(arm, _) => format!("+{{go: {}}}", arm.sup_text()),
            Pair::UnRecvLoop(d) => format!("rec X.un?{d}.X"),
            Pair::UnSendLoop(d) => format!("rec X.un!{d}.X"),
        }
    }

    fn sub_text(&self) -> String {
        match self {
            Pair::End => "end".to_owned(),
            Pair::Basic(_, sub) => (*sub).to_owned(),
            Pair::Recv(p, c) => format!("?{}.{}", p.sub_text(), c.sub_text()),
            Pair::Send(p, c) => format!("!{}.{}", p.sup_text(), c.sub_text()),
            Pair::ExtChoice(arm, _) => format!("&{{go: {}}}", arm.sub_text()),
            Pair::IntChoice(arm, true) => format!("+{{go: {}, halt: end}}", arm.sub_text()),
            Pair::IntChoice(arm, false) => format!("+{{go: {}}}", arm.sub_text()),
            Pair::UnRecvLoop(_) => "rec X.un?int.X".to_owned(),
            Pair::UnSendLoop(d) => format!("rec X.un!{d}.X"),
        }
    }
}

pub fn subsumption_triples(count: usize) -> Vec<SubsumptionTriple> {
    fn basics() -> Vec<Pair> {
        vec![
            Pair::Basic("real", "int"),
            Pair::Basic("int", "int"),
            Pair::Basic("real", "real"),
            Pair::Basic("bool", "bool"),
        ]
    }
    fn level(conts: &[Pair]) -> Vec<Pair> {
        let mut out = Vec::new();
        for c in conts {
            for p in basics() {
                out.push(Pair::Recv(Box::new(p), Box::new(c.clone())));
            }
            for p in basics() {
                out.push(Pair::Send(Box::new(p), Box::new(c.clone())));
            }
            out.push(Pair::ExtChoice(Box::new(c.clone()), false));
            if !c.driver_consumes() {
                out.push(Pair::ExtChoice(Box::new(c.clone()), true));
            }
            for wide in [false, true] {
                out.push(Pair::IntChoice(Box::new(c.clone()), wide));
            }
        }
        out
    }

    let mut pool: Vec<Pair> = vec![Pair::End];
    pool.extend([Pair::UnRecvLoop("real"), Pair::UnSendLoop("int"), Pair::UnSendLoop("bool")]);
    let one = level(&[Pair::End]);
    let two = level(&one);
    let three = level(&two[..two.len().min(12)]);
    pool.extend(one);
    pool.extend(two);
    pool.extend(three);

    let mut out = Vec::new();
    for pair in pool {
        if out.len() >= count {
            break;
        }
        let mut used = DriverState { binders: 0, ints: 0, reals: 0, bools: 0 };
        out.push(SubsumptionTriple {
            sup: pair.sup_text(),
            sub: pair.sub_text(),
            process: drive(&pair, &mut used),
        });
    }
    out
}
