//! The annotated session pi-calculus: terms, parsing, erasure and name
//! handling.
//!
//! Concrete grammar (prefix binds tighter than `|`; `*` applies to the
//! following prefix-closed term):
//!
//! ```text
//! P ::= "0" | CH "!" "(" VALUE ")" "." P | CH "?" "(" VAR ":" T ")" "." P
//!     | CH ">>" "{" LABEL ":" P ("," LABEL ":" P)* "}" | CH "<<" LABEL "." P
//!     | P "|" P | "*" P | "new" "(" VAR "," VAR ":" T ")" P | "(" P ")"
//! VALUE ::= VAR | "true" | "false"
//! ```
//!
//! `new(x,y:T)` declares covariables: the two endpoints of one channel,
//! where `x` follows `T` and `y` its dual. Bound names are freshened at
//! parse time so that every binder in a term is distinct from every other
//! binder and from every free name.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::coalgebra::BasicOrder;
use crate::types::{lex, Spanned, Tok, TypeError, TypeExpr, TypeParser};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Var(String),
    Bool(bool),
}

impl Value {
    /// The name this value goes by when substituted into name position.
    /// Boolean constants act as the predeclared names `true` and `false`.
    pub fn name(&self) -> &str {
        match self {
            Value::Var(n) => n,
            Value::Bool(true) => "true",
            Value::Bool(false) => "false",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Restriction annotation: the session type of one endpoint. `on_second`
/// tells which of the two bound names it describes; the other endpoint
/// follows the dual. Fresh parses always annotate the first name, but
/// normalization may reorder the pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResAnn {
    pub ty: TypeExpr,
    pub on_second: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Process {
    Inact,
    Output { chan: String, value: Value, cont: Box<Process> },
    Input { chan: String, bind: String, ann: Option<TypeExpr>, cont: Box<Process> },
    Branch { chan: String, arms: BTreeMap<String, Process> },
    Select { chan: String, label: String, cont: Box<Process> },
    Par(Box<Process>, Box<Process>),
    Repl(Box<Process>),
    Res { x: String, y: String, ann: Option<ResAnn>, body: Box<Process> },
}

impl Process {
    pub fn par(l: Process, r: Process) -> Process {
        Process::Par(Box::new(l), Box::new(r))
    }

    pub fn output(chan: &str, value: Value, cont: Process) -> Process {
        Process::Output { chan: chan.to_owned(), value, cont: Box::new(cont) }
    }

    pub fn input(chan: &str, bind: &str, ann: Option<TypeExpr>, cont: Process) -> Process {
        Process::Input {
            chan: chan.to_owned(),
            bind: bind.to_owned(),
            ann,
            cont: Box::new(cont),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct ProcParser<'a> {
    inner: TypeParser<'a>,
}

impl<'a> ProcParser<'a> {
    fn new(toks: &'a [Spanned], order: &'a BasicOrder) -> Self {
        ProcParser { inner: TypeParser::new(toks, order) }
    }

    fn name(&mut self, what: &str) -> Result<String, TypeError> {
        let n = self.inner.ident(what)?;
        if n == "true" || n == "false" {
            return Err(self.inner.err(format!("`{n}` is a constant, expected {what}")));
        }
        Ok(n)
    }

    fn value(&mut self) -> Result<Value, TypeError> {
        let n = self.inner.ident("a value")?;
        Ok(match n.as_str() {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => Value::Var(n),
        })
    }

    fn parallel(&mut self) -> Result<Process, TypeError> {
        let mut parts = vec![self.prefix()?];
        while self.inner.eat(&Tok::Pipe) {
            parts.push(self.prefix()?);
        }
        let mut it = parts.into_iter().rev();
        let last = it.next().expect("at least one component");
        Ok(it.fold(last, |acc, p| Process::par(p, acc)))
    }

    fn prefix(&mut self) -> Result<Process, TypeError> {
        match self.inner.peek().cloned() {
            Some(Tok::Zero) => {
                self.inner.expect(Tok::Zero)?;
                Ok(Process::Inact)
            }
            Some(Tok::Star) => {
                self.inner.expect(Tok::Star)?;
                Ok(Process::Repl(Box::new(self.prefix()?)))
            }
            Some(Tok::LParen) => {
                self.inner.expect(Tok::LParen)?;
                let p = self.parallel()?;
                self.inner.expect(Tok::RParen)?;
                Ok(p)
            }
            Some(Tok::Ident(kw)) if kw == "new" => {
                self.inner.expect(Tok::Ident("new".into()))?;
                self.inner.expect(Tok::LParen)?;
                let x = self.name("an endpoint name")?;
                self.inner.expect(Tok::Comma)?;
                let y = self.name("an endpoint name")?;
                self.inner.expect(Tok::Colon)?;
                let ty = self.inner.ty()?;
                self.inner.expect(Tok::RParen)?;
                let body = self.prefix()?;
                Ok(Process::Res {
                    x,
                    y,
                    ann: Some(ResAnn { ty, on_second: false }),
                    body: Box::new(body),
                })
            }
            Some(Tok::Ident(_)) => {
                let chan = self.name("a channel name")?;
                match self.inner.peek().cloned() {
                    Some(Tok::Bang) => {
                        self.inner.expect(Tok::Bang)?;
                        self.inner.expect(Tok::LParen)?;
                        let value = self.value()?;
                        self.inner.expect(Tok::RParen)?;
                        self.inner.expect(Tok::Dot)?;
                        let cont = self.prefix()?;
                        Ok(Process::Output { chan, value, cont: Box::new(cont) })
                    }
                    Some(Tok::Question) => {
                        self.inner.expect(Tok::Question)?;
                        self.inner.expect(Tok::LParen)?;
                        let bind = self.name("a variable to bind")?;
                        self.inner.expect(Tok::Colon)?;
                        let ty = self.inner.ty()?;
                        self.inner.expect(Tok::RParen)?;
                        self.inner.expect(Tok::Dot)?;
                        let cont = self.prefix()?;
                        Ok(Process::Input { chan, bind, ann: Some(ty), cont: Box::new(cont) })
                    }
                    Some(Tok::Offer) => {
                        self.inner.expect(Tok::Offer)?;
                        self.inner.expect(Tok::LBrace)?;
                        let mut arms = BTreeMap::new();
                        loop {
                            let label = self.name("a branch label")?;
                            self.inner.expect(Tok::Colon)?;
                            let p = self.parallel()?;
                            if arms.insert(label.clone(), p).is_some() {
                                return Err(TypeError::DuplicateLabel(label));
                            }
                            if !self.inner.eat(&Tok::Comma) {
                                break;
                            }
                        }
                        self.inner.expect(Tok::RBrace)?;
                        Ok(Process::Branch { chan, arms })
                    }
                    Some(Tok::Choose) => {
                        self.inner.expect(Tok::Choose)?;
                        let label = self.name("a label to select")?;
                        self.inner.expect(Tok::Dot)?;
                        let cont = self.prefix()?;
                        Ok(Process::Select { chan, label, cont: Box::new(cont) })
                    }
                    _ => Err(self
                        .inner
                        .err("expected `!`, `?`, `>>` or `<<` after a channel name")),
                }
            }
            _ => Err(self.inner.err("expected a process")),
        }
    }
}

/// Parse an annotated process. Bound names are freshened so that binders
/// are pairwise distinct and distinct from all free names.
pub fn parse_process(text: &str, order: &BasicOrder) -> Result<Process, TypeError> {
    let toks = lex(text)?;
    let mut parser = ProcParser::new(&toks, order);
    let p = parser.parallel()?;
    if parser.inner.peek().is_some() {
        return Err(parser.inner.err("trailing input after process"));
    }
    Ok(freshen_bound(&p))
}

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

fn free_names_into(p: &Process, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    let note = |name: &str, bound: &Vec<String>, out: &mut BTreeSet<String>| {
        if !bound.iter().any(|b| b == name) {
            out.insert(name.to_owned());
        }
    };
    match p {
        Process::Inact => {}
        Process::Output { chan, value, cont } => {
            note(chan, bound, out);
            if let Value::Var(v) = value {
                note(v, bound, out);
            }
            free_names_into(cont, bound, out);
        }
        Process::Input { chan, bind, cont, .. } => {
            note(chan, bound, out);
            bound.push(bind.clone());
            free_names_into(cont, bound, out);
            bound.pop();
        }
        Process::Branch { chan, arms } => {
            note(chan, bound, out);
            for arm in arms.values() {
                free_names_into(arm, bound, out);
            }
        }
        Process::Select { chan, cont, .. } => {
            note(chan, bound, out);
            free_names_into(cont, bound, out);
        }
        Process::Par(l, r) => {
            free_names_into(l, bound, out);
            free_names_into(r, bound, out);
        }
        Process::Repl(b) => free_names_into(b, bound, out),
        Process::Res { x, y, body, .. } => {
            bound.push(x.clone());
            bound.push(y.clone());
            free_names_into(body, bound, out);
            bound.pop();
            bound.pop();
        }
    }
}

/// Free variable and channel names. Boolean constants do not count.
pub fn free_names(p: &Process) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    free_names_into(p, &mut Vec::new(), &mut out);
    out
}

fn fresh_variant(base: &str, used: &BTreeSet<String>) -> String {
    let mut i = 1usize;
    loop {
        let candidate = format!("{base}_{i}");
        if !used.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

/// Rename binders so they are pairwise distinct and avoid all free names
/// (and everything in `extra_avoid`).
pub fn freshen_bound_avoiding(p: &Process, extra_avoid: &BTreeSet<String>) -> Process {
    let mut used: BTreeSet<String> = free_names(p);
    used.extend(extra_avoid.iter().cloned());
    used.insert("true".to_owned());
    used.insert("false".to_owned());
    freshen_walk(p, &mut used, &BTreeMap::new())
}

fn freshen_bound(p: &Process) -> Process {
    freshen_bound_avoiding(p, &BTreeSet::new())
}

fn freshen_walk(
    p: &Process,
    used: &mut BTreeSet<String>,
    env: &BTreeMap<String, String>,
) -> Process {
    let rename = |n: &String, env: &BTreeMap<String, String>| {
        env.get(n).cloned().unwrap_or_else(|| n.clone())
    };
    let bindfresh = |n: &String, used: &mut BTreeSet<String>| {
        let chosen = if used.contains(n) { fresh_variant(n, used) } else { n.clone() };
        used.insert(chosen.clone());
        chosen
    };
    match p {
        Process::Inact => Process::Inact,
        Process::Output { chan, value, cont } => Process::Output {
            chan: rename(chan, env),
            value: match value {
                Value::Var(v) => Value::Var(rename(v, env)),
                b => b.clone(),
            },
            cont: Box::new(freshen_walk(cont, used, env)),
        },
        Process::Input { chan, bind, ann, cont } => {
            let fresh = bindfresh(bind, used);
            let mut env2 = env.clone();
            env2.insert(bind.clone(), fresh.clone());
            Process::Input {
                chan: rename(chan, env),
                bind: fresh,
                ann: ann.clone(),
                cont: Box::new(freshen_walk(cont, used, &env2)),
            }
        }
        Process::Branch { chan, arms } => Process::Branch {
            chan: rename(chan, env),
            arms: arms
                .iter()
                .map(|(l, arm)| (l.clone(), freshen_walk(arm, used, env)))
                .collect(),
        },
        Process::Select { chan, label, cont } => Process::Select {
            chan: rename(chan, env),
            label: label.clone(),
            cont: Box::new(freshen_walk(cont, used, env)),
        },
        Process::Par(l, r) => {
            Process::par(freshen_walk(l, used, env), freshen_walk(r, used, env))
        }
        Process::Repl(b) => Process::Repl(Box::new(freshen_walk(b, used, env))),
        Process::Res { x, y, ann, body } => {
            let fx = bindfresh(x, used);
            let fy = bindfresh(y, used);
            let mut env2 = env.clone();
            env2.insert(x.clone(), fx.clone());
            env2.insert(y.clone(), fy.clone());
            Process::Res {
                x: fx,
                y: fy,
                ann: ann.clone(),
                body: Box::new(freshen_walk(body, used, &env2)),
            }
        }
    }
}

/// Substitute `value` for the free name `from` in both value and channel
/// positions. Capture-avoiding: binders that would capture the incoming
/// name are renamed first.
pub fn subst_name(p: &Process, from: &str, value: &Value) -> Process {
    let vname = value.name().to_owned();
    match p {
        Process::Inact => Process::Inact,
        Process::Output { chan, value: v, cont } => Process::Output {
            chan: subst_chan(chan, from, &vname),
            value: if v == &Value::Var(from.to_owned()) { value.clone() } else { v.clone() },
            cont: Box::new(subst_name(cont, from, value)),
        },
        Process::Input { chan, bind, ann, cont } => {
            if bind == from {
                // shadowed; nothing to substitute below
                return p.clone();
            }
            let (bind, cont) = unshadow(bind, cont, &vname, from);
            Process::Input {
                chan: subst_chan(chan, from, &vname),
                bind,
                ann: ann.clone(),
                cont: Box::new(subst_name(&cont, from, value)),
            }
        }
        Process::Branch { chan, arms } => Process::Branch {
            chan: subst_chan(chan, from, &vname),
            arms: arms
                .iter()
                .map(|(l, arm)| (l.clone(), subst_name(arm, from, value)))
                .collect(),
        },
        Process::Select { chan, label, cont } => Process::Select {
            chan: subst_chan(chan, from, &vname),
            label: label.clone(),
            cont: Box::new(subst_name(cont, from, value)),
        },
        Process::Par(l, r) => {
            Process::par(subst_name(l, from, value), subst_name(r, from, value))
        }
        Process::Repl(b) => Process::Repl(Box::new(subst_name(b, from, value))),
        Process::Res { x, y, ann, body } => {
            if x == from || y == from {
                return p.clone();
            }
            let mut body = (**body).clone();
            let mut x = x.clone();
            let mut y = y.clone();
            for n in [&mut x, &mut y] {
                if *n == vname {
                    let mut used = free_names(&body);
                    used.insert(vname.clone());
                    used.insert(from.to_owned());
                    let fresh = fresh_variant(n, &used);
                    body = subst_name(&body, n, &Value::Var(fresh.clone()));
                    *n = fresh;
                }
            }
            Process::Res { x, y, ann: ann.clone(), body: Box::new(subst_name(&body, from, value)) }
        }
    }
}

fn subst_chan(chan: &str, from: &str, to: &str) -> String {
    if chan == from {
        to.to_owned()
    } else {
        chan.to_owned()
    }
}

fn unshadow(bind: &str, cont: &Process, vname: &str, from: &str) -> (String, Process) {
    if bind == vname {
        let mut used = free_names(cont);
        used.insert(vname.to_owned());
        used.insert(from.to_owned());
        let fresh = fresh_variant(bind, &used);
        let renamed = subst_name(cont, bind, &Value::Var(fresh.clone()));
        (fresh, renamed)
    } else {
        (bind.to_owned(), cont.clone())
    }
}

// ---------------------------------------------------------------------------
// Alpha equivalence
// ---------------------------------------------------------------------------

fn names_match(a: &str, b: &str, env: &Vec<(String, String)>) -> bool {
    // innermost binder correspondence wins; free names match literally
    for (ba, bb) in env.iter().rev() {
        let hit_a = ba == a;
        let hit_b = bb == b;
        if hit_a || hit_b {
            return hit_a && hit_b;
        }
    }
    a == b
}

fn alpha_eq_in(a: &Process, b: &Process, env: &mut Vec<(String, String)>) -> bool {
    match (a, b) {
        (Process::Inact, Process::Inact) => true,
        (
            Process::Output { chan: ca, value: va, cont: pa },
            Process::Output { chan: cb, value: vb, cont: pb },
        ) => {
            let values = match (va, vb) {
                (Value::Var(na), Value::Var(nb)) => names_match(na, nb, env),
                _ => va == vb,
            };
            names_match(ca, cb, env) && values && alpha_eq_in(pa, pb, env)
        }
        (
            Process::Input { chan: ca, bind: ba, ann: ta, cont: pa },
            Process::Input { chan: cb, bind: bb, ann: tb, cont: pb },
        ) => {
            if !names_match(ca, cb, env) || ta != tb {
                return false;
            }
            env.push((ba.clone(), bb.clone()));
            let ok = alpha_eq_in(pa, pb, env);
            env.pop();
            ok
        }
        (Process::Branch { chan: ca, arms: aa }, Process::Branch { chan: cb, arms: ab }) => {
            names_match(ca, cb, env)
                && aa.len() == ab.len()
                && aa.iter().zip(ab.iter()).all(|((la, pa), (lb, pb))| {
                    la == lb && alpha_eq_in(pa, pb, env)
                })
        }
        (
            Process::Select { chan: ca, label: la, cont: pa },
            Process::Select { chan: cb, label: lb, cont: pb },
        ) => names_match(ca, cb, env) && la == lb && alpha_eq_in(pa, pb, env),
        (Process::Par(la, ra), Process::Par(lb, rb)) => {
            alpha_eq_in(la, lb, env) && alpha_eq_in(ra, rb, env)
        }
        (Process::Repl(pa), Process::Repl(pb)) => alpha_eq_in(pa, pb, env),
        (
            Process::Res { x: xa, y: ya, ann: ta, body: pa },
            Process::Res { x: xb, y: yb, ann: tb, body: pb },
        ) => {
            if ta != tb {
                return false;
            }
            env.push((xa.clone(), xb.clone()));
            env.push((ya.clone(), yb.clone()));
            let ok = alpha_eq_in(pa, pb, env);
            env.pop();
            env.pop();
            ok
        }
        _ => false,
    }
}

/// Structural equality up to consistent renaming of bound names.
pub fn alpha_eq(a: &Process, b: &Process) -> bool {
    alpha_eq_in(a, b, &mut Vec::new())
}

// ---------------------------------------------------------------------------
// Erasure
// ---------------------------------------------------------------------------

/// Drop the type annotations on inputs and restrictions; a homomorphism on
/// everything else.
pub fn erase(p: &Process) -> Process {
    match p {
        Process::Inact => Process::Inact,
        Process::Output { chan, value, cont } => Process::Output {
            chan: chan.clone(),
            value: value.clone(),
            cont: Box::new(erase(cont)),
        },
        Process::Input { chan, bind, cont, .. } => Process::Input {
            chan: chan.clone(),
            bind: bind.clone(),
            ann: None,
            cont: Box::new(erase(cont)),
        },
        Process::Branch { chan, arms } => Process::Branch {
            chan: chan.clone(),
            arms: arms.iter().map(|(l, arm)| (l.clone(), erase(arm))).collect(),
        },
        Process::Select { chan, label, cont } => Process::Select {
            chan: chan.clone(),
            label: label.clone(),
            cont: Box::new(erase(cont)),
        },
        Process::Par(l, r) => Process::par(erase(l), erase(r)),
        Process::Repl(b) => Process::Repl(Box::new(erase(b))),
        Process::Res { x, y, body, .. } => Process::Res {
            x: x.clone(),
            y: y.clone(),
            ann: None,
            body: Box::new(erase(body)),
        },
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

fn needs_parens_as_prefix(p: &Process) -> bool {
    matches!(p, Process::Par(_, _))
}

fn print_prefix(p: &Process, out: &mut String) {
    if needs_parens_as_prefix(p) {
        out.push('(');
        print_par(p, out);
        out.push(')');
    } else {
        print_par(p, out);
    }
}

fn print_par(p: &Process, out: &mut String) {
    match p {
        Process::Inact => out.push('0'),
        Process::Output { chan, value, cont } => {
            out.push_str(chan);
            out.push_str("!(");
            out.push_str(value.name());
            out.push_str(").");
            print_prefix(cont, out);
        }
        Process::Input { chan, bind, ann, cont } => {
            out.push_str(chan);
            out.push_str("?(");
            out.push_str(bind);
            if let Some(t) = ann {
                out.push(':');
                out.push_str(&crate::types::pretty_type(t));
            }
            out.push_str(").");
            print_prefix(cont, out);
        }
        Process::Branch { chan, arms } => {
            out.push_str(chan);
            out.push_str(">>{");
            for (i, (label, arm)) in arms.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(label);
                out.push_str(": ");
                print_par(arm, out);
            }
            out.push('}');
        }
        Process::Select { chan, label, cont } => {
            out.push_str(chan);
            out.push_str("<<");
            out.push_str(label);
            out.push('.');
            print_prefix(cont, out);
        }
        Process::Par(l, r) => {
            print_component(l, out);
            out.push_str(" | ");
            print_component(r, out);
        }
        Process::Repl(b) => {
            out.push('*');
            print_prefix(b, out);
        }
        Process::Res { x, y, ann, body } => {
            out.push_str("new(");
            match ann {
                Some(ResAnn { ty, on_second: false }) => {
                    out.push_str(x);
                    out.push(',');
                    out.push_str(y);
                    out.push(':');
                    out.push_str(&crate::types::pretty_type(ty));
                }
                Some(ResAnn { ty, on_second: true }) => {
                    // print the typed endpoint first; same binder, same term
                    out.push_str(y);
                    out.push(',');
                    out.push_str(x);
                    out.push(':');
                    out.push_str(&crate::types::pretty_type(ty));
                }
                None => {
                    out.push_str(x);
                    out.push(',');
                    out.push_str(y);
                }
            }
            out.push_str(") ");
            print_prefix(body, out);
        }
    }
}

fn print_component(p: &Process, out: &mut String) {
    // parallel is associative; nested pars print flat
    if let Process::Par(_, _) = p {
        print_par(p, out);
    } else {
        print_prefix(p, out);
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        print_par(self, &mut out);
        f.write_str(&out)
    }
}
