//! Session type expressions: parsing, well-formedness, unfolding and
//! compilation into coalgebra states.
//!
//! Concrete grammar (whitespace insignificant, identifiers
//! `[A-Za-z][A-Za-z0-9_]*`, keywords `end`, `rec`, `lin`, `un`):
//!
//! ```text
//! T ::= "end" | BASIC | VAR | "rec" VAR "." T
//!     | QUAL? "?" T "." T | QUAL? "!" T "." T
//!     | QUAL? "&" "{" ARM ("," ARM)* "}" | QUAL? "+" "{" ARM ("," ARM)* "}"
//! ARM ::= LABEL ":" T      QUAL ::= "un" | "lin"
//! ```
//!
//! An omitted qualifier means `lin`; a trailing `.end` may be omitted after
//! `?`/`!` payloads. Type variables are kept as de Bruijn indices
//! internally, so alpha-equivalent types are structurally equal.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::coalgebra::{
    BasicOrder, CoalgebraError, CoalgebraTable, ContKey, Polarity, SessionCoalgebra, StateId,
    StateLabel, TransitionKey, TransitionMap,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Qualifier {
    Lin,
    Un,
}

/// A communication action. Receive and send carry their payload type and
/// continuation; choices carry one continuation per label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pretype {
    Receive(Box<TypeExpr>, Box<TypeExpr>),
    Send(Box<TypeExpr>, Box<TypeExpr>),
    ExtChoice(BTreeMap<String, TypeExpr>),
    IntChoice(BTreeMap<String, TypeExpr>),
}

/// A session type over some universe of basic data types.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeExpr {
    Basic(String),
    End,
    /// de Bruijn index of the enclosing `rec` binder
    Var(usize),
    Mu(Box<TypeExpr>),
    Prefixed(Qualifier, Pretype),
}

impl TypeExpr {
    pub fn receive(payload: TypeExpr, cont: TypeExpr) -> TypeExpr {
        TypeExpr::Prefixed(Qualifier::Lin, Pretype::Receive(Box::new(payload), Box::new(cont)))
    }

    pub fn send(payload: TypeExpr, cont: TypeExpr) -> TypeExpr {
        TypeExpr::Prefixed(Qualifier::Lin, Pretype::Send(Box::new(payload), Box::new(cont)))
    }

    pub fn basic(d: &str) -> TypeExpr {
        TypeExpr::Basic(d.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeError {
    Syntax { line: usize, col: usize, msg: String },
    UnknownBasic { name: String, at: Option<(usize, usize)> },
    DuplicateLabel(String),
    FreeVariable,
    NotContractive,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeError::Syntax { line, col, msg } => {
                write!(f, "syntax error at line {line}, column {col}: {msg}")
            }
            TypeError::UnknownBasic { name, at: Some((line, col)) } => {
                write!(f, "unknown basic type `{name}` at line {line}, column {col}")
            }
            TypeError::UnknownBasic { name, at: None } => {
                write!(f, "unknown basic type `{name}`")
            }
            TypeError::DuplicateLabel(l) => write!(f, "duplicate branch label `{l}`"),
            TypeError::FreeVariable => f.write_str("type has a free variable"),
            TypeError::NotContractive => f.write_str("type is not contractive"),
        }
    }
}

impl std::error::Error for TypeError {}

// ---------------------------------------------------------------------------
// de Bruijn machinery
// ---------------------------------------------------------------------------

fn map_subterms(t: &TypeExpr, f: &mut impl FnMut(&TypeExpr, bool) -> TypeExpr) -> TypeExpr {
    match t {
        TypeExpr::Basic(_) | TypeExpr::End | TypeExpr::Var(_) => t.clone(),
        TypeExpr::Mu(b) => TypeExpr::Mu(Box::new(f(b, true))),
        TypeExpr::Prefixed(q, p) => {
            let p = match p {
                Pretype::Receive(a, c) => {
                    Pretype::Receive(Box::new(f(a, false)), Box::new(f(c, false)))
                }
                Pretype::Send(a, c) => Pretype::Send(Box::new(f(a, false)), Box::new(f(c, false))),
                Pretype::ExtChoice(arms) => {
                    Pretype::ExtChoice(arms.iter().map(|(l, t)| (l.clone(), f(t, false))).collect())
                }
                Pretype::IntChoice(arms) => {
                    Pretype::IntChoice(arms.iter().map(|(l, t)| (l.clone(), f(t, false))).collect())
                }
            };
            TypeExpr::Prefixed(*q, p)
        }
    }
}

fn shift(t: &TypeExpr, by: usize, cutoff: usize) -> TypeExpr {
    match t {
        TypeExpr::Var(i) if *i >= cutoff => TypeExpr::Var(i + by),
        _ => map_subterms(t, &mut |sub, under_mu| shift(sub, by, cutoff + usize::from(under_mu))),
    }
}

/// Substitute `arg` for de Bruijn index `depth` in `t`, decrementing the
/// indices above it (one binder disappears).
fn subst(t: &TypeExpr, depth: usize, arg: &TypeExpr) -> TypeExpr {
    match t {
        TypeExpr::Var(i) => {
            if *i == depth {
                shift(arg, depth, 0)
            } else if *i > depth {
                TypeExpr::Var(i - 1)
            } else {
                t.clone()
            }
        }
        _ => map_subterms(t, &mut |sub, under_mu| subst(sub, depth + usize::from(under_mu), arg)),
    }
}

/// Unfold leading recursion: `rec X.T` becomes `T[rec X.T / X]`, repeated
/// until the head is no longer a binder. The identity on all other types.
/// Terminates on validated (contractive) input.
pub fn unfold(t: &TypeExpr) -> TypeExpr {
    let mut cur = t.clone();
    while let TypeExpr::Mu(body) = &cur {
        cur = subst(body, 0, &cur);
    }
    cur
}

fn pretype_children(p: &Pretype) -> Vec<&TypeExpr> {
    match p {
        Pretype::Receive(a, c) | Pretype::Send(a, c) => vec![a, c],
        Pretype::ExtChoice(arms) | Pretype::IntChoice(arms) => arms.values().collect(),
    }
}

fn check_closed(t: &TypeExpr, depth: usize) -> Result<(), TypeError> {
    match t {
        TypeExpr::Var(i) => {
            if *i >= depth {
                Err(TypeError::FreeVariable)
            } else {
                Ok(())
            }
        }
        TypeExpr::Basic(_) | TypeExpr::End => Ok(()),
        TypeExpr::Mu(b) => check_closed(b, depth + 1),
        TypeExpr::Prefixed(_, p) => {
            for sub in pretype_children(p) {
                check_closed(sub, depth)?;
            }
            Ok(())
        }
    }
}

fn check_contractive(t: &TypeExpr) -> Result<(), TypeError> {
    match t {
        TypeExpr::Mu(_) => {
            // descend the chain of consecutive binders; the first non-binder
            // node must not refer back into the chain
            let mut depth = 0usize;
            let mut cur = t;
            while let TypeExpr::Mu(b) = cur {
                depth += 1;
                cur = b;
            }
            if let TypeExpr::Var(i) = cur {
                if *i < depth {
                    return Err(TypeError::NotContractive);
                }
            }
            check_contractive(cur)
        }
        TypeExpr::Basic(_) | TypeExpr::End | TypeExpr::Var(_) => Ok(()),
        TypeExpr::Prefixed(_, p) => {
            for sub in pretype_children(p) {
                check_contractive(sub)?;
            }
            Ok(())
        }
    }
}

/// Check closedness and contractivity, returning the type unchanged.
pub fn validate_type(t: &TypeExpr) -> Result<&TypeExpr, TypeError> {
    check_closed(t, 0)?;
    check_contractive(t)?;
    Ok(t)
}

// ---------------------------------------------------------------------------
// Lexing (shared with the process grammar)
// ---------------------------------------------------------------------------

pub(crate) const KEYWORDS: [&str; 5] = ["end", "rec", "lin", "un", "new"];

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Question,
    Bang,
    Amp,
    Plus,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Dot,
    // process-only tokens
    Zero,
    LParen,
    RParen,
    Pipe,
    Star,
    Offer,  // >>
    Choose, // <<
    At,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Question => "`?`",
            Tok::Bang => "`!`",
            Tok::Amp => "`&`",
            Tok::Plus => "`+`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::Colon => "`:`",
            Tok::Comma => "`,`",
            Tok::Dot => "`.`",
            Tok::Zero => "`0`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Pipe => "`|`",
            Tok::Star => "`*`",
            Tok::Offer => "`>>`",
            Tok::Choose => "`<<`",
            Tok::At => "`@`",
        };
        f.write_str(s)
    }
}

pub(crate) type Spanned = (Tok, usize, usize);

pub(crate) fn lex(text: &str) -> Result<Vec<Spanned>, TypeError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let ch = chars[i];
        let (l, c) = (line, col);
        let step = |ch: char, line: &mut usize, col: &mut usize| {
            if ch == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        if ch.is_whitespace() {
            step(ch, &mut line, &mut col);
            i += 1;
            continue;
        }
        if ch.is_ascii_alphabetic() {
            let mut ident = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                ident.push(chars[i]);
                step(chars[i], &mut line, &mut col);
                i += 1;
            }
            out.push((Tok::Ident(ident), l, c));
            continue;
        }
        let tok = match ch {
            '?' => Tok::Question,
            '!' => Tok::Bang,
            '&' => Tok::Amp,
            '+' => Tok::Plus,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ':' => Tok::Colon,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '0' => Tok::Zero,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '|' => Tok::Pipe,
            '*' => Tok::Star,
            '@' => Tok::At,
            '>' | '<' => {
                if i + 1 < chars.len() && chars[i + 1] == ch {
                    step(ch, &mut line, &mut col);
                    step(ch, &mut line, &mut col);
                    i += 2;
                    out.push((if ch == '>' { Tok::Offer } else { Tok::Choose }, l, c));
                    continue;
                }
                return Err(TypeError::Syntax {
                    line: l,
                    col: c,
                    msg: format!("unexpected character `{ch}` (did you mean `{ch}{ch}`?)"),
                });
            }
            _ => {
                return Err(TypeError::Syntax {
                    line: l,
                    col: c,
                    msg: format!("unexpected character `{ch}`"),
                })
            }
        };
        step(ch, &mut line, &mut col);
        i += 1;
        out.push((tok, l, c));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

pub(crate) struct TypeParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    binders: Vec<String>,
    order: &'a BasicOrder,
}

impl<'a> TypeParser<'a> {
    pub(crate) fn new(toks: &'a [Spanned], order: &'a BasicOrder) -> Self {
        TypeParser { toks, pos: 0, binders: Vec::new(), order }
    }

    pub(crate) fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((1, 1))
    }

    pub(crate) fn err(&self, msg: impl Into<String>) -> TypeError {
        let (line, col) = self.here();
        TypeError::Syntax { line, col, msg: msg.into() }
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.peek().cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<(), TypeError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            let found = self
                .peek()
                .map(|t| t.to_string())
                .unwrap_or_else(|| "end of input".to_owned());
            Err(self.err(format!("expected {tok}, found {found}")))
        }
    }

    pub(crate) fn ident(&mut self, what: &str) -> Result<String, TypeError> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    pub(crate) fn ty(&mut self) -> Result<TypeExpr, TypeError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if s == "end" => {
                self.pos += 1;
                Ok(TypeExpr::End)
            }
            Some(Tok::Ident(s)) if s == "rec" => {
                self.pos += 1;
                let name = self.ident("a type variable after `rec`")?;
                self.expect(Tok::Dot)?;
                self.binders.push(name);
                let body = self.ty()?;
                self.binders.pop();
                Ok(TypeExpr::Mu(Box::new(body)))
            }
            Some(Tok::Ident(s)) if s == "lin" => {
                self.pos += 1;
                self.pretype(Qualifier::Lin)
            }
            Some(Tok::Ident(s)) if s == "un" => {
                self.pos += 1;
                self.pretype(Qualifier::Un)
            }
            Some(Tok::Question) | Some(Tok::Bang) | Some(Tok::Amp) | Some(Tok::Plus) => {
                self.pretype(Qualifier::Lin)
            }
            // parenthesized types are accepted for readability of nested
            // payloads, e.g. !(rec X.?X.X).end; never emitted when printing
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::Ident(s)) if s != "new" => {
                let (line, col) = self.here();
                self.pos += 1;
                if let Some(ix) = self.binders.iter().rev().position(|b| *b == s) {
                    Ok(TypeExpr::Var(ix))
                } else if self.order.contains_type(&s) {
                    Ok(TypeExpr::Basic(s))
                } else {
                    Err(TypeError::UnknownBasic { name: s, at: Some((line, col)) })
                }
            }
            _ => Err(self.err("expected a type")),
        }
    }

    fn pretype(&mut self, q: Qualifier) -> Result<TypeExpr, TypeError> {
        let tok = self.bump().ok_or_else(|| self.err("expected an action after the qualifier"))?;
        let p = match tok {
            Tok::Question | Tok::Bang => {
                let payload = self.ty()?;
                let cont = if self.eat(&Tok::Dot) { self.ty()? } else { TypeExpr::End };
                if tok == Tok::Question {
                    Pretype::Receive(Box::new(payload), Box::new(cont))
                } else {
                    Pretype::Send(Box::new(payload), Box::new(cont))
                }
            }
            Tok::Amp | Tok::Plus => {
                let arms = self.arms()?;
                if tok == Tok::Amp {
                    Pretype::ExtChoice(arms)
                } else {
                    Pretype::IntChoice(arms)
                }
            }
            other => return Err(self.err(format!("expected `?`, `!`, `&` or `+`, found {other}"))),
        };
        Ok(TypeExpr::Prefixed(q, p))
    }

    fn arms(&mut self) -> Result<BTreeMap<String, TypeExpr>, TypeError> {
        self.expect(Tok::LBrace)?;
        let mut arms = BTreeMap::new();
        loop {
            let label = self.ident("a branch label")?;
            self.expect(Tok::Colon)?;
            let t = self.ty()?;
            if arms.insert(label.clone(), t).is_some() {
                return Err(TypeError::DuplicateLabel(label));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(arms)
    }
}

/// Parse a session type. Bare identifiers resolve to bound type variables
/// first, then to basic types of the configured universe.
pub fn parse_type(text: &str, order: &BasicOrder) -> Result<TypeExpr, TypeError> {
    let toks = lex(text)?;
    let mut parser = TypeParser::new(&toks, order);
    let t = parser.ty()?;
    if parser.peek().is_some() {
        return Err(parser.err("trailing input after type"));
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Pretty printing
// ---------------------------------------------------------------------------

fn collect_basics(t: &TypeExpr, out: &mut BTreeSet<String>) {
    match t {
        TypeExpr::Basic(d) => {
            out.insert(d.clone());
        }
        TypeExpr::End | TypeExpr::Var(_) => {}
        TypeExpr::Mu(b) => collect_basics(b, out),
        TypeExpr::Prefixed(_, p) => {
            for sub in pretype_children(p) {
                collect_basics(sub, out);
            }
        }
    }
}

fn binder_name(index: usize, taken: &BTreeSet<String>) -> String {
    const POOL: [&str; 6] = ["X", "Y", "Z", "V", "W", "U"];
    let mut i = index;
    loop {
        let candidate = if i < POOL.len() {
            POOL[i].to_owned()
        } else {
            format!("X{}", i - POOL.len() + 1)
        };
        if !taken.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

fn pretty_into(t: &TypeExpr, env: &mut Vec<String>, taken: &BTreeSet<String>, out: &mut String) {
    match t {
        TypeExpr::Basic(d) => out.push_str(d),
        TypeExpr::End => out.push_str("end"),
        TypeExpr::Var(i) => {
            let name = env
                .get(env.len().wrapping_sub(1 + i))
                .cloned()
                .unwrap_or_else(|| format!("_free{i}"));
            out.push_str(&name);
        }
        TypeExpr::Mu(b) => {
            let name = binder_name(env.len(), taken);
            out.push_str("rec ");
            out.push_str(&name);
            out.push('.');
            env.push(name);
            pretty_into(b, env, taken, out);
            env.pop();
        }
        TypeExpr::Prefixed(q, p) => {
            if *q == Qualifier::Un {
                out.push_str("un ");
            }
            match p {
                Pretype::Receive(payload, cont) | Pretype::Send(payload, cont) => {
                    out.push(if matches!(p, Pretype::Receive(_, _)) { '?' } else { '!' });
                    pretty_into(payload, env, taken, out);
                    out.push('.');
                    pretty_into(cont, env, taken, out);
                }
                Pretype::ExtChoice(arms) | Pretype::IntChoice(arms) => {
                    out.push(if matches!(p, Pretype::ExtChoice(_)) { '&' } else { '+' });
                    out.push('{');
                    for (i, (label, arm)) in arms.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        out.push_str(label);
                        out.push_str(": ");
                        pretty_into(arm, env, taken, out);
                    }
                    out.push('}');
                }
            }
        }
    }
}

/// Render in the concrete grammar. `parse_type` of the result gives back
/// the same expression; continuations are always spelled out, so the text
/// re-parses unambiguously.
pub fn pretty_type(t: &TypeExpr) -> String {
    let mut taken = BTreeSet::new();
    collect_basics(t, &mut taken);
    let mut out = String::new();
    pretty_into(t, &mut Vec::new(), &taken, &mut out);
    out
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_type(self))
    }
}

// ---------------------------------------------------------------------------
// Compilation into a coalgebra
// ---------------------------------------------------------------------------

/// Incremental compiler from type expressions into states of one shared
/// coalgebra. Expressions are head-unfolded and hash-consed on their de
/// Bruijn normal form, so alpha-equivalent (and unfold-equal) types share a
/// state. Can be seeded with an existing coalgebra; compiled states get
/// fresh `t<n>` ids that avoid the seeded ones.
#[derive(Debug, Clone)]
pub struct TypeCompiler {
    coalgebra: SessionCoalgebra,
    index: HashMap<TypeExpr, StateId>,
    counter: usize,
}

impl TypeCompiler {
    pub fn new(order: BasicOrder) -> Self {
        let coalgebra = CoalgebraTable::new(order).validate().expect("empty table is valid");
        TypeCompiler { coalgebra, index: HashMap::new(), counter: 0 }
    }

    pub fn from_coalgebra(coalgebra: SessionCoalgebra) -> Self {
        TypeCompiler { coalgebra, index: HashMap::new(), counter: 0 }
    }

    pub fn coalgebra(&self) -> &SessionCoalgebra {
        &self.coalgebra
    }

    pub fn into_coalgebra(self) -> SessionCoalgebra {
        self.coalgebra
    }

    fn fresh_id(&mut self) -> StateId {
        loop {
            let id = StateId::new(format!("t{}", self.counter));
            self.counter += 1;
            if !self.coalgebra.contains(&id) {
                return id;
            }
        }
    }

    /// Extend the coalgebra with a dual for `x`, replacing the held
    /// coalgebra by its dual closure.
    pub fn dualize(&mut self, x: &StateId) -> Result<StateId, CoalgebraError> {
        let (c, d) = self.coalgebra.dual_closure(x)?;
        self.coalgebra = c;
        Ok(d)
    }

    /// Compile a validated type expression and return its state.
    pub fn intern(&mut self, t: &TypeExpr) -> Result<StateId, TypeError> {
        validate_type(t)?;
        let mut pending: Vec<(StateId, TypeExpr)> = Vec::new();
        let root = self.resolve(t, &mut pending);
        while let Some((id, key)) = pending.pop() {
            let (label, transitions) = self.emit(&key, &mut pending)?;
            self.coalgebra.insert_raw(id, label, transitions);
        }
        Ok(root)
    }

    /// Look up the state for the head-unfolding of `t`, reserving a fresh
    /// id if it has not been compiled yet.
    fn resolve(&mut self, t: &TypeExpr, pending: &mut Vec<(StateId, TypeExpr)>) -> StateId {
        let key = unfold(t);
        if let Some(id) = self.index.get(&key) {
            return id.clone();
        }
        let id = self.fresh_id();
        self.index.insert(key.clone(), id.clone());
        pending.push((id.clone(), key));
        id
    }

    fn emit(
        &mut self,
        key: &TypeExpr,
        pending: &mut Vec<(StateId, TypeExpr)>,
    ) -> Result<(StateLabel, TransitionMap), TypeError> {
        match key {
            TypeExpr::End => Ok((StateLabel::End, TransitionMap::new())),
            TypeExpr::Basic(d) => {
                if !self.coalgebra.basic_order().contains_type(d) {
                    return Err(TypeError::UnknownBasic { name: d.clone(), at: None });
                }
                Ok((StateLabel::Bsc(d.clone()), TransitionMap::new()))
            }
            TypeExpr::Prefixed(Qualifier::Un, p) => {
                let linear = TypeExpr::Prefixed(Qualifier::Lin, p.clone());
                let target = self.resolve(&linear, pending);
                let mut tr = TransitionMap::new();
                tr.insert(TransitionKey::Cont(ContKey::Star), target);
                Ok((StateLabel::Par, tr))
            }
            TypeExpr::Prefixed(Qualifier::Lin, p) => match p {
                Pretype::Receive(payload, cont) | Pretype::Send(payload, cont) => {
                    let pol = if matches!(p, Pretype::Receive(_, _)) {
                        Polarity::In
                    } else {
                        Polarity::Out
                    };
                    let data = self.resolve(payload, pending);
                    let next = self.resolve(cont, pending);
                    let mut tr = TransitionMap::new();
                    tr.insert(TransitionKey::Data, data);
                    tr.insert(TransitionKey::Cont(ContKey::Star), next);
                    Ok((StateLabel::Com(pol), tr))
                }
                Pretype::ExtChoice(arms) | Pretype::IntChoice(arms) => {
                    let pol = if matches!(p, Pretype::ExtChoice(_)) {
                        Polarity::In
                    } else {
                        Polarity::Out
                    };
                    let labels: BTreeSet<String> = arms.keys().cloned().collect();
                    let mut tr = TransitionMap::new();
                    for (label, arm) in arms {
                        let target = self.resolve(arm, pending);
                        tr.insert(TransitionKey::Cont(ContKey::Label(label.clone())), target);
                    }
                    Ok((StateLabel::Branch(pol, labels), tr))
                }
            },
            TypeExpr::Mu(_) | TypeExpr::Var(_) => {
                unreachable!("keys are head-unfolded closed expressions")
            }
        }
    }
}

/// Compile a single validated type into its own coalgebra.
pub fn type_to_coalgebra(
    t: &TypeExpr,
    order: BasicOrder,
) -> Result<(SessionCoalgebra, StateId), TypeError> {
    let mut compiler = TypeCompiler::new(order);
    let root = compiler.intern(t)?;
    Ok((compiler.into_coalgebra(), root))
}
