//! Type checking of session pi-calculus processes against coalgebra states.
//!
//! Channels are typed by states of one ambient coalgebra; annotations on
//! inputs and restrictions are compiled into that coalgebra on demand. Two
//! checkers live here:
//!
//! * [`Checker::algo_check`] — the syntax-directed algorithm. A judgement
//!   `Γ₁ ⊢ P ; Γ₂` threads the context through the term: the output Γ₂ is
//!   the subset of Γ₁ that P did not consume. Acceptance of a whole
//!   program additionally requires the output to be unrestricted.
//! * [`Checker::declarative_check`] — an exhaustive search over the
//!   declarative rules, trying every context split at parallel
//!   compositions. Exponential; meant as an oracle on desk-sized terms.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::coalgebra::{
    BasicOrder, CoalgebraError, ContKey, Operation, Polarity, SessionCoalgebra, StateId,
    StateLabel, TransitionKey,
};
use crate::process::{freshen_bound_avoiding, Process, ResAnn};
use crate::relations::{decide_parallelizable, decide_similar};
use crate::types::{TypeCompiler, TypeError, TypeExpr};

/// Finite map from variables to coalgebra states.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypingContext(BTreeMap<String, StateId>);

impl TypingContext {
    pub fn new() -> Self {
        TypingContext(BTreeMap::new())
    }

    pub fn get(&self, var: &str) -> Option<&StateId> {
        self.0.get(var)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    /// Add a binding; a context holds at most one binding per variable.
    pub fn bind(&mut self, var: &str, state: StateId) -> Result<(), CheckError> {
        if self.0.contains_key(var) {
            return Err(CheckError::ShadowedVariable(var.to_owned()));
        }
        self.0.insert(var.to_owned(), state);
        Ok(())
    }

    pub fn unbind(&mut self, var: &str) -> Option<StateId> {
        self.0.remove(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &StateId)> {
        self.0.iter()
    }

    pub fn domain(&self) -> BTreeSet<String> {
        self.0.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for TypingContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (var, state)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{var}: {state}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{var}`: expected a {expected} type, found `{found}`")]
    PolarityMismatch { var: String, expected: String, found: String },
    #[error("variable `{var}`: label `{label}` is not offered by its type")]
    LabelNotOffered { var: String, label: String },
    #[error("variable `{var}`: process does not offer branches [{}]", missing.join(", "))]
    MissingBranches { var: String, missing: Vec<String> },
    #[error("subtyping failed: {sub} is not below {sup} (first failing pair {fail_left} vs {fail_right})")]
    SubtypeFailure { sub: String, sup: String, fail_left: String, fail_right: String },
    #[error("linear variable `{0}` is not finished")]
    LinearViolation(String),
    #[error("variable `{var}`: branch arms leave unequal contexts")]
    BranchContextMismatch { var: String },
    #[error("variable `{var}`: state {state} is not parallelizable ({left} vs {right})")]
    NotParallelizable { var: String, state: String, left: String, right: String },
    #[error("variable `{var}`: unpacking cycles through par states at {state}")]
    ParCycle { var: String, state: String },
    #[error("variable `{var}`: the annotated type has no dual ({inner})")]
    DualUndefined { var: String, inner: String },
    #[error("finished process leaves linear variables [{}]", .0.join(", "))]
    ResidualLinear(Vec<String>),
    #[error("missing type annotation on binder `{0}`")]
    AnnotationMissing(String),
    #[error("binder `{0}` shadows an existing binding")]
    ShadowedVariable(String),
    #[error("declarative search too large: {0} linear variables in one split")]
    OracleTooLarge(usize),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Coalgebra(#[from] CoalgebraError),
}

/// One applied rule in an accepting run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: &'static str,
    pub subject: Option<String>,
    pub before: Option<StateId>,
    pub after: Option<StateId>,
}

/// Result of an algorithmic check. `output` is present whenever the
/// judgement itself went through, even if the final unrestricted-ness
/// check then rejected the program.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub verdict: bool,
    pub output: Option<TypingContext>,
    pub trace: Vec<TraceStep>,
    pub warnings: Vec<String>,
    pub error: Option<CheckError>,
}

/// Is the state's operation `par`, `end` or `bsc`?
pub fn is_unrestricted(c: &SessionCoalgebra, state: &StateId) -> Result<bool, CoalgebraError> {
    Ok(matches!(
        c.operation(state)?,
        Operation::Par | Operation::End | Operation::Bsc
    ))
}

pub fn is_unrestricted_context(
    c: &SessionCoalgebra,
    ctx: &TypingContext,
) -> Result<bool, CoalgebraError> {
    for (_, state) in ctx.iter() {
        if !is_unrestricted(c, state)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All splits `Γ = Γ₁ ∘ Γ₂`: unrestricted bindings are copied to both
/// sides, each linear binding goes to exactly one. `2^lin` results.
pub fn split_contexts(
    c: &SessionCoalgebra,
    ctx: &TypingContext,
) -> Result<Vec<(TypingContext, TypingContext)>, CoalgebraError> {
    let mut lin_vars = Vec::new();
    let mut base = TypingContext::new();
    for (var, state) in ctx.iter() {
        if is_unrestricted(c, state)? {
            base.0.insert(var.clone(), state.clone());
        } else {
            lin_vars.push((var.clone(), state.clone()));
        }
    }
    let n = lin_vars.len();
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0u64..(1u64 << n) {
        let mut left = base.clone();
        let mut right = base.clone();
        for (i, (var, state)) in lin_vars.iter().enumerate() {
            if mask & (1 << i) == 0 {
                left.0.insert(var.clone(), state.clone());
            } else {
                right.0.insert(var.clone(), state.clone());
            }
        }
        out.push((left, right));
    }
    Ok(out)
}

/// Remove the variables of `drop` from the context. Only defined when each
/// dropped variable is absent or unrestricted; removing an unfinished
/// linear session is an error.
pub fn context_difference(
    c: &SessionCoalgebra,
    ctx: &TypingContext,
    drop: &[&str],
) -> Result<TypingContext, CheckError> {
    let mut out = ctx.clone();
    for var in drop {
        if let Some(state) = out.get(var).cloned() {
            if !is_unrestricted(c, &state)? {
                return Err(CheckError::LinearViolation((*var).to_owned()));
            }
            out.unbind(var);
        }
    }
    Ok(out)
}

/// Typechecker holding the ambient coalgebra and the compiled-annotation
/// store. Checking may extend the coalgebra (annotations, dual closures);
/// the checker is otherwise a pure function of its inputs.
#[derive(Debug, Clone)]
pub struct Checker {
    store: TypeCompiler,
}

impl Checker {
    pub fn new(order: BasicOrder) -> Self {
        Checker { store: TypeCompiler::new(order) }
    }

    pub fn with_coalgebra(c: SessionCoalgebra) -> Self {
        Checker { store: TypeCompiler::from_coalgebra(c) }
    }

    pub fn coalgebra(&self) -> &SessionCoalgebra {
        self.store.coalgebra()
    }

    pub fn intern_type(&mut self, t: &TypeExpr) -> Result<StateId, CheckError> {
        Ok(self.store.intern(t)?)
    }

    /// Bind the boolean constants as unrestricted `bool` channels.
    pub fn bind_ambient_bools(&mut self, ctx: &mut TypingContext) -> Result<(), CheckError> {
        let state = self.intern_type(&TypeExpr::basic("bool"))?;
        for name in ["true", "false"] {
            if !ctx.contains(name) {
                ctx.bind(name, state.clone())?;
            }
        }
        Ok(())
    }

    /// Run the algorithmic judgement and the final unrestricted-output
    /// check, producing a full report.
    pub fn algo_check(&mut self, ctx: &TypingContext, p: &Process) -> CheckReport {
        let mut run = InferRun { checker: self, trace: Vec::new(), warnings: Vec::new() };
        let p = freshen_bound_avoiding(p, &ctx.domain());
        match run.infer(ctx.clone(), &p) {
            Ok(output) => {
                let trace = run.trace;
                let warnings = run.warnings;
                let residual: Vec<String> = output
                    .iter()
                    .filter(|(_, s)| !is_unrestricted(self.coalgebra(), s).unwrap_or(false))
                    .map(|(v, _)| v.clone())
                    .collect();
                if residual.is_empty() {
                    CheckReport { verdict: true, output: Some(output), trace, warnings, error: None }
                } else {
                    CheckReport {
                        verdict: false,
                        output: Some(output),
                        trace,
                        warnings,
                        error: Some(CheckError::ResidualLinear(residual)),
                    }
                }
            }
            Err(e) => CheckReport {
                verdict: false,
                output: None,
                trace: run.trace,
                warnings: run.warnings,
                error: Some(e),
            },
        }
    }

    /// The bare judgement `Γ₁ ⊢ P ; Γ₂` without the final unrestricted
    /// check. Used by the metatheory properties.
    pub fn infer(&mut self, ctx: &TypingContext, p: &Process) -> Result<TypingContext, CheckError> {
        let mut run = InferRun { checker: self, trace: Vec::new(), warnings: Vec::new() };
        let p = freshen_bound_avoiding(p, &ctx.domain());
        run.infer(ctx.clone(), &p)
    }

    /// Exhaustive search for a declarative derivation of `Γ ⊢ P`. Tries
    /// every context split at parallel compositions; instantiates the
    /// types of restrictions and inputs from the annotations, with the
    /// restriction partner typed by the dual closure.
    pub fn declarative_check(
        &mut self,
        ctx: &TypingContext,
        p: &Process,
    ) -> Result<bool, CheckError> {
        let p = freshen_bound_avoiding(p, &ctx.domain());
        self.derivable(ctx, &p)
    }

    fn derivable(&mut self, ctx: &TypingContext, p: &Process) -> Result<bool, CheckError> {
        match p {
            Process::Inact => Ok(is_unrestricted_context(self.coalgebra(), ctx)?),
            Process::Repl(body) => {
                if !is_unrestricted_context(self.coalgebra(), ctx)? {
                    return Ok(false);
                }
                self.derivable(ctx, body)
            }
            Process::Par(l, r) => {
                let lin = ctx
                    .iter()
                    .filter(|(_, s)| !is_unrestricted(self.coalgebra(), s).unwrap_or(true))
                    .count();
                if lin > 12 {
                    return Err(CheckError::OracleTooLarge(lin));
                }
                for (g1, g2) in split_contexts(self.coalgebra(), ctx)? {
                    if self.derivable(&g1, l)? && self.derivable(&g2, r)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Process::Res { x, y, ann, body } => {
                let Some(ResAnn { ty, on_second }) = ann else {
                    return Err(CheckError::AnnotationMissing(format!("new({x},{y})")));
                };
                let t = self.intern_type(ty)?;
                let dual = match self.store.dualize(&t) {
                    Ok(d) => d,
                    Err(CoalgebraError::DualUndefined { .. }) => return Ok(false),
                    Err(e) => return Err(e.into()),
                };
                let (typed, other) = if *on_second { (y, x) } else { (x, y) };
                let mut ctx2 = ctx.clone();
                ctx2.bind(typed, t)?;
                ctx2.bind(other, dual)?;
                self.derivable(&ctx2, body)
            }
            Process::Input { chan, bind, ann, cont } => {
                let Some(subject) = ctx.get(chan).cloned() else { return Ok(false) };
                let Some(resolved) = self.unpack_for_oracle(&subject)? else {
                    return Ok(false);
                };
                if *self.coalgebra().label(&resolved)? != StateLabel::Com(Polarity::In) {
                    return Ok(false);
                }
                let Some(ty) = ann else {
                    return Err(CheckError::AnnotationMissing(bind.clone()));
                };
                let bound_state = self.intern_type(ty)?;
                let payload = self.coalgebra().data_target(&resolved)?.clone();
                if !decide_similar(self.coalgebra(), &payload, &bound_state)?.verdict {
                    return Ok(false);
                }
                let next = self.coalgebra().continuation(&resolved)?.clone();
                let mut ctx2 = ctx.clone();
                ctx2.unbind(chan);
                ctx2.bind(chan, next)?;
                ctx2.bind(bind, bound_state)?;
                self.derivable(&ctx2, cont)
            }
            Process::Output { chan, value, cont } => {
                let Some(subject) = ctx.get(chan).cloned() else { return Ok(false) };
                let Some(resolved) = self.unpack_for_oracle(&subject)? else {
                    return Ok(false);
                };
                if *self.coalgebra().label(&resolved)? != StateLabel::Com(Polarity::Out) {
                    return Ok(false);
                }
                let payload_var = value.name();
                if payload_var == chan {
                    return Ok(false);
                }
                let Some(payload_state) = ctx.get(payload_var).cloned() else {
                    return Ok(false);
                };
                let expected = self.coalgebra().data_target(&resolved)?.clone();
                if !decide_similar(self.coalgebra(), &payload_state, &expected)?.verdict {
                    return Ok(false);
                }
                let next = self.coalgebra().continuation(&resolved)?.clone();
                let mut ctx2 = ctx.clone();
                ctx2.unbind(chan);
                if !is_unrestricted(self.coalgebra(), &payload_state)? {
                    ctx2.unbind(payload_var);
                }
                ctx2.bind(chan, next)?;
                self.derivable(&ctx2, cont)
            }
            Process::Branch { chan, arms } => {
                let Some(subject) = ctx.get(chan).cloned() else { return Ok(false) };
                let Some(resolved) = self.unpack_for_oracle(&subject)? else {
                    return Ok(false);
                };
                let StateLabel::Branch(Polarity::In, type_labels) =
                    self.coalgebra().label(&resolved)?.clone()
                else {
                    return Ok(false);
                };
                if !type_labels.iter().all(|l| arms.contains_key(l)) {
                    return Ok(false);
                }
                for l in &type_labels {
                    let key = TransitionKey::Cont(ContKey::Label(l.clone()));
                    let target = self.coalgebra().transitions(&resolved)?[&key].clone();
                    let mut ctx2 = ctx.clone();
                    ctx2.unbind(chan);
                    ctx2.bind(chan, target)?;
                    if !self.derivable(&ctx2, &arms[l])? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Process::Select { chan, label, cont } => {
                let Some(subject) = ctx.get(chan).cloned() else { return Ok(false) };
                let Some(resolved) = self.unpack_for_oracle(&subject)? else {
                    return Ok(false);
                };
                let StateLabel::Branch(Polarity::Out, type_labels) =
                    self.coalgebra().label(&resolved)?.clone()
                else {
                    return Ok(false);
                };
                if !type_labels.contains(label) {
                    return Ok(false);
                }
                let key = TransitionKey::Cont(ContKey::Label(label.clone()));
                let target = self.coalgebra().transitions(&resolved)?[&key].clone();
                let mut ctx2 = ctx.clone();
                ctx2.unbind(chan);
                ctx2.bind(chan, target)?;
                self.derivable(&ctx2, cont)
            }
        }
    }

    /// Follow par states to the underlying type, requiring each to be
    /// parallelizable. `None` when unpacking fails (cycle or not
    /// parallelizable): no declarative derivation can exist then.
    fn unpack_for_oracle(&mut self, state: &StateId) -> Result<Option<StateId>, CheckError> {
        let mut cur = state.clone();
        let mut visited = BTreeSet::new();
        while self.coalgebra().operation(&cur)? == Operation::Par {
            if !visited.insert(cur.clone()) {
                return Ok(None);
            }
            if !decide_parallelizable(self.coalgebra(), &cur)?.verdict {
                return Ok(None);
            }
            cur = self.coalgebra().continuation(&cur)?.clone();
        }
        Ok(Some(cur))
    }
}

struct InferRun<'a> {
    checker: &'a mut Checker,
    trace: Vec<TraceStep>,
    warnings: Vec<String>,
}

impl<'a> InferRun<'a> {
    fn c(&self) -> &SessionCoalgebra {
        self.checker.coalgebra()
    }

    fn record(
        &mut self,
        rule: &'static str,
        subject: Option<&str>,
        before: Option<&StateId>,
        after: Option<&StateId>,
    ) {
        self.trace.push(TraceStep {
            rule,
            subject: subject.map(str::to_owned),
            before: before.cloned(),
            after: after.cloned(),
        });
    }

    fn infer(&mut self, ctx: TypingContext, p: &Process) -> Result<TypingContext, CheckError> {
        match p {
            Process::Inact => {
                self.record("A-Inact", None, None, None);
                Ok(ctx)
            }
            Process::Repl(body) => {
                let out = self.infer(ctx.clone(), body)?;
                if out != ctx {
                    let offending = ctx
                        .iter()
                        .find(|(v, s)| out.get(v.as_str()) != Some(*s))
                        .map(|(v, _)| v.clone())
                        .unwrap_or_else(|| "?".to_owned());
                    return Err(CheckError::LinearViolation(offending));
                }
                self.record("A-Rep", None, None, None);
                Ok(out)
            }
            Process::Par(l, r) => {
                let mid = self.infer(ctx, l)?;
                let out = self.infer(mid, r)?;
                self.record("A-Par", None, None, None);
                Ok(out)
            }
            Process::Res { x, y, ann, body } => {
                let Some(ResAnn { ty, on_second }) = ann else {
                    return Err(CheckError::AnnotationMissing(format!("new({x},{y})")));
                };
                let t = self.checker.intern_type(ty)?;
                let dual = self.checker.store.dualize(&t).map_err(|e| match e {
                    CoalgebraError::DualUndefined { state, .. } => CheckError::DualUndefined {
                        var: x.clone(),
                        inner: state,
                    },
                    other => CheckError::Coalgebra(other),
                })?;
                let (typed, other) = if *on_second { (y, x) } else { (x, y) };
                let mut ctx2 = ctx;
                ctx2.bind(typed, t.clone())?;
                ctx2.bind(other, dual)?;
                let out = self.infer(ctx2, body)?;
                let result = context_difference(self.c(), &out, &[x, y])?;
                self.record("A-Res", Some(x), Some(&t), None);
                Ok(result)
            }
            Process::Input { chan, bind, ann, cont } => {
                let (subject, unpacked) = self.resolve_subject(&ctx, chan)?;
                if *self.c().label(&subject)? != StateLabel::Com(Polarity::In) {
                    return Err(self.polarity_error(chan, "receiving (?)", &subject));
                }
                let Some(ty) = ann else {
                    return Err(CheckError::AnnotationMissing(bind.clone()));
                };
                let bound_state = self.checker.intern_type(ty)?;
                let payload = self.c().data_target(&subject)?.clone();
                self.require_subtype(&payload, &bound_state)?;
                let next = self.c().continuation(&subject)?.clone();
                let mut ctx2 = ctx;
                ctx2.unbind(chan);
                ctx2.bind(chan, next.clone())?;
                ctx2.bind(bind, bound_state)?;
                let out = self.infer(ctx2, cont)?;
                let result = context_difference(self.c(), &out, &[chan, bind])?;
                self.record("A-In", Some(chan), Some(&subject), Some(&next));
                self.restore_unpacked(result, chan, unpacked)
            }
            Process::Output { chan, value, cont } => {
                let (subject, unpacked) = self.resolve_subject(&ctx, chan)?;
                if *self.c().label(&subject)? != StateLabel::Com(Polarity::Out) {
                    return Err(self.polarity_error(chan, "sending (!)", &subject));
                }
                let payload_var = value.name().to_owned();
                let mut ctx2 = ctx;
                ctx2.unbind(chan);
                let Some(payload_state) = ctx2.get(&payload_var).cloned() else {
                    return Err(CheckError::UnknownVariable(payload_var));
                };
                // a sent linear channel is delegated away; an unrestricted
                // value stays available, as a context split would copy it
                if !is_unrestricted(self.c(), &payload_state)? {
                    ctx2.unbind(&payload_var);
                }
                let expected = self.c().data_target(&subject)?.clone();
                self.require_subtype(&payload_state, &expected)?;
                let next = self.c().continuation(&subject)?.clone();
                ctx2.bind(chan, next.clone())?;
                let out = self.infer(ctx2, cont)?;
                let result = context_difference(self.c(), &out, &[chan])?;
                self.record("A-Out", Some(chan), Some(&subject), Some(&next));
                self.restore_unpacked(result, chan, unpacked)
            }
            Process::Branch { chan, arms } => {
                let (subject, unpacked) = self.resolve_subject(&ctx, chan)?;
                let StateLabel::Branch(Polarity::In, type_labels) =
                    self.c().label(&subject)?.clone()
                else {
                    return Err(self.polarity_error(chan, "offering (&)", &subject));
                };
                let missing: Vec<String> = type_labels
                    .iter()
                    .filter(|l| !arms.contains_key(*l))
                    .cloned()
                    .collect();
                if !missing.is_empty() {
                    return Err(CheckError::MissingBranches { var: chan.clone(), missing });
                }
                let extra: Vec<String> = arms
                    .keys()
                    .filter(|l| !type_labels.contains(*l))
                    .cloned()
                    .collect();
                if !extra.is_empty() {
                    self.warnings.push(format!(
                        "branch on `{chan}`: arms [{}] are not in the channel type and were not checked",
                        extra.join(", ")
                    ));
                }
                let mut results: Vec<TypingContext> = Vec::new();
                for label in &type_labels {
                    let key = TransitionKey::Cont(ContKey::Label(label.clone()));
                    let target = self.c().transitions(&subject)?[&key].clone();
                    let mut ctx_l = ctx.clone();
                    ctx_l.unbind(chan);
                    ctx_l.bind(chan, target)?;
                    let out = self.infer(ctx_l, &arms[label])?;
                    results.push(context_difference(self.c(), &out, &[chan])?);
                }
                let first = results.first().cloned().expect("branch labels are non-empty");
                if results.iter().any(|r| *r != first) {
                    return Err(CheckError::BranchContextMismatch { var: chan.clone() });
                }
                self.record("A-Branch", Some(chan), Some(&subject), None);
                self.restore_unpacked(first, chan, unpacked)
            }
            Process::Select { chan, label, cont } => {
                let (subject, unpacked) = self.resolve_subject(&ctx, chan)?;
                let StateLabel::Branch(Polarity::Out, type_labels) =
                    self.c().label(&subject)?.clone()
                else {
                    return Err(self.polarity_error(chan, "selecting (+)", &subject));
                };
                if !type_labels.contains(label) {
                    return Err(CheckError::LabelNotOffered {
                        var: chan.clone(),
                        label: label.clone(),
                    });
                }
                let key = TransitionKey::Cont(ContKey::Label(label.clone()));
                let target = self.c().transitions(&subject)?[&key].clone();
                let mut ctx2 = ctx;
                ctx2.unbind(chan);
                ctx2.bind(chan, target.clone())?;
                let out = self.infer(ctx2, cont)?;
                let result = context_difference(self.c(), &out, &[chan])?;
                self.record("A-Sel", Some(chan), Some(&subject), Some(&target));
                self.restore_unpacked(result, chan, unpacked)
            }
        }
    }

    fn polarity_error(&self, var: &str, expected: &str, state: &StateId) -> CheckError {
        let found = self
            .c()
            .label(state)
            .map(|l| l.symbol())
            .unwrap_or_else(|_| "?".to_owned());
        CheckError::PolarityMismatch { var: var.to_owned(), expected: expected.to_owned(), found }
    }

    fn require_subtype(&mut self, sub: &StateId, sup: &StateId) -> Result<(), CheckError> {
        let witness = decide_similar(self.c(), sub, sup)?;
        if witness.verdict {
            Ok(())
        } else {
            let (l, r) = witness.failure.clone().unwrap_or((sub.clone(), sup.clone()));
            Err(CheckError::SubtypeFailure {
                sub: sub.to_string(),
                sup: sup.to_string(),
                fail_left: l.to_string(),
                fail_right: r.to_string(),
            })
        }
    }

    /// Walk par states down to the type underneath, checking each is
    /// parallelizable and keeping the outermost original for restoration.
    fn resolve_subject(
        &mut self,
        ctx: &TypingContext,
        chan: &str,
    ) -> Result<(StateId, Option<StateId>), CheckError> {
        let Some(mut cur) = ctx.get(chan).cloned() else {
            return Err(CheckError::UnknownVariable(chan.to_owned()));
        };
        let original = cur.clone();
        let mut unpacked = false;
        let mut visited: BTreeSet<StateId> = BTreeSet::new();
        while self.c().operation(&cur)? == Operation::Par {
            if !visited.insert(cur.clone()) {
                return Err(CheckError::ParCycle { var: chan.to_owned(), state: cur.to_string() });
            }
            let witness = decide_parallelizable(self.c(), &cur)?;
            if !witness.verdict {
                let (l, r) = witness.failure.clone().expect("failing pair on rejection");
                return Err(CheckError::NotParallelizable {
                    var: chan.to_owned(),
                    state: cur.to_string(),
                    left: l.to_string(),
                    right: r.to_string(),
                });
            }
            let next = self.c().continuation(&cur)?.clone();
            self.record("A-Unpack", Some(chan), Some(&cur), Some(&next));
            cur = next;
            unpacked = true;
        }
        Ok((cur, if unpacked { Some(original) } else { None }))
    }

    /// The unpack rule restores the original par type in the output.
    fn restore_unpacked(
        &mut self,
        out: TypingContext,
        chan: &str,
        unpacked: Option<StateId>,
    ) -> Result<TypingContext, CheckError> {
        let Some(original) = unpacked else { return Ok(out) };
        let mut restored = context_difference(self.c(), &out, &[chan])?;
        restored.bind(chan, original)?;
        Ok(restored)
    }
}

/// Harness for the subsumption rule: given `U ⊑ T` and a process accepted
/// with `x : T`, check it again with `x : U` and report that verdict.
pub fn check_subsumption_admissible(
    checker: &mut Checker,
    ctx: &TypingContext,
    var: &str,
    sup: &TypeExpr,
    sub: &TypeExpr,
    p: &Process,
) -> Result<bool, CheckError> {
    let sub_state = checker.intern_type(sub)?;
    let mut with_sub = ctx.clone();
    with_sub.unbind(var);
    with_sub.bind(var, sub_state)?;
    let _ = checker.intern_type(sup)?;
    Ok(checker.algo_check(&with_sub, p).verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::parse_process;
    use crate::types::parse_type;

    fn checker() -> Checker {
        Checker::new(BasicOrder::standard())
    }

    fn ctx_of(checker: &mut Checker, pairs: &[(&str, &str)]) -> TypingContext {
        let mut ctx = TypingContext::new();
        for (var, ty) in pairs {
            let t = parse_type(ty, &BasicOrder::standard()).unwrap();
            let state = checker.intern_type(&t).unwrap();
            ctx.bind(var, state).unwrap();
        }
        ctx
    }

    fn proc(text: &str) -> Process {
        parse_process(text, &BasicOrder::standard()).unwrap()
    }

    #[test]
    fn unrestricted_states() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("e", "end"), ("b", "bool"), ("u", "un?int"), ("l", "?int")]);
        let c = ck.coalgebra();
        assert!(is_unrestricted(c, ctx.get("e").unwrap()).unwrap());
        assert!(is_unrestricted(c, ctx.get("b").unwrap()).unwrap());
        assert!(is_unrestricted(c, ctx.get("u").unwrap()).unwrap());
        assert!(!is_unrestricted(c, ctx.get("l").unwrap()).unwrap());
    }

    #[test]
    fn split_counts_follow_linear_bindings() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "?int")]);
        let splits = split_contexts(ck.coalgebra(), &ctx).unwrap();
        assert_eq!(splits.len(), 2);
        assert!(splits[0].0.contains("x") && !splits[0].1.contains("x"));
        assert!(!splits[1].0.contains("x") && splits[1].1.contains("x"));

        let ctx = ctx_of(&mut ck, &[("b", "bool")]);
        let splits = split_contexts(ck.coalgebra(), &ctx).unwrap();
        assert_eq!(splits.len(), 1);
        assert!(splits[0].0.contains("b") && splits[0].1.contains("b"));

        let splits = split_contexts(ck.coalgebra(), &TypingContext::new()).unwrap();
        assert_eq!(splits.len(), 1);
    }

    #[test]
    fn difference_rules() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "end")]);
        let out = context_difference(ck.coalgebra(), &ctx, &["x"]).unwrap();
        assert!(out.is_empty());

        let ctx = ctx_of(&mut ck, &[("x", "?int")]);
        assert!(matches!(
            context_difference(ck.coalgebra(), &ctx, &["x"]),
            Err(CheckError::LinearViolation(v)) if v == "x"
        ));
        let same = context_difference(ck.coalgebra(), &ctx, &[]).unwrap();
        assert_eq!(same, ctx);
    }

    #[test]
    fn read_completes_linear_session() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "?int")]);
        let report = ck.algo_check(&ctx, &proc("x?(z:int).0"));
        assert!(report.verdict);
        assert!(report.output.unwrap().is_empty());
    }

    #[test]
    fn unread_linear_channel_rejected() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "?int")]);
        let report = ck.algo_check(&ctx, &proc("0"));
        assert!(!report.verdict);
        assert!(matches!(report.error, Some(CheckError::ResidualLinear(_))));
    }

    #[test]
    fn two_parallel_reads_need_unrestricted_type() {
        let mut ck = checker();
        let two_reads = proc("x?(z:int).0 | x?(z:int).0");
        let un_ctx = ctx_of(&mut ck, &[("x", "un?int")]);
        assert!(ck.algo_check(&un_ctx, &two_reads).verdict);
        let lin_ctx = ctx_of(&mut ck, &[("x", "?int")]);
        let report = ck.algo_check(&lin_ctx, &two_reads);
        assert!(!report.verdict);
        assert!(matches!(report.error, Some(CheckError::UnknownVariable(_))));
    }

    #[test]
    fn restriction_types_both_endpoints() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("v", "int")]);
        let p = proc("new(x,y:?int) (x?(z:int).0 | y!(v).0)");
        let report = ck.algo_check(&ctx, &p);
        assert!(report.verdict, "error: {:?}", report.error);
    }

    #[test]
    fn output_requires_payload_subtype() {
        let mut ck = checker();
        // sending an int where a real is expected is fine
        let ctx = ctx_of(&mut ck, &[("x", "!real"), ("v", "int")]);
        assert!(ck.algo_check(&ctx, &proc("x!(v).0")).verdict);
        // sending a real where an int is expected is not
        let ctx = ctx_of(&mut ck, &[("x", "!int"), ("v", "real")]);
        let report = ck.algo_check(&ctx, &proc("x!(v).0"));
        assert!(matches!(report.error, Some(CheckError::SubtypeFailure { .. })));
    }

    #[test]
    fn input_annotation_must_cover_payload() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "?int")]);
        assert!(ck.algo_check(&ctx, &proc("x?(z:real).0")).verdict);
        let ctx2 = ctx_of(&mut ck, &[("y", "?real")]);
        let report = ck.algo_check(&ctx2, &proc("y?(z:int).0"));
        assert!(matches!(report.error, Some(CheckError::SubtypeFailure { .. })));
    }

    #[test]
    fn branch_and_select() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "&{go: ?int, stop: end}")]);
        let ok = proc("x>>{go: x?(z:int).0, stop: 0}");
        assert!(ck.algo_check(&ctx, &ok).verdict);
        let missing = proc("x>>{go: x?(z:int).0}");
        let report = ck.algo_check(&ctx, &missing);
        assert!(matches!(report.error, Some(CheckError::MissingBranches { .. })));

        let ctx = ctx_of(&mut ck, &[("y", "+{go: !int, stop: end}"), ("v", "int")]);
        assert!(ck.algo_check(&ctx, &proc("y<<go.y!(v).0")).verdict);
        let report = ck.algo_check(&ctx, &proc("y<<missing.0"));
        assert!(matches!(report.error, Some(CheckError::LabelNotOffered { .. })));
    }

    #[test]
    fn extra_branch_arms_warn_but_pass() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "&{go: end}")]);
        let report = ck.algo_check(&ctx, &proc("x>>{go: 0, later: 0}"));
        assert!(report.verdict);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn branch_arms_may_leave_the_subject_at_different_unrestricted_types() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "&{a: un?int, b: end}")]);
        let report = ck.algo_check(&ctx, &proc("x>>{a: 0, b: 0}"));
        assert!(report.verdict, "error: {:?}", report.error);
    }

    #[test]
    fn branch_arms_must_agree_on_linear_use() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "&{a: end, b: end}"), ("w", "?int")]);
        let p = proc("x>>{a: w?(z:int).0, b: 0}");
        let report = ck.algo_check(&ctx, &p);
        assert!(matches!(report.error, Some(CheckError::BranchContextMismatch { .. })));
    }

    #[test]
    fn replication_cannot_consume_linear_channels() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "?int")]);
        let report = ck.algo_check(&ctx, &proc("*x?(z:int).0"));
        assert!(matches!(report.error, Some(CheckError::LinearViolation(_))));
        let ctx = ctx_of(&mut ck, &[("x", "rec X.un?int.X")]);
        assert!(ck.algo_check(&ctx, &proc("*x?(z:int).0")).verdict);
    }

    #[test]
    fn unrestricted_recursive_read_loops_through_par() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "rec X.un?int.X")]);
        let p = proc("x?(z1:int).x?(z2:int).0");
        let report = ck.algo_check(&ctx, &p);
        assert!(report.verdict, "error: {:?}", report.error);
        // the output restores the original unrestricted binding
        assert_eq!(report.output.unwrap().get("x"), ctx.get("x"));
    }

    #[test]
    fn declarative_oracle_matches_on_basics() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("v", "int")]);
        let p = proc("new(x,y:?int) (x?(z:int).0 | y!(v).0)");
        assert!(ck.declarative_check(&ctx, &p).unwrap());

        let ctx = ctx_of(&mut ck, &[("b", "bool")]);
        assert!(ck.declarative_check(&ctx, &proc("0")).unwrap());

        let ctx = ctx_of(&mut ck, &[("x", "?int")]);
        assert!(!ck.declarative_check(&ctx, &proc("x?(z:int).0 | x?(z:int).0")).unwrap());
    }

    #[test]
    fn received_channels_are_linear_obligations() {
        let mut ck = checker();
        // receive a read-channel, then use it
        let ctx = ctx_of(&mut ck, &[("x", "??int.end")]);
        assert!(ck.algo_check(&ctx, &proc("x?(c:?int).c?(z:int).0")).verdict);
        // dropping the received channel leaves its session unfinished
        let report = ck.algo_check(&ctx, &proc("x?(c:?int).0"));
        assert!(matches!(report.error, Some(CheckError::LinearViolation(v)) if v == "c"));
    }

    #[test]
    fn sent_channels_are_delegated_away() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "!(?int).end"), ("c", "?int")]);
        assert!(ck.algo_check(&ctx, &proc("x!(c).0")).verdict);
        // after delegation the channel is gone from this process
        let report = ck.algo_check(&ctx, &proc("x!(c).c?(z:int).0"));
        assert!(matches!(report.error, Some(CheckError::UnknownVariable(v)) if v == "c"));
    }

    #[test]
    fn accepting_trace_lists_rules_bottom_up() {
        let mut ck = checker();
        let ctx = ctx_of(&mut ck, &[("x", "rec X.un?int.X")]);
        let report = ck.algo_check(&ctx, &proc("x?(z:int).0"));
        assert!(report.verdict);
        let rules: Vec<&str> = report.trace.iter().map(|s| s.rule).collect();
        assert_eq!(rules, ["A-Unpack", "A-Inact", "A-In"]);
        let unpack = &report.trace[0];
        assert_eq!(unpack.subject.as_deref(), Some("x"));
        assert_eq!(unpack.before.as_ref(), ctx.get("x"));
    }

    #[test]
    fn subsumption_is_admissible_on_reads() {
        let mut ck = checker();
        let sup = parse_type("?real", &BasicOrder::standard()).unwrap();
        let sub = parse_type("?int", &BasicOrder::standard()).unwrap();
        let sup_state = ck.intern_type(&sup).unwrap();
        let mut ctx = TypingContext::new();
        ctx.bind("x", sup_state).unwrap();
        let p = proc("x?(z:real).0");
        assert!(ck.algo_check(&ctx, &p).verdict);
        assert!(check_subsumption_admissible(&mut ck, &ctx, "x", &sup, &sub, &p).unwrap());
    }
}
