//! Finite session coalgebras.
//!
//! A session coalgebra is a finite set of labelled states together with a
//! transition map per state. Each state carries one of five operations
//! (`com`, `branch`, `end`, `bsc`, `par`); `com` and `branch` states also
//! carry a polarity, `branch` states a finite non-empty label set and `bsc`
//! states a basic data type. Transitions are split into a *data* transition
//! (the payload type of a communication) and *continuation* transitions
//! (how the protocol proceeds).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// Opaque identifier of a coalgebra state. Equality is exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub String);

impl StateId {
    pub fn new(s: impl Into<String>) -> Self {
        StateId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId(s.to_owned())
    }
}

/// Direction of a communication or choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    In,
    Out,
}

impl Polarity {
    pub fn dual(self) -> Polarity {
        match self {
            Polarity::In => Polarity::Out,
            Polarity::Out => Polarity::In,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::In => f.write_str("in"),
            Polarity::Out => f.write_str("out"),
        }
    }
}

/// The five state operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operation {
    Com,
    Branch,
    End,
    Bsc,
    Par,
}

/// Full state label: operation plus the data that comes with it.
///
/// The four session-type actions are the com/branch labels:
/// `?` is `Com(In)`, `!` is `Com(Out)`, `&` is `Branch(In, _)` and
/// `+` (internal choice) is `Branch(Out, _)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateLabel {
    Com(Polarity),
    Branch(Polarity, BTreeSet<String>),
    End,
    Bsc(String),
    Par,
}

impl StateLabel {
    pub fn operation(&self) -> Operation {
        match self {
            StateLabel::Com(_) => Operation::Com,
            StateLabel::Branch(_, _) => Operation::Branch,
            StateLabel::End => Operation::End,
            StateLabel::Bsc(_) => Operation::Bsc,
            StateLabel::Par => Operation::Par,
        }
    }

    /// The dual label: com/branch flip polarity, end and par are self-dual.
    /// Basic types have no dual.
    pub fn dual(&self) -> Result<StateLabel, CoalgebraError> {
        match self {
            StateLabel::Com(p) => Ok(StateLabel::Com(p.dual())),
            StateLabel::Branch(p, labels) => Ok(StateLabel::Branch(p.dual(), labels.clone())),
            StateLabel::End => Ok(StateLabel::End),
            StateLabel::Par => Ok(StateLabel::Par),
            StateLabel::Bsc(d) => Err(CoalgebraError::BscHasNoDual { basic: d.clone() }),
        }
    }

    /// Short display form used in DOT output and diagnostics.
    pub fn symbol(&self) -> String {
        match self {
            StateLabel::Com(Polarity::In) => "?".to_owned(),
            StateLabel::Com(Polarity::Out) => "!".to_owned(),
            StateLabel::Branch(Polarity::In, _) => "&".to_owned(),
            StateLabel::Branch(Polarity::Out, _) => "+".to_owned(),
            StateLabel::End => "end".to_owned(),
            StateLabel::Bsc(d) => d.clone(),
            StateLabel::Par => "par".to_owned(),
        }
    }
}

/// Continuation component of a transition key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContKey {
    Star,
    Label(String),
}

/// Key of an outgoing transition. `Data` is the payload transition of a com
/// state; everything else is a continuation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransitionKey {
    Data,
    Cont(ContKey),
}

impl TransitionKey {
    pub fn is_continuation(&self) -> bool {
        matches!(self, TransitionKey::Cont(_))
    }
}

impl fmt::Display for TransitionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionKey::Data => f.write_str("data"),
            TransitionKey::Cont(ContKey::Star) => f.write_str("*"),
            TransitionKey::Cont(ContKey::Label(l)) => f.write_str(l),
        }
    }
}

pub type TransitionMap = BTreeMap<TransitionKey, StateId>;

/// Decidable preorder on basic data types, closed under reflexivity and
/// transitivity. Also carries the universe of known basic types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicOrder {
    universe: BTreeSet<String>,
    pairs: BTreeSet<(String, String)>,
}

impl BasicOrder {
    /// The default order: `int <= real` over the universe {int, real, bool}.
    pub fn standard() -> Self {
        BasicOrder::from_pairs([("int", "real")])
    }

    /// Build from `a <= b` pairs. The universe is the default {int, real,
    /// bool} plus every type mentioned in a pair; the order itself is
    /// exactly the given pairs, closed under reflexivity and transitivity.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut universe: BTreeSet<String> =
            ["int", "real", "bool"].iter().map(|s| s.to_string()).collect();
        let mut rel: BTreeSet<(String, String)> = BTreeSet::new();
        for (a, b) in pairs {
            universe.insert(a.to_owned());
            universe.insert(b.to_owned());
            rel.insert((a.to_owned(), b.to_owned()));
        }
        // transitive closure
        loop {
            let mut added = Vec::new();
            for (a, b) in &rel {
                for (c, d) in &rel {
                    if b == c && !rel.contains(&(a.clone(), d.clone())) {
                        added.push((a.clone(), d.clone()));
                    }
                }
            }
            if added.is_empty() {
                break;
            }
            rel.extend(added);
        }
        BasicOrder { universe, pairs: rel }
    }

    /// Parse a configuration text of lines `a <= b`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, CoalgebraError> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut split = line.splitn(2, "<=");
            let a = split.next().unwrap_or("").trim();
            let b = split.next().unwrap_or("").trim();
            if a.is_empty() || b.is_empty() {
                return Err(CoalgebraError::BadBasicOrder {
                    line: lineno + 1,
                    text: line.to_owned(),
                });
            }
            pairs.push((a.to_owned(), b.to_owned()));
        }
        Ok(BasicOrder::from_pairs(
            pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())),
        ))
    }

    pub fn contains_type(&self, d: &str) -> bool {
        self.universe.contains(d)
    }

    /// `d <= e` in the preorder.
    pub fn le(&self, d: &str, e: &str) -> bool {
        d == e || self.pairs.contains(&(d.to_owned(), e.to_owned()))
    }

    /// Preorder equivalence: `d <= e` and `e <= d`.
    pub fn equivalent(&self, d: &str, e: &str) -> bool {
        self.le(d, e) && self.le(e, d)
    }

    pub fn universe(&self) -> impl Iterator<Item = &str> {
        self.universe.iter().map(|s| s.as_str())
    }

    /// The non-reflexive pairs, for serialization.
    pub fn proper_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs
            .iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

impl Default for BasicOrder {
    fn default() -> Self {
        BasicOrder::standard()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoalgebraError {
    #[error("state {state}: transition {key} leads to unknown state {target}")]
    DanglingTarget { state: String, key: String, target: String },
    #[error("state {state}: {detail}")]
    ArityMismatch { state: String, detail: String },
    #[error("state {state}: branch with empty label set")]
    EmptyBranch { state: String },
    #[error("unknown state {0}")]
    UnknownState(String),
    #[error("state {state}: unknown basic type {basic}")]
    UnknownBasicType { state: String, basic: String },
    #[error("basic type {basic} has no dual")]
    BscHasNoDual { basic: String },
    #[error("dual closure undefined: state {state} reaches basic-typed state {blocking} by continuations")]
    DualUndefined { state: String, blocking: String },
    #[error("duplicate state id {0}")]
    DuplicateState(String),
    #[error("basic order line {line}: expected `a <= b`, got `{text}`")]
    BadBasicOrder { line: usize, text: String },
    #[error("coalgebra document: {0}")]
    Format(String),
}

/// Raw state table, the input of validation.
#[derive(Debug, Clone, Default)]
pub struct CoalgebraTable {
    pub states: BTreeMap<StateId, (StateLabel, TransitionMap)>,
    pub basic_order: BasicOrder,
}

impl CoalgebraTable {
    pub fn new(basic_order: BasicOrder) -> Self {
        CoalgebraTable { states: BTreeMap::new(), basic_order }
    }

    pub fn insert(
        &mut self,
        id: impl Into<String>,
        label: StateLabel,
        transitions: impl IntoIterator<Item = (TransitionKey, StateId)>,
    ) -> &mut Self {
        self.states
            .insert(StateId::new(id), (label, transitions.into_iter().collect()));
        self
    }

    /// Shorthand for a com state with its data and continuation targets.
    pub fn com(&mut self, id: &str, pol: Polarity, data: &str, cont: &str) -> &mut Self {
        self.insert(
            id,
            StateLabel::Com(pol),
            [
                (TransitionKey::Data, StateId::from(data)),
                (TransitionKey::Cont(ContKey::Star), StateId::from(cont)),
            ],
        )
    }

    pub fn branch<'a>(
        &mut self,
        id: &str,
        pol: Polarity,
        arms: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> &mut Self {
        let arms: Vec<(&str, &str)> = arms.into_iter().collect();
        let labels: BTreeSet<String> = arms.iter().map(|(l, _)| l.to_string()).collect();
        let transitions: TransitionMap = arms
            .iter()
            .map(|(l, t)| {
                (TransitionKey::Cont(ContKey::Label(l.to_string())), StateId::from(*t))
            })
            .collect();
        self.insert(id, StateLabel::Branch(pol, labels), transitions)
    }

    pub fn end(&mut self, id: &str) -> &mut Self {
        self.insert(id, StateLabel::End, [])
    }

    pub fn basic(&mut self, id: &str, d: &str) -> &mut Self {
        self.insert(id, StateLabel::Bsc(d.to_owned()), [])
    }

    pub fn par(&mut self, id: &str, cont: &str) -> &mut Self {
        self.insert(
            id,
            StateLabel::Par,
            [(TransitionKey::Cont(ContKey::Star), StateId::from(cont))],
        )
    }

    /// Validate all invariants and freeze the table into a coalgebra.
    pub fn validate(self) -> Result<SessionCoalgebra, CoalgebraError> {
        validate_coalgebra(self)
    }
}

/// The key set a label prescribes for its transition map.
fn expected_keys(label: &StateLabel) -> BTreeSet<TransitionKey> {
    match label {
        StateLabel::Com(_) => [TransitionKey::Data, TransitionKey::Cont(ContKey::Star)]
            .into_iter()
            .collect(),
        StateLabel::Branch(_, labels) => labels
            .iter()
            .map(|l| TransitionKey::Cont(ContKey::Label(l.clone())))
            .collect(),
        StateLabel::End | StateLabel::Bsc(_) => BTreeSet::new(),
        StateLabel::Par => [TransitionKey::Cont(ContKey::Star)].into_iter().collect(),
    }
}

/// Check every invariant of a raw state table and freeze it.
///
/// Rejects transitions to unknown states, key sets that disagree with the
/// state label, empty branch label sets and basic types outside the
/// configured universe.
pub fn validate_coalgebra(table: CoalgebraTable) -> Result<SessionCoalgebra, CoalgebraError> {
    for (id, (label, transitions)) in &table.states {
        if let StateLabel::Branch(_, labels) = label {
            if labels.is_empty() {
                return Err(CoalgebraError::EmptyBranch { state: id.0.clone() });
            }
        }
        if let StateLabel::Bsc(d) = label {
            if !table.basic_order.contains_type(d) {
                return Err(CoalgebraError::UnknownBasicType {
                    state: id.0.clone(),
                    basic: d.clone(),
                });
            }
        }
        let expected = expected_keys(label);
        let actual: BTreeSet<TransitionKey> = transitions.keys().cloned().collect();
        if expected != actual {
            let missing: Vec<String> =
                expected.difference(&actual).map(|k| k.to_string()).collect();
            let extra: Vec<String> =
                actual.difference(&expected).map(|k| k.to_string()).collect();
            let mut detail = String::new();
            if !missing.is_empty() {
                detail.push_str(&format!("missing transition keys [{}]", missing.join(", ")));
            }
            if !extra.is_empty() {
                if !detail.is_empty() {
                    detail.push_str(", ");
                }
                detail.push_str(&format!("unexpected transition keys [{}]", extra.join(", ")));
            }
            return Err(CoalgebraError::ArityMismatch { state: id.0.clone(), detail });
        }
        for (key, target) in transitions {
            if !table.states.contains_key(target) {
                return Err(CoalgebraError::DanglingTarget {
                    state: id.0.clone(),
                    key: key.to_string(),
                    target: target.0.clone(),
                });
            }
        }
    }
    Ok(SessionCoalgebra {
        states: table.states,
        basic_order: table.basic_order,
        dual_of: BTreeMap::new(),
    })
}

/// A validated session coalgebra. Immutable; all queries are pure.
///
/// Extension (adding compiled types or dual states) produces a new value
/// rather than mutating in place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionCoalgebra {
    states: BTreeMap<StateId, (StateLabel, TransitionMap)>,
    basic_order: BasicOrder,
    // Established dual pairs, symmetric. Queried so that dualizing twice
    // returns the original state.
    dual_of: BTreeMap<StateId, StateId>,
}

impl SessionCoalgebra {
    pub fn basic_order(&self) -> &BasicOrder {
        &self.basic_order
    }

    pub fn contains(&self, x: &StateId) -> bool {
        self.states.contains_key(x)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state_ids(&self) -> impl Iterator<Item = &StateId> {
        self.states.keys()
    }

    fn get(&self, x: &StateId) -> Result<&(StateLabel, TransitionMap), CoalgebraError> {
        self.states
            .get(x)
            .ok_or_else(|| CoalgebraError::UnknownState(x.0.clone()))
    }

    pub fn label(&self, x: &StateId) -> Result<&StateLabel, CoalgebraError> {
        Ok(&self.get(x)?.0)
    }

    pub fn operation(&self, x: &StateId) -> Result<Operation, CoalgebraError> {
        Ok(self.label(x)?.operation())
    }

    pub fn transitions(&self, x: &StateId) -> Result<&TransitionMap, CoalgebraError> {
        Ok(&self.get(x)?.1)
    }

    /// Follow one transition.
    pub fn successor(&self, x: &StateId, key: &TransitionKey) -> Result<Option<&StateId>, CoalgebraError> {
        Ok(self.get(x)?.1.get(key))
    }

    /// Continuation target of a com or par state.
    pub fn continuation(&self, x: &StateId) -> Result<&StateId, CoalgebraError> {
        self.successor(x, &TransitionKey::Cont(ContKey::Star))?
            .ok_or_else(|| CoalgebraError::ArityMismatch {
                state: x.0.clone(),
                detail: "no * continuation".to_owned(),
            })
    }

    /// Data target of a com state.
    pub fn data_target(&self, x: &StateId) -> Result<&StateId, CoalgebraError> {
        self.successor(x, &TransitionKey::Data)?
            .ok_or_else(|| CoalgebraError::ArityMismatch {
                state: x.0.clone(),
                detail: "no data transition".to_owned(),
            })
    }

    /// The subcoalgebra generated by `x`: least set containing `x` closed
    /// under all transitions. Breadth-first closure.
    pub fn generated_subcoalgebra(&self, x: &StateId) -> Result<BTreeSet<StateId>, CoalgebraError> {
        self.closure(x, |_| true)
    }

    /// Least set containing `x` closed under continuation transitions only;
    /// data transitions are not followed.
    pub fn continuation_closure(&self, x: &StateId) -> Result<BTreeSet<StateId>, CoalgebraError> {
        self.closure(x, TransitionKey::is_continuation)
    }

    fn closure(
        &self,
        x: &StateId,
        follow: impl Fn(&TransitionKey) -> bool,
    ) -> Result<BTreeSet<StateId>, CoalgebraError> {
        self.get(x)?;
        let mut seen: BTreeSet<StateId> = BTreeSet::new();
        let mut queue: VecDeque<StateId> = VecDeque::new();
        seen.insert(x.clone());
        queue.push_back(x.clone());
        while let Some(y) = queue.pop_front() {
            for (key, target) in self.transitions(&y)? {
                if follow(key) && seen.insert(target.clone()) {
                    queue.push_back(target.clone());
                }
            }
        }
        Ok(seen)
    }

    /// The recorded dual of `x`, if one was established by `dual_closure`.
    pub fn recorded_dual(&self, x: &StateId) -> Option<&StateId> {
        self.dual_of.get(x)
    }

    /// Extend the coalgebra with a dual state for `x` (and for everything
    /// `x` reaches by continuations), returning the extended coalgebra and
    /// the id of the dual.
    ///
    /// Continuation transitions of the new states are mirrored to the dual
    /// side; data transitions keep pointing at the original targets. Duals
    /// are recorded pairwise, so requesting the dual of a dual returns the
    /// original state and no new states are created. End states are their
    /// own duals.
    ///
    /// Fails with `DualUndefined` if a basic-typed state is reachable from
    /// `x` by continuation transitions.
    pub fn dual_closure(&self, x: &StateId) -> Result<(SessionCoalgebra, StateId), CoalgebraError> {
        if let Some(d) = self.dual_of.get(x) {
            return Ok((self.clone(), d.clone()));
        }
        let closure = self.continuation_closure(x)?;
        for y in &closure {
            if let StateLabel::Bsc(_) = self.label(y)? {
                return Err(CoalgebraError::DualUndefined {
                    state: x.0.clone(),
                    blocking: y.0.clone(),
                });
            }
        }
        let mut out = self.clone();
        // Assign an id for the dual of every state in the closure first, so
        // that mirrored continuation transitions can be resolved.
        let mut fresh: Vec<(StateId, StateId)> = Vec::new();
        for y in &closure {
            if out.dual_of.contains_key(y) {
                continue;
            }
            if *self.label(y)? == StateLabel::End {
                out.dual_of.insert(y.clone(), y.clone());
                continue;
            }
            let dual_id = out.fresh_dual_id(y, &fresh);
            fresh.push((y.clone(), dual_id));
        }
        for (y, dual_id) in &fresh {
            out.dual_of.insert(y.clone(), dual_id.clone());
            out.dual_of.insert(dual_id.clone(), y.clone());
        }
        for (y, dual_id) in &fresh {
            let label = self.label(y)?.dual()?;
            let mut transitions = TransitionMap::new();
            for (key, target) in self.transitions(y)? {
                let image = if key.is_continuation() {
                    out.dual_of
                        .get(target)
                        .expect("continuation target is in the closure")
                        .clone()
                } else {
                    target.clone()
                };
                transitions.insert(key.clone(), image);
            }
            out.states.insert(dual_id.clone(), (label, transitions));
        }
        let dual = out.dual_of.get(x).expect("dual of root was assigned").clone();
        Ok((out, dual))
    }

    fn fresh_dual_id(&self, base: &StateId, pending: &[(StateId, StateId)]) -> StateId {
        let mut candidate = format!("{}~", base.0);
        loop {
            let id = StateId::new(candidate.clone());
            let taken = self.states.contains_key(&id)
                || pending.iter().any(|(_, d)| *d == id);
            if !taken {
                return id;
            }
            candidate.push('~');
        }
    }

    /// Rebuild the raw table, e.g. to extend it with further states.
    pub fn to_table(&self) -> CoalgebraTable {
        CoalgebraTable {
            states: self.states.clone(),
            basic_order: self.basic_order.clone(),
        }
    }

    pub(crate) fn insert_raw(&mut self, id: StateId, label: StateLabel, transitions: TransitionMap) {
        self.states.insert(id, (label, transitions));
    }
}
