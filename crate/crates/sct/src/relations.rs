//! Coinductive relations on coalgebra states: bisimilarity, duality,
//! similarity and parallelizability.
//!
//! Each decider tries to construct the smallest post-fixpoint relation that
//! contains the queried pair: starting from that single pair, it checks the
//! one-step condition for every pair on a FIFO worklist and enqueues the
//! successor pairs the condition demands. If a pair fails its label or side
//! condition, no superset of the current relation can be a post-fixpoint and
//! the query is rejected with that pair as the witness. The pair universe is
//! finite, so the loop terminates.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::coalgebra::{
    CoalgebraError, Operation, Polarity, SessionCoalgebra, StateId, StateLabel, TransitionKey,
};

/// Which coinductive relation to decide or compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationKind {
    Bisim,
    Dual,
    Sim,
}

/// Outcome of a relation query.
///
/// On success, `relation` is the constructed post-fixpoint containing the
/// queried pair; it can be re-verified in one pass with
/// [`verify_post_fixpoint`]. On failure, `failure` is the first violating
/// pair encountered, reachable from the query by matching transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationWitness {
    pub verdict: bool,
    pub relation: BTreeSet<(StateId, StateId)>,
    pub failure: Option<(StateId, StateId)>,
}

impl RelationWitness {
    fn success(relation: BTreeSet<(StateId, StateId)>) -> Self {
        RelationWitness { verdict: true, relation, failure: None }
    }

    fn failure(pair: (StateId, StateId)) -> Self {
        RelationWitness { verdict: false, relation: BTreeSet::new(), failure: Some(pair) }
    }

    pub fn holds(&self) -> bool {
        self.verdict
    }
}

/// Memo tables shared by one top-level query. Nested bisimilarity checks
/// (duality compares payload types, similarity needs parallelizability,
/// parallelizability needs bisimilarity) reuse verdicts within the query.
struct Session<'a> {
    c: &'a SessionCoalgebra,
    bisim: HashMap<(StateId, StateId), bool>,
    par: HashMap<StateId, bool>,
}

impl<'a> Session<'a> {
    fn new(c: &'a SessionCoalgebra) -> Self {
        Session { c, bisim: HashMap::new(), par: HashMap::new() }
    }

    fn bisimilar(&mut self, x: &StateId, y: &StateId) -> Result<bool, CoalgebraError> {
        let key = (x.clone(), y.clone());
        if let Some(&v) = self.bisim.get(&key) {
            return Ok(v);
        }
        let v = worklist(self, RelationKind::Bisim, x, y)?.verdict;
        self.bisim.insert(key, v);
        Ok(v)
    }

    fn parallelizable(&mut self, x: &StateId) -> Result<bool, CoalgebraError> {
        if let Some(&v) = self.par.get(x) {
            return Ok(v);
        }
        let v = self.parallelizable_witness(x)?.verdict;
        self.par.insert(x.clone(), v);
        Ok(v)
    }

    fn parallelizable_witness(&mut self, x: &StateId) -> Result<RelationWitness, CoalgebraError> {
        let closure = self.c.continuation_closure(x)?;
        let mut linear: Vec<&StateId> = Vec::new();
        for u in &closure {
            if !matches!(
                self.c.operation(u)?,
                Operation::Par | Operation::End | Operation::Bsc
            ) {
                linear.push(u);
            }
        }
        if linear.len() > 1 {
            return Ok(RelationWitness::failure((linear[0].clone(), linear[1].clone())));
        }
        let mut relation = BTreeSet::new();
        for u in &closure {
            for w in &closure {
                relation.insert((u.clone(), w.clone()));
            }
        }
        Ok(RelationWitness::success(relation))
    }
}

/// One-step condition of the defining map. Returns the successor pairs the
/// relation must contain, or `None` when the pair violates a label or side
/// condition that no larger relation can repair.
fn step(
    session: &mut Session,
    kind: RelationKind,
    u: &StateId,
    w: &StateId,
) -> Result<Option<Vec<(StateId, StateId)>>, CoalgebraError> {
    let lu = session.c.label(u)?.clone();
    let lw = session.c.label(w)?.clone();
    let order = session.c.basic_order();
    match kind {
        RelationKind::Bisim => {
            match (&lu, &lw) {
                (StateLabel::Bsc(d), StateLabel::Bsc(e)) => {
                    if !order.equivalent(d, e) {
                        return Ok(None);
                    }
                }
                _ if lu != lw => return Ok(None),
                _ => {}
            }
            let mut pairs = Vec::new();
            for (key, target) in session.c.transitions(u)? {
                let other = session.c.transitions(w)?[key].clone();
                pairs.push((target.clone(), other));
            }
            Ok(Some(pairs))
        }
        RelationKind::Dual => {
            let expected = match lu.dual() {
                Ok(l) => l,
                Err(_) => return Ok(None),
            };
            if lw != expected {
                return Ok(None);
            }
            let mut pairs = Vec::new();
            for (key, target) in session.c.transitions(u)? {
                let other = session.c.transitions(w)?[key].clone();
                if key.is_continuation() {
                    pairs.push((target.clone(), other));
                } else if !session.bisimilar(target, &other)? {
                    return Ok(None);
                }
            }
            Ok(Some(pairs))
        }
        RelationKind::Sim => match (&lu, &lw) {
            (StateLabel::Com(Polarity::In), StateLabel::Com(Polarity::In)) => Ok(Some(vec![
                (session.c.continuation(u)?.clone(), session.c.continuation(w)?.clone()),
                (session.c.data_target(u)?.clone(), session.c.data_target(w)?.clone()),
            ])),
            (StateLabel::Com(Polarity::Out), StateLabel::Com(Polarity::Out)) => Ok(Some(vec![
                (session.c.continuation(u)?.clone(), session.c.continuation(w)?.clone()),
                // payload is contravariant for output
                (session.c.data_target(w)?.clone(), session.c.data_target(u)?.clone()),
            ])),
            (StateLabel::Branch(Polarity::In, l1), StateLabel::Branch(Polarity::In, l2)) => {
                if !l1.is_subset(l2) {
                    return Ok(None);
                }
                let mut pairs = Vec::new();
                for l in l1 {
                    let key = TransitionKey::Cont(crate::coalgebra::ContKey::Label(l.clone()));
                    pairs.push((
                        session.c.transitions(u)?[&key].clone(),
                        session.c.transitions(w)?[&key].clone(),
                    ));
                }
                Ok(Some(pairs))
            }
            (StateLabel::Branch(Polarity::Out, l1), StateLabel::Branch(Polarity::Out, l2)) => {
                if !l2.is_subset(l1) {
                    return Ok(None);
                }
                let mut pairs = Vec::new();
                for l in l2 {
                    let key = TransitionKey::Cont(crate::coalgebra::ContKey::Label(l.clone()));
                    pairs.push((
                        session.c.transitions(u)?[&key].clone(),
                        session.c.transitions(w)?[&key].clone(),
                    ));
                }
                Ok(Some(pairs))
            }
            (StateLabel::Bsc(d), StateLabel::Bsc(e)) => {
                if order.le(d, e) {
                    Ok(Some(Vec::new()))
                } else {
                    Ok(None)
                }
            }
            (StateLabel::End, StateLabel::End) => Ok(Some(Vec::new())),
            (StateLabel::Par, StateLabel::Par) => {
                let cu = session.c.continuation(u)?.clone();
                let cw = session.c.continuation(w)?.clone();
                if session.parallelizable(&cu)? != session.parallelizable(&cw)? {
                    return Ok(None);
                }
                Ok(Some(vec![(cu, cw)]))
            }
            _ => Ok(None),
        },
    }
}

fn worklist(
    session: &mut Session,
    kind: RelationKind,
    x: &StateId,
    y: &StateId,
) -> Result<RelationWitness, CoalgebraError> {
    let mut relation: BTreeSet<(StateId, StateId)> = BTreeSet::new();
    let mut queue: VecDeque<(StateId, StateId)> = VecDeque::new();
    relation.insert((x.clone(), y.clone()));
    queue.push_back((x.clone(), y.clone()));
    while let Some((u, w)) = queue.pop_front() {
        match step(session, kind, &u, &w)? {
            None => return Ok(RelationWitness::failure((u, w))),
            Some(pairs) => {
                for pair in pairs {
                    if relation.insert(pair.clone()) {
                        queue.push_back(pair);
                    }
                }
            }
        }
    }
    Ok(RelationWitness::success(relation))
}

fn check_states(c: &SessionCoalgebra, states: &[&StateId]) -> Result<(), CoalgebraError> {
    for s in states {
        if !c.contains(s) {
            return Err(CoalgebraError::UnknownState(s.0.clone()));
        }
    }
    Ok(())
}

/// Decide `x ~ y`: equal labels (basic types up to preorder equivalence)
/// and matching transitions lead to bisimilar states.
pub fn decide_bisimilar(
    c: &SessionCoalgebra,
    x: &StateId,
    y: &StateId,
) -> Result<RelationWitness, CoalgebraError> {
    check_states(c, &[x, y])?;
    worklist(&mut Session::new(c), RelationKind::Bisim, x, y)
}

/// Decide `x ⊥ y`: labels are dual, continuations are pairwise dual and
/// payload types are bisimilar.
pub fn decide_dual(
    c: &SessionCoalgebra,
    x: &StateId,
    y: &StateId,
) -> Result<RelationWitness, CoalgebraError> {
    check_states(c, &[x, y])?;
    worklist(&mut Session::new(c), RelationKind::Dual, x, y)
}

/// Decide `x ⊑ y` (x simulates into y, i.e. x may be used where y was
/// expected): input is covariant, output payload contravariant, external
/// choice may shrink, internal choice may grow, basic types follow the
/// configured preorder, and par states must agree on parallelizability of
/// their continuations.
pub fn decide_similar(
    c: &SessionCoalgebra,
    x: &StateId,
    y: &StateId,
) -> Result<RelationWitness, CoalgebraError> {
    check_states(c, &[x, y])?;
    worklist(&mut Session::new(c), RelationKind::Sim, x, y)
}

/// Decide parallelizability of `x`: the continuation closure of `x` may
/// contain at most one distinct linear (com or branch) state; unrestricted
/// states (par, end, bsc) are harmless in any number.
///
/// A parallelizable channel can be shared across processes because every
/// copy, whenever it acts, interacts at the same single protocol point.
/// Two *distinct* linear states reject even when they happen to be
/// behaviourally equal: copies advance independently, so the closure must
/// pin the action down to one state. The failure witness is the first
/// offending pair of linear states.
pub fn decide_parallelizable(
    c: &SessionCoalgebra,
    x: &StateId,
) -> Result<RelationWitness, CoalgebraError> {
    check_states(c, &[x])?;
    Session::new(c).parallelizable_witness(x)
}

/// Re-check that `relation` is a post-fixpoint of the defining map of
/// `kind` in a single pass over its pairs. Side conditions (payload
/// bisimilarity for duality, parallelizability for similarity) are decided
/// against the fixed relations, not against `relation`.
pub fn verify_post_fixpoint(
    c: &SessionCoalgebra,
    kind: RelationKind,
    relation: &BTreeSet<(StateId, StateId)>,
) -> Result<bool, CoalgebraError> {
    let mut session = Session::new(c);
    for (u, w) in relation {
        match step(&mut session, kind, u, w)? {
            None => return Ok(false),
            Some(pairs) => {
                if pairs.iter().any(|p| !relation.contains(p)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
