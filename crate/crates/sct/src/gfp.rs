//! Brute-force greatest-fixpoint computation of the coinductive relations.
//!
//! Starts from the full relation on states and repeatedly deletes pairs
//! that violate the one-step condition until the relation is stable. The
//! result is the greatest post-fixpoint, i.e. the relation itself. This is
//! the independent oracle the incremental deciders are tested against, so
//! the conditions here are written out from the defining maps rather than
//! shared with the decider code.

use std::collections::{BTreeMap, BTreeSet};

use crate::coalgebra::{
    ContKey, Operation, SessionCoalgebra, StateId, StateLabel, TransitionKey,
};
use crate::relations::RelationKind;

type Relation = BTreeSet<(StateId, StateId)>;

fn all_pairs(c: &SessionCoalgebra) -> Relation {
    let mut r = Relation::new();
    for x in c.state_ids() {
        for y in c.state_ids() {
            r.insert((x.clone(), y.clone()));
        }
    }
    r
}

fn keeps_bisim(c: &SessionCoalgebra, r: &Relation, x: &StateId, y: &StateId) -> bool {
    let lx = c.label(x).expect("state");
    let ly = c.label(y).expect("state");
    let labels_ok = match (lx, ly) {
        (StateLabel::Bsc(d), StateLabel::Bsc(e)) => {
            c.basic_order().le(d, e) && c.basic_order().le(e, d)
        }
        _ => lx == ly,
    };
    if !labels_ok {
        return false;
    }
    let tx = c.transitions(x).expect("state");
    let ty = c.transitions(y).expect("state");
    tx.iter()
        .all(|(key, target)| r.contains(&(target.clone(), ty[key].clone())))
}

fn refine(mut r: Relation, keep: impl Fn(&Relation, &StateId, &StateId) -> bool) -> Relation {
    loop {
        let next: Relation = r
            .iter()
            .filter(|(x, y)| keep(&r, x, y))
            .cloned()
            .collect();
        if next == r {
            return r;
        }
        r = next;
    }
}

fn bisim_gfp(c: &SessionCoalgebra) -> Relation {
    refine(all_pairs(c), |r, x, y| keeps_bisim(c, r, x, y))
}

/// Parallelizability, recomputed here: at most one distinct linear state
/// in the continuation closure.
fn par_predicate(c: &SessionCoalgebra) -> BTreeMap<StateId, bool> {
    let mut out = BTreeMap::new();
    for x in c.state_ids() {
        let closure = c.continuation_closure(x).expect("state");
        let linear = closure
            .iter()
            .filter(|u| {
                !matches!(
                    c.operation(u).expect("state"),
                    Operation::Par | Operation::End | Operation::Bsc
                )
            })
            .count();
        out.insert(x.clone(), linear <= 1);
    }
    out
}

fn keeps_dual(c: &SessionCoalgebra, bisim: &Relation, r: &Relation, x: &StateId, y: &StateId) -> bool {
    let lx = c.label(x).expect("state");
    let ly = c.label(y).expect("state");
    let expected = match lx.dual() {
        Ok(l) => l,
        Err(_) => return false,
    };
    if *ly != expected {
        return false;
    }
    let tx = c.transitions(x).expect("state");
    let ty = c.transitions(y).expect("state");
    tx.iter().all(|(key, target)| {
        let other = ty[key].clone();
        if key.is_continuation() {
            r.contains(&(target.clone(), other))
        } else {
            bisim.contains(&(target.clone(), other))
        }
    })
}

fn keeps_sim(
    c: &SessionCoalgebra,
    par: &BTreeMap<StateId, bool>,
    r: &Relation,
    x: &StateId,
    y: &StateId,
) -> bool {
    let lx = c.label(x).expect("state").clone();
    let ly = c.label(y).expect("state").clone();
    let tx = c.transitions(x).expect("state");
    let ty = c.transitions(y).expect("state");
    let cont = |t: &crate::coalgebra::TransitionMap| t[&TransitionKey::Cont(ContKey::Star)].clone();
    let data = |t: &crate::coalgebra::TransitionMap| t[&TransitionKey::Data].clone();
    match (lx, ly) {
        (StateLabel::Com(Polarity::In), StateLabel::Com(Polarity::In)) => {
            r.contains(&(cont(tx), cont(ty))) && r.contains(&(data(tx), data(ty)))
        }
        (StateLabel::Com(Polarity::Out), StateLabel::Com(Polarity::Out)) => {
            r.contains(&(cont(tx), cont(ty))) && r.contains(&(data(ty), data(tx)))
        }
        (StateLabel::Branch(Polarity::In, l1), StateLabel::Branch(Polarity::In, l2)) => {
            l1.is_subset(&l2)
                && l1.iter().all(|l| {
                    let key = TransitionKey::Cont(ContKey::Label(l.clone()));
                    r.contains(&(tx[&key].clone(), ty[&key].clone()))
                })
        }
        (StateLabel::Branch(Polarity::Out, l1), StateLabel::Branch(Polarity::Out, l2)) => {
            l2.is_subset(&l1)
                && l2.iter().all(|l| {
                    let key = TransitionKey::Cont(ContKey::Label(l.clone()));
                    r.contains(&(tx[&key].clone(), ty[&key].clone()))
                })
        }
        (StateLabel::Bsc(d), StateLabel::Bsc(e)) => c.basic_order().le(&d, &e),
        (StateLabel::End, StateLabel::End) => true,
        (StateLabel::Par, StateLabel::Par) => {
            let cx = cont(tx);
            let cy = cont(ty);
            par[&cx] == par[&cy] && r.contains(&(cx, cy))
        }
        _ => false,
    }
}

use crate::coalgebra::Polarity;

/// Compute the greatest fixpoint of the chosen relation over all states by
/// iterated deletion from the full relation.
pub fn brute_force_relation(c: &SessionCoalgebra, kind: RelationKind) -> Relation {
    match kind {
        RelationKind::Bisim => bisim_gfp(c),
        RelationKind::Dual => {
            let bisim = bisim_gfp(c);
            refine(all_pairs(c), |r, x, y| keeps_dual(c, &bisim, r, x, y))
        }
        RelationKind::Sim => {
            let par = par_predicate(c);
            refine(all_pairs(c), |r, x, y| keeps_sim(c, &par, r, x, y))
        }
    }
}

/// Brute-force parallelizability of a single state.
pub fn brute_force_parallelizable(c: &SessionCoalgebra, x: &StateId) -> bool {
    par_predicate(c)[x]
}
