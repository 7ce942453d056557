//! Property suite: algebraic laws of the coinductive relations, closure
//! properties of the coalgebra operations, round-trips of the type syntax,
//! and structural-congruence laws of the process normalizer.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use sct::coalgebra::{CoalgebraTable, ContKey, Operation, SessionCoalgebra, StateId, TransitionKey};
use sct::process::{erase, free_names, freshen_bound_avoiding, subst_name, Process, ResAnn, Value};
use sct::types::{
    parse_type, pretty_type, unfold, validate_type, Pretype, Qualifier, TypeCompiler, TypeExpr,
};
use sct::{
    decide_bisimilar, decide_dual, decide_parallelizable, decide_similar, normalize, reduce_step,
    verify_post_fixpoint, RelationKind,
};

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum StateSpec {
    Com(bool, usize, usize),
    Branch(bool, BTreeMap<usize, usize>),
    End,
    Bsc(usize),
    Par(usize),
}

fn arb_state(n: usize) -> impl Strategy<Value = StateSpec> {
    prop_oneof![
        3 => (any::<bool>(), 0..n, 0..n).prop_map(|(p, d, c)| StateSpec::Com(p, d, c)),
        3 => (any::<bool>(), prop::collection::btree_map(0..3usize, 0..n, 1..=3))
            .prop_map(|(p, arms)| StateSpec::Branch(p, arms)),
        1 => Just(StateSpec::End),
        1 => (0..3usize).prop_map(StateSpec::Bsc),
        2 => (0..n).prop_map(StateSpec::Par),
    ]
}

fn build_coalgebra(specs: Vec<StateSpec>) -> SessionCoalgebra {
    let labels = ["go", "halt", "more"];
    let basics = ["int", "real", "bool"];
    let name = |i: usize| format!("s{i}");
    let mut table = CoalgebraTable::new(common::order());
    for (i, spec) in specs.iter().enumerate() {
        let id = name(i);
        match spec {
            StateSpec::Com(pol, data, cont) => {
                let pol = if *pol { sct::Polarity::In } else { sct::Polarity::Out };
                table.com(&id, pol, &name(*data), &name(*cont));
            }
            StateSpec::Branch(pol, arms) => {
                let pol = if *pol { sct::Polarity::In } else { sct::Polarity::Out };
                let named: Vec<(String, String)> =
                    arms.iter().map(|(l, t)| (labels[*l].to_owned(), name(*t))).collect();
                table.branch(&id, pol, named.iter().map(|(l, t)| (l.as_str(), t.as_str())));
            }
            StateSpec::End => {
                table.end(&id);
            }
            StateSpec::Bsc(d) => {
                table.basic(&id, basics[*d]);
            }
            StateSpec::Par(cont) => {
                table.par(&id, &name(*cont));
            }
        }
    }
    table.validate().expect("specs build valid tables")
}

fn arb_coalgebra() -> impl Strategy<Value = SessionCoalgebra> {
    (1..=8usize)
        .prop_flat_map(|n| prop::collection::vec(arb_state(n), n))
        .prop_map(build_coalgebra)
}

fn arb_basic() -> impl Strategy<Value = TypeExpr> {
    prop_oneof![Just("int"), Just("real"), Just("bool")]
        .prop_map(|d| TypeExpr::Basic(d.to_owned()))
}

fn arb_qual() -> impl Strategy<Value = Qualifier> {
    prop_oneof![2 => Just(Qualifier::Lin), 1 => Just(Qualifier::Un)]
}

fn arb_label() -> impl Strategy<Value = String> {
    prop_oneof![Just("go"), Just("halt")].prop_map(str::to_owned)
}

/// Closed contractive types: recursion bodies are always prefixed, so no
/// binder chain can immediately return its own variable.
fn arb_prefixed(mu: usize, depth: u32) -> BoxedStrategy<TypeExpr> {
    let sub = move || arb_type_at(mu, depth.saturating_sub(1));
    let arms = move || prop::collection::btree_map(arb_label(), sub(), 1..=2);
    prop_oneof![
        (arb_qual(), sub(), sub()).prop_map(|(q, p, c)| TypeExpr::Prefixed(
            q,
            Pretype::Receive(Box::new(p), Box::new(c))
        )),
        (arb_qual(), sub(), sub()).prop_map(|(q, p, c)| TypeExpr::Prefixed(
            q,
            Pretype::Send(Box::new(p), Box::new(c))
        )),
        (arb_qual(), arms()).prop_map(|(q, a)| TypeExpr::Prefixed(q, Pretype::ExtChoice(a))),
        (arb_qual(), arms()).prop_map(|(q, a)| TypeExpr::Prefixed(q, Pretype::IntChoice(a))),
    ]
    .boxed()
}

fn arb_type_at(mu: usize, depth: u32) -> BoxedStrategy<TypeExpr> {
    let mut leaves = vec![Just(TypeExpr::End).boxed(), arb_basic().boxed()];
    if mu > 0 {
        leaves.push((0..mu).prop_map(TypeExpr::Var).boxed());
    }
    let leaf = prop::strategy::Union::new(leaves);
    if depth == 0 {
        return leaf.boxed();
    }
    prop_oneof![
        1 => leaf,
        3 => arb_prefixed(mu, depth),
        1 => arb_prefixed(mu + 1, depth).prop_map(|b| TypeExpr::Mu(Box::new(b))),
    ]
    .boxed()
}

fn arb_type() -> impl Strategy<Value = TypeExpr> {
    arb_type_at(0, 3)
}

fn arb_chan() -> impl Strategy<Value = String> {
    prop_oneof![Just("x"), Just("y"), Just("u"), Just("v")].prop_map(str::to_owned)
}

fn arb_value() -> impl Strategy<Value = Value> {
    prop_oneof![arb_chan().prop_map(Value::Var), any::<bool>().prop_map(Value::Bool)]
}

fn arb_ann() -> impl Strategy<Value = TypeExpr> {
    prop_oneof![Just("int"), Just("end"), Just("?int")]
        .prop_map(|t| parse_type(t, &common::order()).unwrap())
}

fn arb_process_at(depth: u32) -> BoxedStrategy<Process> {
    if depth == 0 {
        return Just(Process::Inact).boxed();
    }
    let sub = move || arb_process_at(depth - 1);
    let binder = prop_oneof![Just("z"), Just("w"), Just("k")].prop_map(str::to_owned);
    prop_oneof![
        1 => Just(Process::Inact),
        3 => (arb_chan(), arb_value(), sub()).prop_map(|(c, v, p)| Process::Output {
            chan: c,
            value: v,
            cont: Box::new(p)
        }),
        3 => (arb_chan(), binder.clone(), arb_ann(), sub()).prop_map(|(c, b, t, p)| {
            Process::Input { chan: c, bind: b, ann: Some(t), cont: Box::new(p) }
        }),
        1 => (arb_chan(), prop::collection::btree_map(arb_label(), sub(), 1..=2))
            .prop_map(|(c, arms)| Process::Branch { chan: c, arms }),
        1 => (arb_chan(), arb_label(), sub()).prop_map(|(c, l, p)| Process::Select {
            chan: c,
            label: l,
            cont: Box::new(p)
        }),
        2 => (sub(), sub()).prop_map(|(l, r)| Process::par(l, r)),
        1 => sub().prop_map(|p| Process::Repl(Box::new(p))),
        2 => (prop_oneof![Just(("a", "b")), Just(("c", "d"))], proptest::option::of(arb_ann()), sub())
            .prop_map(|((x, y), ann, p)| Process::Res {
                x: x.to_owned(),
                y: y.to_owned(),
                ann: ann.map(|ty| ResAnn { ty, on_second: false }),
                body: Box::new(p),
            }),
    ]
    .boxed()
}

fn arb_process() -> impl Strategy<Value = Process> {
    arb_process_at(3).prop_map(|p| freshen_bound_avoiding(&p, &Default::default()))
}

// ---------------------------------------------------------------------------
// Relations
// ---------------------------------------------------------------------------

fn holds(
    c: &SessionCoalgebra,
    kind: RelationKind,
    x: &StateId,
    y: &StateId,
) -> bool {
    match kind {
        RelationKind::Bisim => decide_bisimilar(c, x, y).unwrap().verdict,
        RelationKind::Dual => decide_dual(c, x, y).unwrap().verdict,
        RelationKind::Sim => decide_similar(c, x, y).unwrap().verdict,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bisimilarity_is_an_equivalence(c in arb_coalgebra()) {
        let ids: Vec<StateId> = c.state_ids().cloned().collect();
        for x in &ids {
            prop_assert!(holds(&c, RelationKind::Bisim, x, x));
        }
        for x in &ids {
            for y in &ids {
                let xy = holds(&c, RelationKind::Bisim, x, y);
                prop_assert_eq!(xy, holds(&c, RelationKind::Bisim, y, x));
                if xy {
                    for z in &ids {
                        if holds(&c, RelationKind::Bisim, y, z) {
                            prop_assert!(holds(&c, RelationKind::Bisim, x, z));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn similarity_is_a_preorder_and_characterizes_bisim(c in arb_coalgebra()) {
        let ids: Vec<StateId> = c.state_ids().cloned().collect();
        for x in &ids {
            prop_assert!(holds(&c, RelationKind::Sim, x, x));
        }
        for x in &ids {
            for y in &ids {
                let forward = holds(&c, RelationKind::Sim, x, y);
                if forward {
                    for z in &ids {
                        if holds(&c, RelationKind::Sim, y, z) {
                            prop_assert!(holds(&c, RelationKind::Sim, x, z));
                        }
                    }
                }
                let both = forward && holds(&c, RelationKind::Sim, y, x);
                prop_assert_eq!(both, holds(&c, RelationKind::Bisim, x, y));
            }
        }
    }

    #[test]
    fn duality_is_symmetric_and_transports_along_bisim(c in arb_coalgebra()) {
        let ids: Vec<StateId> = c.state_ids().cloned().collect();
        for x in &ids {
            for y in &ids {
                let xy = holds(&c, RelationKind::Dual, x, y);
                prop_assert_eq!(xy, holds(&c, RelationKind::Dual, y, x));
                if xy {
                    for z in &ids {
                        // two duals of one state are bisimilar
                        if holds(&c, RelationKind::Dual, x, z) {
                            prop_assert!(holds(&c, RelationKind::Bisim, y, z));
                        }
                        // duality travels along bisimilarity
                        if holds(&c, RelationKind::Bisim, y, z) {
                            prop_assert!(holds(&c, RelationKind::Dual, x, z));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn subtypes_preserve_restriction_class_and_parallelizability(c in arb_coalgebra()) {
        let ids: Vec<StateId> = c.state_ids().cloned().collect();
        for x in &ids {
            for y in &ids {
                if holds(&c, RelationKind::Sim, x, y) {
                    let ux = matches!(
                        c.operation(x).unwrap(),
                        Operation::Par | Operation::End | Operation::Bsc
                    );
                    let uy = matches!(
                        c.operation(y).unwrap(),
                        Operation::Par | Operation::End | Operation::Bsc
                    );
                    prop_assert_eq!(ux, uy);
                    if c.operation(y).unwrap() == Operation::Par
                        && decide_parallelizable(&c, y).unwrap().verdict
                    {
                        prop_assert!(decide_parallelizable(&c, x).unwrap().verdict);
                    }
                }
            }
        }
    }

    #[test]
    fn success_witnesses_re_verify(c in arb_coalgebra()) {
        let ids: Vec<StateId> = c.state_ids().cloned().collect();
        for kind in [RelationKind::Bisim, RelationKind::Dual, RelationKind::Sim] {
            for x in &ids {
                for y in &ids {
                    let w = match kind {
                        RelationKind::Bisim => decide_bisimilar(&c, x, y).unwrap(),
                        RelationKind::Dual => decide_dual(&c, x, y).unwrap(),
                        RelationKind::Sim => decide_similar(&c, x, y).unwrap(),
                    };
                    if w.verdict {
                        prop_assert!(w.relation.contains(&(x.clone(), y.clone())));
                        prop_assert!(verify_post_fixpoint(&c, kind, &w.relation).unwrap());
                    } else {
                        prop_assert!(w.failure.is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn closures_nest_and_are_minimal(c in arb_coalgebra()) {
        for x in c.state_ids() {
            let gen = c.generated_subcoalgebra(x).unwrap();
            let cont = c.continuation_closure(x).unwrap();
            prop_assert!(cont.is_subset(&gen));
            // closed under transitions
            for y in &gen {
                for target in c.transitions(y).unwrap().values() {
                    prop_assert!(gen.contains(target));
                }
            }
            // least: every member other than the root has a predecessor
            for y in &gen {
                if y != x {
                    let reachable = gen.iter().any(|p| {
                        p != y && c.transitions(p).unwrap().values().any(|t| t == y)
                    });
                    prop_assert!(reachable || c.transitions(x).unwrap().values().any(|t| t == y));
                }
            }
        }
    }

    #[test]
    fn validation_pins_the_key_set_to_the_label(c in arb_coalgebra(), pick in any::<prop::sample::Index>()) {
        // a valid table round-trips; any key-set mutation is rejected
        prop_assert!(c.to_table().validate().is_ok());
        let ids: Vec<StateId> = c.state_ids().cloned().collect();
        let victim = pick.get(&ids).clone();
        let mut broken = c.to_table();
        let entry = broken.states.get_mut(&victim).unwrap();
        match entry.1.keys().next().cloned() {
            Some(key) => {
                entry.1.remove(&key);
            }
            None => {
                entry.1.insert(
                    TransitionKey::Cont(ContKey::Star),
                    victim.clone(),
                );
            }
        }
        let rejected =
            matches!(broken.validate(), Err(sct::CoalgebraError::ArityMismatch { .. }));
        prop_assert!(rejected);
    }

    #[test]
    fn dual_closure_is_dual_bounded_and_involutive(c in arb_coalgebra()) {
        let n = c.len();
        for x in c.state_ids() {
            match c.dual_closure(x) {
                Ok((extended, dual)) => {
                    prop_assert!(extended.len() <= 2 * n);
                    prop_assert!(decide_dual(&extended, x, &dual).unwrap().verdict);
                    let (again, back) = extended.dual_closure(&dual).unwrap();
                    prop_assert_eq!(&back, x);
                    prop_assert_eq!(again.len(), extended.len());
                }
                Err(_) => {
                    // only a continuation-reachable basic state blocks
                    let blocked = c
                        .continuation_closure(x)
                        .unwrap()
                        .iter()
                        .any(|y| c.operation(y).unwrap() == Operation::Bsc);
                    prop_assert!(blocked);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

fn rename_states(c: &SessionCoalgebra, prefix: &str) -> CoalgebraTable {
    let mut out = CoalgebraTable::new(c.basic_order().clone());
    for id in c.state_ids() {
        let label = c.label(id).unwrap().clone();
        let transitions = c
            .transitions(id)
            .unwrap()
            .iter()
            .map(|(k, t)| (k.clone(), StateId::new(format!("{prefix}{t}"))))
            .collect::<Vec<_>>();
        out.insert(format!("{prefix}{id}"), label, transitions);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn generated_types_validate(t in arb_type()) {
        prop_assert!(validate_type(&t).is_ok());
    }

    #[test]
    fn pretty_parse_round_trip(t in arb_type()) {
        let text = pretty_type(&t);
        let parsed = parse_type(&text, &common::order());
        prop_assert_eq!(parsed.as_ref(), Ok(&t), "printed: {}", text);
    }

    #[test]
    fn unfold_exposes_a_constructor(t in arb_type()) {
        let u = unfold(&t);
        prop_assert!(!matches!(u, TypeExpr::Mu(_) | TypeExpr::Var(_)));
        prop_assert!(validate_type(&u).is_ok());
    }

    #[test]
    fn type_and_unfolding_compile_to_bisimilar_states(t in arb_type()) {
        // within one compiler they are literally the same state
        let mut compiler = TypeCompiler::new(common::order());
        let a = compiler.intern(&t).unwrap();
        let b = compiler.intern(&unfold(&t)).unwrap();
        prop_assert_eq!(&a, &b);
        // across compilers, the renamed disjoint union relates the roots
        let (ca, ra) = sct::type_to_coalgebra(&t, common::order()).unwrap();
        let (cb, rb) = sct::type_to_coalgebra(&unfold(&t), common::order()).unwrap();
        let mut union = rename_states(&ca, "a_");
        for (id, (label, transitions)) in rename_states(&cb, "b_").states {
            union.states.insert(id, (label, transitions));
        }
        let union = union.validate().unwrap();
        let left = StateId::new(format!("a_{ra}"));
        let right = StateId::new(format!("b_{rb}"));
        prop_assert!(decide_bisimilar(&union, &left, &right).unwrap().verdict);
    }

    #[test]
    fn compiled_state_count_is_linear(t in arb_type()) {
        fn nodes(t: &TypeExpr) -> usize {
            match t {
                TypeExpr::Basic(_) | TypeExpr::End | TypeExpr::Var(_) => 1,
                TypeExpr::Mu(b) => 1 + nodes(b),
                TypeExpr::Prefixed(_, p) => {
                    1 + match p {
                        Pretype::Receive(a, c) | Pretype::Send(a, c) => nodes(a) + nodes(c),
                        Pretype::ExtChoice(arms) | Pretype::IntChoice(arms) => {
                            arms.values().map(nodes).sum()
                        }
                    }
                }
            }
        }
        let (c, _) = sct::type_to_coalgebra(&t, common::order()).unwrap();
        prop_assert!(c.len() <= 2 * nodes(&t));
    }
}

// ---------------------------------------------------------------------------
// Processes
// ---------------------------------------------------------------------------

fn successor_terms(p: &Process) -> Vec<Process> {
    reduce_step(p, 2).into_iter().map(|s| s.term).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn normalize_is_idempotent(p in arb_process()) {
        let n = normalize(&p);
        prop_assert_eq!(normalize(&n), n);
    }

    #[test]
    fn congruence_axioms_fix_the_canonical_form(p in arb_process(), q in arb_process(), r in arb_process()) {
        let np = normalize(&Process::par(p.clone(), q.clone()));
        prop_assert_eq!(&np, &normalize(&Process::par(q.clone(), p.clone())));
        prop_assert_eq!(
            normalize(&Process::par(Process::par(p.clone(), q.clone()), r.clone())),
            normalize(&Process::par(p.clone(), Process::par(q.clone(), r.clone())))
        );
        prop_assert_eq!(normalize(&Process::par(p.clone(), Process::Inact)), normalize(&p));
        // copy folding reaches through parallel bodies and bound-name
        // renaming; bodies hoisting a restriction stay unfolded
        fn has_top_restriction(p: &Process) -> bool {
            match p {
                Process::Res { .. } => true,
                Process::Par(l, r) => has_top_restriction(l) || has_top_restriction(r),
                _ => false,
            }
        }
        if !has_top_restriction(&p) {
            prop_assert_eq!(
                normalize(&Process::par(p.clone(), Process::Repl(Box::new(p.clone())))),
                normalize(&Process::Repl(Box::new(p.clone())))
            );
        }
    }

    #[test]
    fn restriction_axioms_fix_the_canonical_form(p in arb_process(), t in arb_ann()) {
        let wrap = |x: &str, y: &str, ann: Option<ResAnn>, body: Process| Process::Res {
            x: x.to_owned(),
            y: y.to_owned(),
            ann,
            body: Box::new(body),
        };
        // (νxy)P ≡ (νyx)P, with the annotation following its endpoint
        prop_assert_eq!(
            normalize(&wrap("sy", "sx", None, p.clone())),
            normalize(&wrap("sx", "sy", None, p.clone()))
        );
        prop_assert_eq!(
            normalize(&wrap("sy", "sx", Some(ResAnn { ty: t.clone(), on_second: false }), p.clone())),
            normalize(&wrap("sx", "sy", Some(ResAnn { ty: t.clone(), on_second: true }), p.clone()))
        );
        // (νxy)(νvw)P ≡ (νvw)(νxy)P
        prop_assert_eq!(
            normalize(&wrap("sa", "sb", None, wrap("sc", "sd", None, p.clone()))),
            normalize(&wrap("sc", "sd", None, wrap("sa", "sb", None, p.clone())))
        );
        // (νxy)0 ≡ 0
        prop_assert_eq!(normalize(&wrap("sx", "sy", None, Process::Inact)), Process::Inact);
    }

    #[test]
    fn scope_extrusion_fixes_the_canonical_form(p in arb_process(), q in arb_process()) {
        // the generated name pools never contain sx/sy, so the side
        // condition "x and y not free in Q" holds by construction
        let res_inside = Process::Res {
            x: "sx".to_owned(),
            y: "sy".to_owned(),
            ann: None,
            body: Box::new(Process::par(p.clone(), q.clone())),
        };
        let res_outside = Process::par(
            Process::Res { x: "sx".to_owned(), y: "sy".to_owned(), ann: None, body: Box::new(p.clone()) },
            q.clone(),
        );
        prop_assert_eq!(normalize(&res_inside), normalize(&res_outside));
    }

    #[test]
    fn erase_is_idempotent_and_commutes_with_normalize(p in arb_process()) {
        let e = erase(&p);
        prop_assert_eq!(erase(&e), e.clone());
        prop_assert_eq!(erase(&normalize(&p)), normalize(&e));
    }

    #[test]
    fn congruent_terms_have_identical_successor_sets(p in arb_process(), q in arb_process()) {
        let a = successor_terms(&Process::par(p.clone(), q.clone()));
        let b = successor_terms(&Process::par(q.clone(), Process::par(p.clone(), Process::Inact)));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn substitution_does_not_invent_names(p in arb_process(), v in arb_value()) {
        let before = free_names(&p);
        let after = free_names(&subst_name(&p, "x", &v));
        for name in &after {
            // a substituted boolean constant names the channel it lands on
            prop_assert!(before.contains(name) || name == v.name(), "invented {}", name);
        }
    }

    #[test]
    fn successors_do_not_grow_free_names(p in arb_process()) {
        let wrapped = Process::Res {
            x: "sx".to_owned(),
            y: "sy".to_owned(),
            ann: None,
            body: Box::new(p.clone()),
        };
        let before = free_names(&wrapped);
        for term in successor_terms(&wrapped) {
            prop_assert!(free_names(&term).is_subset(&before));
        }
    }
}

// quick sanity for transition-key helpers used above
#[test]
fn cont_keys_are_continuations() {
    assert!(TransitionKey::Cont(ContKey::Star).is_continuation());
    assert!(!TransitionKey::Data.is_continuation());
}
