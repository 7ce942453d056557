//! Subtyping as similarity: covariant input, contravariant output, choice
//! width rules, all checked against the brute-force greatest fixpoint.
//!
//! ```bash
//! cargo run --example subtyping
//! ```

use sct::{
    brute_force_relation, decide_similar, parse_type, BasicOrder, RelationKind, TypeCompiler,
};

fn main() {
    let order = BasicOrder::standard();
    let mut compiler = TypeCompiler::new(order.clone());
    let state = |text: &str, compiler: &mut TypeCompiler| {
        let t = parse_type(text, &order).unwrap();
        compiler.intern(&t).unwrap()
    };

    let cases = [
        // a channel reading ints can stand in where reals were expected
        ("?int", "?real"),
        ("?real", "?int"),
        // for output the payload direction reverses
        ("!real", "!int"),
        ("!int", "!real"),
        // an internal choice may offer more options than required
        ("+{mul: !int.?int, neg: !bool.?bool, quit: end}", "+{quit: end}"),
        ("+{quit: end}", "+{mul: !int.?int, neg: !bool.?bool, quit: end}"),
        // an external choice may handle fewer
        ("&{quit: end}", "&{mul: ?int.!int, quit: end}"),
        ("&{mul: ?int.!int, quit: end}", "&{quit: end}"),
        // recursion unfolds transparently
        ("rec X.?int.X", "?int.rec X.?int.X"),
    ];

    let mut ids = Vec::new();
    for (sub, sup) in &cases {
        ids.push((state(sub, &mut compiler), state(sup, &mut compiler)));
    }
    let c = compiler.coalgebra();
    let oracle = brute_force_relation(c, RelationKind::Sim);
    for ((sub, sup), (a, b)) in cases.iter().zip(&ids) {
        let witness = decide_similar(c, a, b).unwrap();
        let agreed = oracle.contains(&(a.clone(), b.clone())) == witness.verdict;
        println!(
            "{:<55} {:<5} (oracle agrees: {agreed})",
            format!("{sub}  <=  {sup}"),
            witness.verdict
        );
        assert!(agreed);
    }
}
