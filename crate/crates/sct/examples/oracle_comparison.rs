//! The algorithmic checker against the declarative oracle.
//!
//! The declarative rules guess a context split at every parallel
//! composition; the oracle tries all of them. The algorithm instead
//! threads one context through the components and checks its leftover
//! output. Both must agree on every judgement.
//!
//! ```bash
//! cargo run --example oracle_comparison
//! ```

use sct::{parse_process, parse_type, BasicOrder, Checker, TypingContext};

fn main() {
    let order = BasicOrder::standard();
    let contexts = [
        vec![],
        vec![("x", "?int")],
        vec![("x", "un?int")],
        vec![("x", "!int"), ("v", "int")],
        vec![("x", "?int"), ("y", "?int")],
    ];
    let processes = [
        "0",
        "x?(z:int).0",
        "x!(v).0",
        "x?(z:int).0 | x?(z:int).0",
        "x?(z:int).0 | y?(z:int).0",
        "*x?(z:int).0",
        "new(a,b:!int) (a!(v).0 | b?(z:int).0)",
        "new(a,b:!int) (a!(v).0 | 0)",
    ];

    let mut agreements = 0;
    for ctx_pairs in &contexts {
        let mut checker = Checker::new(order.clone());
        let mut ctx = TypingContext::new();
        for (var, ty) in ctx_pairs {
            let t = parse_type(ty, &order).unwrap();
            let state = checker.intern_type(&t).unwrap();
            ctx.bind(var, state).unwrap();
        }
        checker.bind_ambient_bools(&mut ctx).unwrap();
        for text in &processes {
            let p = parse_process(text, &order).unwrap();
            let algo = checker.algo_check(&ctx, &p).verdict;
            let oracle = checker.declarative_check(&ctx, &p).unwrap();
            let mark = if algo == oracle { "=" } else { "DISAGREE" };
            println!(
                "[{}] {mark} algo={algo:<5} oracle={oracle:<5}  {text}",
                ctx_pairs
                    .iter()
                    .map(|(v, t)| format!("{v}: {t}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            assert_eq!(algo, oracle);
            agreements += 1;
        }
    }
    println!("\n{agreements} judgements, full agreement");
}
