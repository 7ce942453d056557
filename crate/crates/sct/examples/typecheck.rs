//! Algorithmic type checking of session pi-calculus processes.
//!
//! Walks through the standard judgements: linear channels must be used to
//! completion, unrestricted channels may be shared, restrictions bind two
//! endpoints at dual types, and a shareable channel allowing one read per
//! copy admits parallel and replicated readers but not a sequential chain.
//!
//! ```bash
//! cargo run --example typecheck
//! ```

use sct::{coalgebra_from_json, parse_process, parse_type, BasicOrder, Checker, TypingContext};

fn show(checker: &mut Checker, ctx: &TypingContext, text: &str) {
    let p = parse_process(text, &BasicOrder::standard()).unwrap();
    let report = checker.algo_check(ctx, &p);
    let verdict = if report.verdict { "accept" } else { "reject" };
    let detail = report.error.map(|e| format!("  [{e}]")).unwrap_or_default();
    println!("  {text:<42} {verdict}{detail}");
}

fn main() {
    let order = BasicOrder::standard();
    let mut checker = Checker::new(order.clone());
    let ctx_with = |checker: &mut Checker, var: &str, ty: &str| {
        let t = parse_type(ty, &order).unwrap();
        let state = checker.intern_type(&t).unwrap();
        let mut ctx = TypingContext::new();
        ctx.bind(var, state).unwrap();
        ctx
    };

    println!("x: ?int");
    let ctx = ctx_with(&mut checker, "x", "?int");
    show(&mut checker, &ctx, "0");
    show(&mut checker, &ctx, "x?(z:int).0");
    show(&mut checker, &ctx, "x?(z:int).0 | x?(z:int).0");

    println!("x: un?int");
    let ctx = ctx_with(&mut checker, "x", "un?int");
    show(&mut checker, &ctx, "x?(z:int).0 | x?(z:int).0");

    println!("v: int");
    let ctx = ctx_with(&mut checker, "v", "int");
    show(&mut checker, &ctx, "new(x,y:?int) (x?(z:int).0 | y!(v).0)");

    // one read per copy, any number of copies
    println!("x: T  (par -> ?int -> par self-loop, from a JSON coalgebra)");
    let c = coalgebra_from_json(include_str!("data/one_shot.json")).unwrap();
    let mut checker = Checker::with_coalgebra(c);
    let mut ctx = TypingContext::new();
    ctx.bind("x", "T".into()).unwrap();
    show(&mut checker, &ctx, "x?(y1:int).x?(y2:int).x?(y3:int).0");
    show(&mut checker, &ctx, "x?(y1:int).0 | x?(y2:int).0 | x?(y3:int).0");
    show(&mut checker, &ctx, "*x?(y:int).0");
}
