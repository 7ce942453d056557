//! The JSON exchange format: load a coalgebra document, query it, emit it
//! back, and watch the checker bail out on a pure par cycle.
//!
//! ```bash
//! cargo run --example coalgebra_json
//! ```

use sct::{
    coalgebra_from_json, coalgebra_to_json, decide_dual, parse_process, BasicOrder, CheckError,
    Checker, TypingContext,
};

fn main() {
    let c = coalgebra_from_json(include_str!("data/math_server.json")).unwrap();
    println!("loaded {} states", c.len());
    println!("q0 ⊥ s0: {}", decide_dual(&c, &"q0".into(), &"s0".into()).unwrap().verdict);

    // emitted documents re-validate to the same coalgebra
    let text = coalgebra_to_json(&c).to_string();
    let again = coalgebra_from_json(&text).unwrap();
    assert_eq!(c, again);
    println!("round-trip: ok ({} bytes)", text.len());

    // T_end loops through par states only: it permits no interaction, and
    // the checker detects the cycle instead of unpacking forever
    let one_shot = coalgebra_from_json(include_str!("data/one_shot.json")).unwrap();
    let mut checker = Checker::with_coalgebra(one_shot);
    let mut ctx = TypingContext::new();
    ctx.bind("x", "T_end".into()).unwrap();

    let touches = parse_process("x?(z:int).0", &BasicOrder::standard()).unwrap();
    let report = checker.algo_check(&ctx, &touches);
    assert!(matches!(report.error, Some(CheckError::ParCycle { .. })));
    println!("reading on a par cycle: {}", report.error.unwrap());

    let ignores = parse_process("0", &BasicOrder::standard()).unwrap();
    let report = checker.algo_check(&ctx, &ignores);
    println!("never touching it:      verdict {}", report.verdict);
}
