//! Duality of protocols, including the recursive delegation case where the
//! naive polarity flip goes wrong.
//!
//! `T = rec X.?X.X` receives channels of its own type forever. Its dual
//! must *send* channels of type `T` — not of the flipped type — so the
//! correct dual is `U = rec X.!(rec X.?X.X).X`, while `rec X.!X.X` is not
//! dual to `T`.
//!
//! ```bash
//! cargo run --example duality
//! ```

use sct::{decide_bisimilar, decide_dual, parse_type, BasicOrder, TypeCompiler};

fn main() {
    let order = BasicOrder::standard();
    let mut compiler = TypeCompiler::new(order.clone());
    let state = |text: &str, compiler: &mut TypeCompiler| {
        let t = parse_type(text, &order).unwrap();
        compiler.intern(&t).unwrap()
    };

    let t = state("rec X.?X.X", &mut compiler);
    let u = state("rec X.!(rec X.?X.X).X", &mut compiler);
    let naive = state("rec X.!X.X", &mut compiler);
    let c = compiler.coalgebra();

    println!("T ⊥ U:           {}", decide_dual(c, &t, &u).unwrap().verdict);
    let w = decide_dual(c, &t, &naive).unwrap();
    println!("T ⊥ rec X.!X.X:  {} (failing pair {:?})", w.verdict, w.failure);

    // the server/client pair: the dual closure of the server's root is
    // behaviourally the client protocol
    let server = state("rec X.&{mul: ?int.?int.!int.X, neg: ?bool.!bool.X, quit: end}", &mut compiler);
    let client = state("rec X.+{mul: !int.!int.?int.X, neg: !bool.?bool.X, quit: end}", &mut compiler);
    let c = compiler.coalgebra();
    println!("server ⊥ client: {}", decide_dual(c, &server, &client).unwrap().verdict);

    let (extended, server_dual) = c.dual_closure(&server).unwrap();
    let bisim = decide_bisimilar(&extended, &server_dual, &client).unwrap();
    println!("dual closure of the server ~ client: {}", bisim.verdict);

    // dualizing twice returns the original state
    let (extended2, back) = extended.dual_closure(&server_dual).unwrap();
    println!("dual of the dual is the server again: {}", back == server);
    assert_eq!(extended2.len(), extended.len());
}
