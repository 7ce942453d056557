//! Which unrestricted protocols are safe to share?
//!
//! A par state can be copied across processes. That is only safe when
//! every copy, whenever it performs an action, acts at the same protocol
//! point: the continuation closure may contain at most one distinct
//! linear state.
//!
//! ```bash
//! cargo run --example parallelizability
//! ```

use sct::{coalgebra_from_json, decide_parallelizable, parse_type, BasicOrder, TypeCompiler};

fn main() {
    let order = BasicOrder::standard();
    let mut compiler = TypeCompiler::new(order.clone());
    let state = |text: &str, compiler: &mut TypeCompiler| {
        let t = parse_type(text, &order).unwrap();
        compiler.intern(&t).unwrap()
    };

    for text in [
        // a service handing out integers to any number of clients
        "rec X.un!int.X",
        // a single unrestricted read: copies either read once or are done
        "un?int",
        // alternating between two distinct reads: a copy cannot know
        // whether it holds the first or the second
        "rec X.un?int.un?int.X",
        // reading and writing alternately: worse
        "rec X.un?int.un!int.X",
    ] {
        let id = state(text, &mut compiler);
        let w = decide_parallelizable(compiler.coalgebra(), &id).unwrap();
        match w.failure {
            None => println!("{text:<28} parallelizable"),
            Some((a, b)) => println!("{text:<28} NOT parallelizable ({a} vs {b})"),
        }
    }

    // A par state looping only through par states acts like `end` but has
    // no syntactic counterpart; it comes from a coalgebra document.
    let doc = include_str!("data/one_shot.json");
    let c = coalgebra_from_json(doc).unwrap();
    for id in ["T", "T_end"] {
        let w = decide_parallelizable(&c, &id.into()).unwrap();
        println!("{id:<28} parallelizable: {}", w.verdict);
    }
}
