//! The mathematical-server protocol as a session coalgebra.
//!
//! Builds the nine-state coalgebra for
//! `rec X.&{mul: ?int.?int.!int.X, neg: ?bool.!bool.X, quit: end}`
//! by hand, validates it, inspects reachability closures and renders it as
//! Graphviz DOT.
//!
//! ```bash
//! cargo run --example math_server
//! ```

use sct::coalgebra::{BasicOrder, CoalgebraTable, Polarity};
use sct::{to_dot, StateId};

fn main() {
    let mut table = CoalgebraTable::new(BasicOrder::standard());
    table.branch("q0", Polarity::In, [("mul", "q1"), ("neg", "q4"), ("quit", "q6")]);
    table.com("q1", Polarity::In, "qint", "q2");
    table.com("q2", Polarity::In, "qint", "q3");
    table.com("q3", Polarity::Out, "qint", "q0");
    table.com("q4", Polarity::In, "qbool", "q5");
    table.com("q5", Polarity::Out, "qbool", "q0");
    table.end("q6");
    table.basic("qint", "int");
    table.basic("qbool", "bool");
    let coalgebra = table.validate().expect("the server protocol is well-formed");
    println!("validated: {} states", coalgebra.len());

    let root = StateId::from("q0");
    let reachable = coalgebra.generated_subcoalgebra(&root).unwrap();
    println!("generated subcoalgebra of q0: {} states", reachable.len());

    // following continuations only skips the payload (data) states
    let protocol_states = coalgebra.continuation_closure(&root).unwrap();
    let skipped: Vec<_> = reachable.difference(&protocol_states).collect();
    println!("continuation closure of q0: {} states", protocol_states.len());
    println!("data states not in it: {skipped:?}");

    println!("\n{}", to_dot(&coalgebra, Some(&[root])).unwrap());
}
