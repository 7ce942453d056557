//! Run the math-server session: a client selects `mul`, sends two
//! integers, reads the result back and quits.
//!
//! ```bash
//! cargo run --example reduction
//! ```

use sct::{parse_process, run, BasicOrder, StopReason};

fn main() {
    let text = include_str!("data/math_session.proc");
    let p = parse_process(text, &BasicOrder::standard()).unwrap();
    println!("initial: {p}\n");
    let outcome = run(&p, 8, 0, None);
    for (i, (rule, term)) in outcome.steps.iter().enumerate() {
        println!("{:>2}. {rule:<6} {term}", i + 1);
    }
    match outcome.stop {
        StopReason::Quiescent => println!("\nquiescent after {} steps", outcome.steps.len()),
        other => println!("\nstopped: {other:?}"),
    }
}
