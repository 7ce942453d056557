//! Session protocols as states of finite coalgebras.
//!
//! A session type describes the conversation allowed on one endpoint of a
//! channel. This crate represents such protocols as *session coalgebras*:
//! finite labelled state systems whose transitions carry payload types
//! (data) and protocol continuations. On top of that encoding it decides
//! the coinductive relations of the theory — type equivalence
//! (bisimilarity), duality, subtyping (similarity) and parallelizability —
//! and typechecks session pi-calculus processes whose channels are typed
//! by coalgebra states.
//!
//! The pieces:
//!
//! * [`coalgebra`] — validated state tables, reachability closures, dual
//!   closure, the basic-type preorder.
//! * [`types`] — the session type grammar, contractivity/closedness
//!   checks, unfolding, and compilation of types into coalgebra states.
//! * [`relations`] — worklist deciders for bisimilarity, duality,
//!   similarity, parallelizability, with checkable witnesses.
//! * [`gfp`] — brute-force greatest-fixpoint computation of the same
//!   relations, used as an independent oracle in tests.
//! * [`process`] / [`reduce`] — the annotated session pi-calculus,
//!   structural congruence and a reduction interpreter.
//! * [`check`] — algorithmic type checking with context difference, plus
//!   an exhaustive declarative oracle with context splitting.
//! * [`json`] / [`dot`] — the coalgebra exchange format and Graphviz
//!   output.
//!
//! Runnable walkthroughs live in `examples/`; the `sct` binary exposes the
//! same functionality on the command line.

pub mod check;
pub mod cli;
pub mod coalgebra;
pub mod dot;
pub mod gfp;
pub mod json;
pub mod process;
pub mod reduce;
pub mod relations;
pub mod types;

pub use check::{
    check_subsumption_admissible, context_difference, is_unrestricted, split_contexts, CheckError,
    CheckReport, Checker, TypingContext,
};
pub use coalgebra::{
    validate_coalgebra, BasicOrder, CoalgebraError, CoalgebraTable, ContKey, Operation, Polarity,
    SessionCoalgebra, StateId, StateLabel, TransitionKey,
};
pub use dot::to_dot;
pub use gfp::{brute_force_parallelizable, brute_force_relation};
pub use json::{coalgebra_from_json, coalgebra_to_json};
pub use process::{erase, free_names, parse_process, Process, Value};
pub use reduce::{normalize, reduce_step, run, ReductionRule, RunOutcome, StopReason, Successor};
pub use relations::{
    decide_bisimilar, decide_dual, decide_parallelizable, decide_similar, verify_post_fixpoint,
    RelationKind, RelationWitness,
};
pub use types::{parse_type, pretty_type, type_to_coalgebra, unfold, validate_type, TypeCompiler, TypeError, TypeExpr};
