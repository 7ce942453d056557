//! Command-line front end.
//!
//! Exit codes: 0 for accept/true, 1 for reject/false, 2 for usage, parse
//! or validation errors. Human or JSON output goes to stdout, diagnostics
//! to stderr.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::check::{CheckError, CheckReport, Checker, TypingContext};
use crate::coalgebra::{BasicOrder, SessionCoalgebra, StateId};
use crate::json::{coalgebra_from_json, coalgebra_to_json};
use crate::process::parse_process;
use crate::reduce::{run as run_process, StopReason};
use crate::relations::{
    decide_bisimilar, decide_dual, decide_parallelizable, decide_similar, RelationWitness,
};
use crate::types::{lex, parse_type, pretty_type, unfold, validate_type, Tok, TypeCompiler, TypeError, TypeParser};

#[derive(Parser)]
#[command(name = "sct", version, about = "session coalgebra tools")]
struct Cli {
    /// basic-type preorder config: lines of `a <= b`
    #[arg(long, global = true, value_name = "FILE")]
    basic_order: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// do not bind `true`/`false` as ambient bool channels when checking
    #[arg(long, global = true)]
    no_ambient_bools: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RelKindArg {
    Bisim,
    Dual,
    Sub,
    Par,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, render or unfold session types
    Type {
        #[command(subcommand)]
        action: TypeAction,
    },
    /// Decide a coinductive relation between two states (or one, for par)
    Rel {
        #[arg(long, value_enum)]
        kind: RelKindArg,
        /// first type (inline or a file), unless --coalgebra is used
        subject: Option<String>,
        /// second type, for the binary relations
        other: Option<String>,
        /// JSON coalgebra supplying the states instead of type syntax
        #[arg(long, value_name = "FILE")]
        coalgebra: Option<PathBuf>,
        /// first state id in the coalgebra file
        #[arg(long)]
        state: Option<String>,
        /// second state id in the coalgebra file
        #[arg(long)]
        state2: Option<String>,
    },
    /// Typecheck a process file with the algorithmic rules
    Check {
        /// context: comma-separated `x: TYPE` (or `x: @state` with --coalgebra)
        #[arg(long)]
        context: Option<String>,
        /// JSON coalgebra providing ambient states
        #[arg(long, value_name = "FILE")]
        coalgebra: Option<PathBuf>,
        file: PathBuf,
    },
    /// Typecheck with the exhaustive declarative oracle
    Oracle {
        #[arg(long)]
        context: Option<String>,
        file: PathBuf,
    },
    /// Reduce a process, printing the rule fired at each step
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 64)]
        max_steps: usize,
        #[arg(long, default_value_t = 8)]
        max_repl: usize,
        /// pick successors pseudo-randomly from this seed instead of
        /// taking the least one
        #[arg(long, value_name = "SEED")]
        random: Option<u64>,
    },
}

/// Run the CLI; returns the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {failure}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<i32, String> {
    let order = match &cli.basic_order {
        Some(path) => {
            let text = read(path)?;
            BasicOrder::parse(&text).map_err(|e| e.to_string())?
        }
        None => BasicOrder::standard(),
    };
    match &cli.command {
        Command::Type { action } => run_type(action, &order, cli.format),
        Command::Rel { kind, subject, other, coalgebra, state, state2 } => run_rel(
            *kind,
            subject.as_deref(),
            other.as_deref(),
            coalgebra.as_deref(),
            state.as_deref(),
            state2.as_deref(),
            &order,
            cli.format,
        ),
        Command::Check { context, coalgebra, file } => run_check(
            context.as_deref(),
            coalgebra.as_deref(),
            file,
            &order,
            cli.format,
            !cli.no_ambient_bools,
        ),
        Command::Oracle { context, file } => run_oracle(
            context.as_deref(),
            file,
            &order,
            cli.format,
            !cli.no_ambient_bools,
        ),
        Command::Run { file, max_steps, max_repl, random } => {
            run_run(file, *max_steps, *max_repl, *random, &order, cli.format)
        }
    }
}

#[derive(Subcommand)]
enum TypeAction {
    /// Parse and validate; print the canonical form (and the compiled
    /// coalgebra as JSON)
    Parse { input: String },
    /// Compile to a coalgebra and print Graphviz DOT
    Dot { input: String },
    /// Print the unfolding
    Unfold { input: String },
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Inline text or a path to a file holding it.
fn inline_or_file(input: &str) -> Result<String, String> {
    let path = Path::new(input);
    if path.exists() && path.is_file() {
        read(path)
    } else {
        Ok(input.to_owned())
    }
}

fn parse_validated_type(input: &str, order: &BasicOrder) -> Result<crate::types::TypeExpr, String> {
    let text = inline_or_file(input)?;
    let t = parse_type(text.trim(), order).map_err(|e| e.to_string())?;
    validate_type(&t).map_err(|e| e.to_string())?;
    Ok(t)
}

fn run_type(action: &TypeAction, order: &BasicOrder, format: Format) -> Result<i32, String> {
    match action {
        TypeAction::Parse { input } => {
            let t = parse_validated_type(input, order)?;
            let mut compiler = TypeCompiler::new(order.clone());
            let root = compiler.intern(&t).map_err(|e| e.to_string())?;
            match format {
                Format::Human => println!("{}", pretty_type(&t)),
                Format::Json => {
                    let doc = json!({
                        "pretty": pretty_type(&t),
                        "root": root.to_string(),
                        "coalgebra": coalgebra_to_json(compiler.coalgebra()),
                    });
                    println!("{doc}");
                }
            }
            Ok(0)
        }
        TypeAction::Dot { input } => {
            let t = parse_validated_type(input, order)?;
            let mut compiler = TypeCompiler::new(order.clone());
            let root = compiler.intern(&t).map_err(|e| e.to_string())?;
            let dot = crate::dot::to_dot(compiler.coalgebra(), Some(&[root]))
                .map_err(|e| e.to_string())?;
            print!("{dot}");
            Ok(0)
        }
        TypeAction::Unfold { input } => {
            let t = parse_validated_type(input, order)?;
            let u = unfold(&t);
            match format {
                Format::Human => println!("{}", pretty_type(&u)),
                Format::Json => println!(
                    "{}",
                    json!({"input": pretty_type(&t), "unfolded": pretty_type(&u)})
                ),
            }
            Ok(0)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_rel(
    kind: RelKindArg,
    subject: Option<&str>,
    other: Option<&str>,
    coalgebra: Option<&Path>,
    state: Option<&str>,
    state2: Option<&str>,
    order: &BasicOrder,
    format: Format,
) -> Result<i32, String> {
    let binary = !matches!(kind, RelKindArg::Par);
    let (c, left, right): (SessionCoalgebra, StateId, Option<StateId>) = match coalgebra {
        Some(path) => {
            let c = coalgebra_from_json(&read(path)?).map_err(|e| e.to_string())?;
            let left = StateId::new(state.ok_or("--coalgebra requires --state")?);
            if !c.contains(&left) {
                return Err(format!("unknown state {left}"));
            }
            let right = match (binary, state2) {
                (true, Some(s)) => {
                    let id = StateId::new(s);
                    if !c.contains(&id) {
                        return Err(format!("unknown state {id}"));
                    }
                    Some(id)
                }
                (true, None) => return Err("this relation needs --state2".to_owned()),
                (false, _) => None,
            };
            (c, left, right)
        }
        None => {
            let subject = subject.ok_or("expected a type argument or --coalgebra")?;
            let t1 = parse_validated_type(subject, order)?;
            let mut compiler = TypeCompiler::new(order.clone());
            let left = compiler.intern(&t1).map_err(|e| e.to_string())?;
            let right = if binary {
                let other = other.ok_or("this relation needs two types")?;
                let t2 = parse_validated_type(other, order)?;
                Some(compiler.intern(&t2).map_err(|e| e.to_string())?)
            } else {
                None
            };
            (compiler.into_coalgebra(), left, right)
        }
    };
    let witness: RelationWitness = match kind {
        RelKindArg::Bisim => {
            decide_bisimilar(&c, &left, &right.clone().unwrap()).map_err(|e| e.to_string())?
        }
        RelKindArg::Dual => {
            decide_dual(&c, &left, &right.clone().unwrap()).map_err(|e| e.to_string())?
        }
        RelKindArg::Sub => {
            decide_similar(&c, &left, &right.clone().unwrap()).map_err(|e| e.to_string())?
        }
        RelKindArg::Par => decide_parallelizable(&c, &left).map_err(|e| e.to_string())?,
    };
    match format {
        Format::Human => {
            if witness.verdict {
                println!("true ({} pairs in the witness relation)", witness.relation.len());
            } else {
                let (a, b) = witness.failure.clone().expect("failure pair");
                println!("false (failing pair: {a} vs {b})");
            }
        }
        Format::Json => {
            let relation: Vec<Json> = witness
                .relation
                .iter()
                .map(|(a, b)| json!([a.to_string(), b.to_string()]))
                .collect();
            let failure = witness
                .failure
                .as_ref()
                .map(|(a, b)| json!([a.to_string(), b.to_string()]))
                .unwrap_or(Json::Null);
            println!(
                "{}",
                json!({"verdict": witness.verdict, "relation": relation, "failure": failure})
            );
        }
    }
    Ok(if witness.verdict { 0 } else { 1 })
}

/// Context entries: `x: TYPE` or `x: @state`.
fn parse_context(
    text: &str,
    order: &BasicOrder,
) -> Result<Vec<(String, CtxEntry)>, TypeError> {
    let toks = lex(text)?;
    let mut parser = TypeParser::new(&toks, order);
    let mut out = Vec::new();
    if parser.peek().is_none() {
        return Ok(out);
    }
    loop {
        let var = parser.ident("a variable name")?;
        parser.expect(Tok::Colon)?;
        let entry = if parser.eat(&Tok::At) {
            CtxEntry::State(parser.ident("a state id")?)
        } else {
            let t = parser.ty()?;
            validate_type(&t)?;
            CtxEntry::Type(t)
        };
        out.push((var, entry));
        if !parser.eat(&Tok::Comma) {
            break;
        }
    }
    if parser.peek().is_some() {
        return Err(parser.err("trailing input after context"));
    }
    Ok(out)
}

enum CtxEntry {
    Type(crate::types::TypeExpr),
    State(String),
}

fn build_checker_and_context(
    context: Option<&str>,
    coalgebra: Option<&Path>,
    order: &BasicOrder,
    ambient_bools: bool,
) -> Result<(Checker, TypingContext), String> {
    let mut checker = match coalgebra {
        Some(path) => {
            let c = coalgebra_from_json(&read(path)?).map_err(|e| e.to_string())?;
            Checker::with_coalgebra(c)
        }
        None => Checker::new(order.clone()),
    };
    let mut ctx = TypingContext::new();
    if let Some(text) = context {
        let entries =
            parse_context(text, checker.coalgebra().basic_order()).map_err(|e| e.to_string())?;
        for (var, entry) in entries {
            let state = match entry {
                CtxEntry::Type(t) => checker.intern_type(&t).map_err(|e| e.to_string())?,
                CtxEntry::State(id) => {
                    let id = StateId::new(id);
                    if !checker.coalgebra().contains(&id) {
                        return Err(format!("unknown state {id}"));
                    }
                    id
                }
            };
            ctx.bind(&var, state).map_err(|e| e.to_string())?;
        }
    }
    if ambient_bools {
        checker.bind_ambient_bools(&mut ctx).map_err(|e| e.to_string())?;
    }
    Ok((checker, ctx))
}

fn error_kind(e: &CheckError) -> &'static str {
    match e {
        CheckError::UnknownVariable(_) => "UnknownVariable",
        CheckError::PolarityMismatch { .. } => "PolarityMismatch",
        CheckError::LabelNotOffered { .. } => "LabelNotOffered",
        CheckError::MissingBranches { .. } => "MissingBranches",
        CheckError::SubtypeFailure { .. } => "SubtypeFailure",
        CheckError::LinearViolation(_) => "LinearViolation",
        CheckError::BranchContextMismatch { .. } => "BranchContextMismatch",
        CheckError::NotParallelizable { .. } => "NotParallelizable",
        CheckError::ParCycle { .. } => "ParCycle",
        CheckError::DualUndefined { .. } => "DualUndefined",
        CheckError::ResidualLinear(_) => "ResidualLinear",
        CheckError::AnnotationMissing(_) => "AnnotationMissing",
        CheckError::ShadowedVariable(_) => "ShadowedVariable",
        CheckError::OracleTooLarge(_) => "OracleTooLarge",
        CheckError::Type(_) => "TypeError",
        CheckError::Coalgebra(_) => "CoalgebraError",
    }
}

/// Errors of the checking machinery itself (rather than a semantic
/// rejection of the process) map to exit code 2.
fn is_usage_error(e: &CheckError) -> bool {
    matches!(
        e,
        CheckError::Type(_)
            | CheckError::Coalgebra(_)
            | CheckError::AnnotationMissing(_)
            | CheckError::OracleTooLarge(_)
            | CheckError::ShadowedVariable(_)
    )
}

fn report_json(report: &CheckReport) -> Json {
    let output = report
        .output
        .as_ref()
        .map(|ctx| {
            let m: BTreeMap<String, String> =
                ctx.iter().map(|(v, s)| (v.clone(), s.to_string())).collect();
            json!(m)
        })
        .unwrap_or(Json::Null);
    let trace: Vec<Json> = report
        .trace
        .iter()
        .map(|s| {
            json!({
                "rule": s.rule,
                "subject": s.subject,
                "before": s.before.as_ref().map(|x| x.to_string()),
                "after": s.after.as_ref().map(|x| x.to_string()),
            })
        })
        .collect();
    let error = report
        .error
        .as_ref()
        .map(|e| json!({"kind": error_kind(e), "message": e.to_string()}))
        .unwrap_or(Json::Null);
    json!({
        "verdict": if report.verdict { "accept" } else { "reject" },
        "output": output,
        "trace": trace,
        "warnings": report.warnings,
        "error": error,
    })
}

fn run_check(
    context: Option<&str>,
    coalgebra: Option<&Path>,
    file: &Path,
    order: &BasicOrder,
    format: Format,
    ambient_bools: bool,
) -> Result<i32, String> {
    let (mut checker, ctx) = build_checker_and_context(context, coalgebra, order, ambient_bools)?;
    let text = read(file)?;
    let p = parse_process(&text, checker.coalgebra().basic_order()).map_err(|e| e.to_string())?;
    let report = checker.algo_check(&ctx, &p);
    match format {
        Format::Human => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.verdict {
                let out = report.output.as_ref().expect("accepting run has an output");
                if out.is_empty() {
                    println!("accept");
                } else {
                    println!("accept (output {out})");
                }
            } else {
                let e = report.error.as_ref().expect("rejection carries an error");
                println!("reject: {e}");
            }
        }
        Format::Json => println!("{}", report_json(&report)),
    }
    if report.verdict {
        Ok(0)
    } else if report.error.as_ref().is_some_and(is_usage_error) {
        Ok(2)
    } else {
        Ok(1)
    }
}

fn run_oracle(
    context: Option<&str>,
    file: &Path,
    order: &BasicOrder,
    format: Format,
    ambient_bools: bool,
) -> Result<i32, String> {
    let (mut checker, ctx) = build_checker_and_context(context, None, order, ambient_bools)?;
    let text = read(file)?;
    let p = parse_process(&text, checker.coalgebra().basic_order()).map_err(|e| e.to_string())?;
    let verdict = match checker.declarative_check(&ctx, &p) {
        Ok(v) => v,
        Err(e) if is_usage_error(&e) => return Err(e.to_string()),
        Err(_) => false,
    };
    match format {
        Format::Human => println!("{}", if verdict { "accept" } else { "reject" }),
        Format::Json => println!("{}", json!({"verdict": if verdict {"accept"} else {"reject"}})),
    }
    Ok(if verdict { 0 } else { 1 })
}

fn run_run(
    file: &Path,
    max_steps: usize,
    max_repl: usize,
    random: Option<u64>,
    order: &BasicOrder,
    format: Format,
) -> Result<i32, String> {
    let text = read(file)?;
    let p = parse_process(&text, order).map_err(|e| e.to_string())?;
    let outcome = run_process(&p, max_steps, max_repl, random);
    match format {
        Format::Human => {
            for (i, (rule, term)) in outcome.steps.iter().enumerate() {
                println!("{:>3}. {rule:<6} {term}", i + 1);
            }
            match outcome.stop {
                StopReason::Quiescent => println!("quiescent: {}", outcome.finale),
                StopReason::MaxSteps => println!("stopped (max steps): {}", outcome.finale),
                StopReason::ReplBudgetExhausted => {
                    println!("stopped (replication budget): {}", outcome.finale)
                }
            }
        }
        Format::Json => {
            let steps: Vec<Json> = outcome
                .steps
                .iter()
                .map(|(rule, term)| json!({"rule": rule.to_string(), "term": term.to_string()}))
                .collect();
            let stop = match outcome.stop {
                StopReason::Quiescent => "quiescent",
                StopReason::MaxSteps => "max-steps",
                StopReason::ReplBudgetExhausted => "repl-budget",
            };
            println!(
                "{}",
                json!({"steps": steps, "final": outcome.finale.to_string(), "stop": stop})
            );
        }
    }
    Ok(0)
}
