//! Structural congruence and the reduction interpreter.
//!
//! `normalize` maps a term to a canonical representative of its congruence
//! class: parallel compositions are flattened into a sorted multiset with
//! inaction units removed, restrictions are hoisted to the front (renaming
//! bound pairs when extending their scope would capture), restriction pairs
//! and the restriction order are canonicalized, a restriction binding
//! nothing that is used disappears, and a plain copy running next to its
//! own replication is folded back into it.
//!
//! `reduce_step` enumerates the one-step successors of a term: under a
//! restriction binding covariables x and y, an output/select on one
//! endpoint meets an input/branch on the other. Replications expose
//! redexes by unfolding into `copy | replication`, bounded per call.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::process::{alpha_eq, free_names, freshen_bound_avoiding, subst_name, Process, ResAnn, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReductionRule {
    RCom,
    RSync,
}

impl fmt::Display for ReductionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionRule::RCom => f.write_str("r-com"),
            ReductionRule::RSync => f.write_str("r-sync"),
        }
    }
}

/// One possible next term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Successor {
    pub term: Process,
    pub rule: ReductionRule,
    /// whether reaching this successor required unfolding a replication
    pub used_repl: bool,
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

struct Header {
    x: String,
    y: String,
    ann: Option<ResAnn>,
}

struct Region {
    headers: Vec<Header>,
    components: Vec<Process>,
}

impl Region {
    fn free_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.components {
            out.extend(free_names(c));
        }
        for h in &self.headers {
            out.remove(&h.x);
            out.remove(&h.y);
        }
        out
    }

    fn binders(&self) -> BTreeSet<String> {
        self.headers
            .iter()
            .flat_map(|h| [h.x.clone(), h.y.clone()])
            .collect()
    }

    fn rename_binder(&mut self, from: &str, avoid: &BTreeSet<String>) {
        let mut used: BTreeSet<String> = avoid.clone();
        used.extend(self.free_names());
        used.extend(self.binders());
        let fresh = fresh_name(from, &used);
        for h in &mut self.headers {
            if h.x == from {
                h.x = fresh.clone();
            }
            if h.y == from {
                h.y = fresh.clone();
            }
        }
        for c in &mut self.components {
            *c = subst_name(c, from, &Value::Var(fresh.clone()));
        }
    }
}

fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    let mut i = 1usize;
    loop {
        let candidate = format!("{base}_{i}");
        if !used.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

/// Merge two sibling regions, extending each restriction's scope over the
/// other side. Scope extension is only valid when the bound names are not
/// free on the other side, so clashing binders get renamed.
fn merge(mut a: Region, mut b: Region) -> Region {
    let free_b = b.free_names();
    let binders_b = b.binders();
    let avoid: BTreeSet<String> = free_b.union(&binders_b).cloned().collect();
    for name in a.binders() {
        if avoid.contains(&name) {
            a.rename_binder(&name, &avoid);
        }
    }
    let free_a = a.free_names();
    let binders_a = a.binders();
    let avoid: BTreeSet<String> = free_a.union(&binders_a).cloned().collect();
    for name in b.binders() {
        if avoid.contains(&name) {
            b.rename_binder(&name, &avoid);
        }
    }
    a.headers.extend(b.headers);
    a.components.extend(b.components);
    a
}

fn to_region(p: &Process) -> Region {
    match p {
        Process::Par(l, r) => merge(to_region(l), to_region(r)),
        Process::Res { x, y, ann, body } => {
            let mut inner = to_region(body);
            // the inner binders were freshened at parse; still, guard
            // against a clash introduced programmatically
            for h in &inner.headers {
                debug_assert!(h.x != *x && h.y != *x && h.x != *y && h.y != *y);
            }
            inner.headers.insert(0, Header { x: x.clone(), y: y.clone(), ann: ann.clone() });
            inner
        }
        other => Region { headers: Vec::new(), components: vec![normalize_leaf(other)] },
    }
}

/// Normalize a non-par, non-res construct by normalizing its children.
fn normalize_leaf(p: &Process) -> Process {
    match p {
        Process::Inact => Process::Inact,
        Process::Output { chan, value, cont } => Process::Output {
            chan: chan.clone(),
            value: value.clone(),
            cont: Box::new(normalize(cont)),
        },
        Process::Input { chan, bind, ann, cont } => Process::Input {
            chan: chan.clone(),
            bind: bind.clone(),
            ann: ann.clone(),
            cont: Box::new(normalize(cont)),
        },
        Process::Branch { chan, arms } => Process::Branch {
            chan: chan.clone(),
            arms: arms.iter().map(|(l, arm)| (l.clone(), normalize(arm))).collect(),
        },
        Process::Select { chan, label, cont } => Process::Select {
            chan: chan.clone(),
            label: label.clone(),
            cont: Box::new(normalize(cont)),
        },
        Process::Repl(b) => Process::Repl(Box::new(normalize(b))),
        Process::Par(_, _) | Process::Res { .. } => unreachable!("handled by to_region"),
    }
}

fn rebuild(mut region: Region) -> Process {
    // drop inaction units
    region.components.retain(|c| *c != Process::Inact);
    fold_replication_copies(&mut region.components);
    if region.components.is_empty() {
        return Process::Inact;
    }
    // a restriction neither endpoint of which is used binds nothing
    let used: BTreeSet<String> =
        region.components.iter().flat_map(free_names).collect();
    region
        .headers
        .retain(|h| used.contains(&h.x) || used.contains(&h.y));
    // canonical restriction pair order; the annotation marker follows
    for h in &mut region.headers {
        if h.y < h.x {
            std::mem::swap(&mut h.x, &mut h.y);
            if let Some(ann) = &mut h.ann {
                ann.on_second = !ann.on_second;
            }
        }
    }
    region.headers.sort_by(|a, b| (&a.x, &a.y).cmp(&(&b.x, &b.y)));
    // sorted parallel multiset, right-nested
    let mut texts: Vec<(String, Process)> = region
        .components
        .into_iter()
        .map(|c| (c.to_string(), c))
        .collect();
    texts.sort_by(|a, b| a.0.cmp(&b.0));
    let mut it = texts.into_iter().map(|(_, c)| c).rev();
    let mut body = it.next().expect("non-empty");
    for c in it {
        body = Process::par(c, body);
    }
    for h in region.headers.into_iter().rev() {
        body = Process::Res { x: h.x, y: h.y, ann: h.ann, body: Box::new(body) };
    }
    body
}

/// Fold running copies back into their replication: `P | !P` becomes `!P`.
/// A copy whose body is a parallel composition sits in the multiset as its
/// flattened components, so matching looks for a sub-multiset; copies are
/// recognized up to renaming of bound names, since unfolds freshen their
/// binders. Bodies carrying their own restriction are left alone (their
/// copies hoist as renamed restrictions, which this rewriting does not
/// chase).
fn fold_replication_copies(components: &mut Vec<Process>) {
    'rescan: loop {
        for host in 0..components.len() {
            let Process::Repl(body) = &components[host] else { continue };
            let (headers, parts) = peel(body);
            if headers.is_empty() && consume_copy(components, host, &parts) {
                continue 'rescan;
            }
        }
        return;
    }
}

/// Remove one copy of `parts` (other than the host replication itself)
/// from the component multiset, if present.
fn consume_copy(components: &mut Vec<Process>, host: usize, parts: &[Process]) -> bool {
    let mut taken: Vec<usize> = Vec::new();
    for piece in parts {
        let found = components
            .iter()
            .enumerate()
            .find(|(i, c)| *i != host && !taken.contains(i) && alpha_eq(c, piece));
        match found {
            Some((i, _)) => taken.push(i),
            None => return false,
        }
    }
    taken.sort_unstable();
    for i in taken.into_iter().rev() {
        components.remove(i);
    }
    true
}

/// Canonical representative of the structural congruence class.
pub fn normalize(p: &Process) -> Process {
    rebuild(to_region(p))
}

// ---------------------------------------------------------------------------
// Reduction
// ---------------------------------------------------------------------------

fn peel(p: &Process) -> (Vec<Header>, Vec<Process>) {
    let mut headers = Vec::new();
    let mut cur = p.clone();
    loop {
        match cur {
            Process::Res { x, y, ann, body } => {
                headers.push(Header { x, y, ann });
                cur = *body;
            }
            Process::Par(_, _) => {
                let mut components = Vec::new();
                let mut stack = vec![cur];
                while let Some(q) = stack.pop() {
                    if let Process::Par(l, r) = q {
                        stack.push(*r);
                        stack.push(*l);
                    } else {
                        components.push(q);
                    }
                }
                // undo the stack reversal effect: stack pushed l last so
                // components come out left-to-right already
                return (headers, components);
            }
            other => return (headers, vec![other]),
        }
    }
}

/// Rebuild a term literally (no canonicalization) for renormalization.
fn raw_term(headers: &[Header], components: Vec<Process>) -> Process {
    let mut it = components.into_iter().rev();
    let mut body = it.next().unwrap_or(Process::Inact);
    for c in it {
        body = Process::par(c, body);
    }
    for h in headers.iter().rev() {
        body = Process::Res {
            x: h.x.clone(),
            y: h.y.clone(),
            ann: h.ann.clone(),
            body: Box::new(body),
        };
    }
    body
}

fn matching_endpoints(h: &Header, a: &str, b: &str) -> bool {
    (a == h.x && b == h.y) || (a == h.y && b == h.x)
}

fn enumerate_redexes(headers: &[Header], components: &[Process]) -> Vec<(Process, ReductionRule)> {
    let mut out = Vec::new();
    for h in headers {
        for (i, sender) in components.iter().enumerate() {
            for (j, receiver) in components.iter().enumerate() {
                if i == j {
                    continue;
                }
                match (sender, receiver) {
                    (
                        Process::Output { chan: a, value, cont: p },
                        Process::Input { chan: b, bind, cont: q, .. },
                    ) if matching_endpoints(h, a, b) => {
                        let mut next: Vec<Process> = Vec::new();
                        for (k, c) in components.iter().enumerate() {
                            if k == i {
                                next.push((**p).clone());
                            } else if k == j {
                                next.push(subst_name(q, bind, value));
                            } else {
                                next.push(c.clone());
                            }
                        }
                        out.push((normalize(&raw_term(headers, next)), ReductionRule::RCom));
                    }
                    (
                        Process::Select { chan: a, label, cont: p },
                        Process::Branch { chan: b, arms },
                    ) if matching_endpoints(h, a, b) => {
                        if let Some(chosen) = arms.get(label) {
                            let mut next: Vec<Process> = Vec::new();
                            for (k, c) in components.iter().enumerate() {
                                if k == i {
                                    next.push((**p).clone());
                                } else if k == j {
                                    next.push(chosen.clone());
                                } else {
                                    next.push(c.clone());
                                }
                            }
                            out.push((normalize(&raw_term(headers, next)), ReductionRule::RSync));
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    out
}

/// All one-step successors of `p`, modulo structural congruence, sorted by
/// their printed form. Each replication in the term may be unfolded at most
/// `repl_unfolds` times (capped at two, the most one communication step can
/// use) to expose redexes; successors that needed an unfold are marked.
pub fn reduce_step(p: &Process, repl_unfolds: usize) -> Vec<Successor> {
    let n = normalize(p);
    let (headers, components) = peel(&n);
    let plain = enumerate_redexes(&headers, &components);
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out: Vec<Successor> = Vec::new();
    for (term, rule) in plain {
        if seen.insert(format!("{rule}:{term}")) {
            out.push(Successor { term, rule, used_repl: false });
        }
    }
    let copies = repl_unfolds.min(2);
    if copies > 0 && components.iter().any(|c| matches!(c, Process::Repl(_))) {
        // unfold every replication: !P stands next to `copies` copies of P.
        // The copies are flattened in (hoisting any restrictions they
        // carry) without renormalizing, which would just fold them back.
        let mut avoid: BTreeSet<String> = free_names(&n);
        for c in &components {
            avoid.extend(free_names(c));
        }
        for h in &headers {
            avoid.insert(h.x.clone());
            avoid.insert(h.y.clone());
        }
        let mut region = Region {
            headers: headers
                .iter()
                .map(|h| Header { x: h.x.clone(), y: h.y.clone(), ann: h.ann.clone() })
                .collect(),
            components: components.clone(),
        };
        for c in &components {
            if let Process::Repl(body) = c {
                for _ in 0..copies {
                    // the copy stays under the existing restrictions; its
                    // own binders were freshened against everything in
                    // scope, so its region folds in without renaming
                    let copy = freshen_bound_avoiding(body, &avoid);
                    avoid.extend(free_names(&copy));
                    let rc = to_region(&copy);
                    region.headers.extend(rc.headers);
                    region.components.extend(rc.components);
                }
            }
        }
        for (term, rule) in enumerate_redexes(&region.headers, &region.components) {
            if seen.insert(format!("{rule}:{term}")) {
                out.push(Successor { term, rule, used_repl: true });
            }
        }
    }
    out.sort_by(|a, b| {
        (a.term.to_string(), a.rule).cmp(&(b.term.to_string(), b.rule))
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Quiescent,
    MaxSteps,
    ReplBudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub steps: Vec<(ReductionRule, Process)>,
    pub finale: Process,
    pub stop: StopReason,
}

/// Iterate `reduce_step`, choosing the printed-least successor each step
/// (or a seeded pseudo-random one). Stops when no redex is left, after
/// `max_steps`, or when only replication unfolds could continue and the
/// budget is spent.
pub fn run(p: &Process, max_steps: usize, repl_budget: usize, seed: Option<u64>) -> RunOutcome {
    let mut rng = seed.map(rand_chacha::ChaCha8Rng::seed_from_u64);
    let mut current = normalize(p);
    let mut budget = repl_budget;
    let mut steps = Vec::new();
    for _ in 0..max_steps {
        let succs = reduce_step(&current, budget);
        if succs.is_empty() {
            let stop = if budget == 0 && !reduce_step(&current, 1).is_empty() {
                StopReason::ReplBudgetExhausted
            } else {
                StopReason::Quiescent
            };
            return RunOutcome { steps, finale: current, stop };
        }
        let chosen = match &mut rng {
            Some(rng) => succs[rng.gen_range(0..succs.len())].clone(),
            None => succs[0].clone(),
        };
        if chosen.used_repl {
            budget = budget.saturating_sub(1);
        }
        steps.push((chosen.rule, chosen.term.clone()));
        current = chosen.term;
    }
    RunOutcome { steps, finale: current, stop: StopReason::MaxSteps }
}
