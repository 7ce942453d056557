//! Graphviz rendering of session coalgebras.
//!
//! States are drawn with their label symbol (`?`, `!`, `&`, `+`, `end`,
//! the basic type, or `par`). Data transitions are drawn as coloured dashed
//! edges to set them apart from continuation transitions.

use crate::coalgebra::{CoalgebraError, SessionCoalgebra, StateId, TransitionKey};
use std::collections::BTreeSet;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Render the coalgebra (or the part generated by `roots`) as a DOT digraph.
pub fn to_dot(
    c: &SessionCoalgebra,
    roots: Option<&[StateId]>,
) -> Result<String, CoalgebraError> {
    let selected: BTreeSet<StateId> = match roots {
        None => c.state_ids().cloned().collect(),
        Some(roots) => {
            let mut all = BTreeSet::new();
            for r in roots {
                all.extend(c.generated_subcoalgebra(r)?);
            }
            all
        }
    };
    let mut out = String::from("digraph session {\n  rankdir=LR;\n  node [shape=circle];\n");
    for id in &selected {
        let label = c.label(id)?;
        out.push_str(&format!(
            "  {} [label={}];\n",
            quote(id.as_str()),
            quote(&format!("{}\n{}", label.symbol(), id))
        ));
    }
    for id in &selected {
        for (key, target) in c.transitions(id)? {
            let attrs = match key {
                TransitionKey::Data => "[style=dashed, color=purple, label=\"data\"]".to_owned(),
                TransitionKey::Cont(crate::coalgebra::ContKey::Star) => String::new(),
                TransitionKey::Cont(crate::coalgebra::ContKey::Label(l)) => {
                    format!("[label={}]", quote(l))
                }
            };
            out.push_str(&format!(
                "  {} -> {} {};\n",
                quote(id.as_str()),
                quote(target.as_str()),
                attrs
            ));
        }
    }
    out.push_str("}\n");
    Ok(out)
}
