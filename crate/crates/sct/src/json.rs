//! JSON exchange format for session coalgebras.
//!
//! ```json
//! {"basic_order": [["int","real"]],
//!  "states": {
//!    "q0":   {"op":"branch","pol":"in","cont":{"mul":"q1","neg":"q4","quit":"q6"}},
//!    "q1":   {"op":"com","pol":"in","data":"qint","cont":"q2"},
//!    "qint": {"op":"bsc","type":"int"},
//!    "q6":   {"op":"end"},
//!    "p":    {"op":"par","cont":"q1"}}}
//! ```
//!
//! `basic_order` is optional and defaults to `int <= real`. Unknown fields
//! are rejected.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use crate::coalgebra::{
    BasicOrder, CoalgebraError, CoalgebraTable, ContKey, Polarity, SessionCoalgebra, StateId,
    StateLabel, TransitionKey, TransitionMap,
};

fn format_err(msg: impl Into<String>) -> CoalgebraError {
    CoalgebraError::Format(msg.into())
}

/// Branch labels share the lexical class of source identifiers.
fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn expect_str(v: &Value, what: &str) -> Result<String, CoalgebraError> {
    v.as_str()
        .map(str::to_owned)
        .ok_or_else(|| format_err(format!("{what} must be a string")))
}

fn take_field(
    obj: &mut Map<String, Value>,
    state: &str,
    field: &str,
) -> Result<Value, CoalgebraError> {
    obj.remove(field)
        .ok_or_else(|| format_err(format!("state {state}: missing field \"{field}\"")))
}

fn reject_unknown(obj: &Map<String, Value>, what: &str) -> Result<(), CoalgebraError> {
    if let Some(key) = obj.keys().next() {
        return Err(format_err(format!("{what}: unknown field \"{key}\"")));
    }
    Ok(())
}

fn parse_polarity(state: &str, v: &Value) -> Result<Polarity, CoalgebraError> {
    match expect_str(v, &format!("state {state}: \"pol\""))?.as_str() {
        "in" => Ok(Polarity::In),
        "out" => Ok(Polarity::Out),
        other => Err(format_err(format!(
            "state {state}: polarity must be \"in\" or \"out\", got \"{other}\""
        ))),
    }
}

fn parse_state(state: &str, v: Value) -> Result<(StateLabel, TransitionMap), CoalgebraError> {
    let mut obj = match v {
        Value::Object(m) => m,
        _ => return Err(format_err(format!("state {state}: must be an object"))),
    };
    let op = expect_str(&take_field(&mut obj, state, "op")?, "\"op\"")?;
    let parsed = match op.as_str() {
        "com" => {
            let pol = parse_polarity(state, &take_field(&mut obj, state, "pol")?)?;
            let data = expect_str(&take_field(&mut obj, state, "data")?, "\"data\"")?;
            let cont = expect_str(&take_field(&mut obj, state, "cont")?, "\"cont\"")?;
            let mut tr = TransitionMap::new();
            tr.insert(TransitionKey::Data, StateId::new(data));
            tr.insert(TransitionKey::Cont(ContKey::Star), StateId::new(cont));
            (StateLabel::Com(pol), tr)
        }
        "branch" => {
            let pol = parse_polarity(state, &take_field(&mut obj, state, "pol")?)?;
            let cont = take_field(&mut obj, state, "cont")?;
            let arms = match cont {
                Value::Object(m) => m,
                _ => {
                    return Err(format_err(format!(
                        "state {state}: branch \"cont\" must be an object of label -> state"
                    )))
                }
            };
            let mut labels = std::collections::BTreeSet::new();
            let mut tr = TransitionMap::new();
            for (label, target) in arms {
                if !is_identifier(&label) {
                    return Err(format_err(format!(
                        "state {state}: branch label \"{label}\" is not an identifier"
                    )));
                }
                let target = expect_str(&target, &format!("state {state}: branch target"))?;
                labels.insert(label.clone());
                tr.insert(TransitionKey::Cont(ContKey::Label(label)), StateId::new(target));
            }
            (StateLabel::Branch(pol, labels), tr)
        }
        "end" => (StateLabel::End, TransitionMap::new()),
        "bsc" => {
            let d = expect_str(&take_field(&mut obj, state, "type")?, "\"type\"")?;
            (StateLabel::Bsc(d), TransitionMap::new())
        }
        "par" => {
            let cont = expect_str(&take_field(&mut obj, state, "cont")?, "\"cont\"")?;
            let mut tr = TransitionMap::new();
            tr.insert(TransitionKey::Cont(ContKey::Star), StateId::new(cont));
            (StateLabel::Par, tr)
        }
        other => {
            return Err(format_err(format!(
                "state {state}: unknown op \"{other}\""
            )))
        }
    };
    reject_unknown(&obj, &format!("state {state}"))?;
    Ok(parsed)
}

/// Parse and validate a coalgebra document.
pub fn coalgebra_from_json(text: &str) -> Result<SessionCoalgebra, CoalgebraError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| format_err(format!("invalid JSON: {e}")))?;
    let mut obj = match value {
        Value::Object(m) => m,
        _ => return Err(format_err("document must be an object")),
    };
    let basic_order = match obj.remove("basic_order") {
        None => BasicOrder::standard(),
        Some(Value::Array(entries)) => {
            let mut pairs: Vec<(String, String)> = Vec::new();
            for e in entries {
                match e {
                    Value::Array(pair) if pair.len() == 2 => {
                        let a = expect_str(&pair[0], "basic_order entry")?;
                        let b = expect_str(&pair[1], "basic_order entry")?;
                        pairs.push((a, b));
                    }
                    _ => {
                        return Err(format_err(
                            "basic_order entries must be two-element arrays",
                        ))
                    }
                }
            }
            BasicOrder::from_pairs(pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())))
        }
        Some(_) => return Err(format_err("basic_order must be an array of pairs")),
    };
    let states = match obj.remove("states") {
        Some(Value::Object(m)) => m,
        Some(_) => return Err(format_err("states must be an object")),
        None => return Err(format_err("missing field \"states\"")),
    };
    reject_unknown(&obj, "document")?;
    let mut table = CoalgebraTable::new(basic_order);
    for (id, v) in states {
        let (label, transitions) = parse_state(&id, v)?;
        table.states.insert(StateId::new(id), (label, transitions));
    }
    table.validate()
}

/// Serialize a coalgebra back into the exchange format.
pub fn coalgebra_to_json(c: &SessionCoalgebra) -> Value {
    let mut states: BTreeMap<String, Value> = BTreeMap::new();
    for id in c.state_ids() {
        let label = c.label(id).expect("state exists");
        let transitions = c.transitions(id).expect("state exists");
        let mut obj = Map::new();
        match label {
            StateLabel::Com(pol) => {
                obj.insert("op".into(), Value::String("com".into()));
                obj.insert("pol".into(), Value::String(pol.to_string()));
                obj.insert(
                    "data".into(),
                    Value::String(transitions[&TransitionKey::Data].0.clone()),
                );
                obj.insert(
                    "cont".into(),
                    Value::String(transitions[&TransitionKey::Cont(ContKey::Star)].0.clone()),
                );
            }
            StateLabel::Branch(pol, _) => {
                obj.insert("op".into(), Value::String("branch".into()));
                obj.insert("pol".into(), Value::String(pol.to_string()));
                let mut arms = Map::new();
                for (key, target) in transitions {
                    if let TransitionKey::Cont(ContKey::Label(l)) = key {
                        arms.insert(l.clone(), Value::String(target.0.clone()));
                    }
                }
                obj.insert("cont".into(), Value::Object(arms));
            }
            StateLabel::End => {
                obj.insert("op".into(), Value::String("end".into()));
            }
            StateLabel::Bsc(d) => {
                obj.insert("op".into(), Value::String("bsc".into()));
                obj.insert("type".into(), Value::String(d.clone()));
            }
            StateLabel::Par => {
                obj.insert("op".into(), Value::String("par".into()));
                obj.insert(
                    "cont".into(),
                    Value::String(transitions[&TransitionKey::Cont(ContKey::Star)].0.clone()),
                );
            }
        }
        states.insert(id.0.clone(), Value::Object(obj));
    }
    let order: Vec<Value> = c
        .basic_order()
        .proper_pairs()
        .map(|(a, b)| Value::Array(vec![Value::String(a.into()), Value::String(b.into())]))
        .collect();
    let mut doc = Map::new();
    doc.insert("basic_order".into(), Value::Array(order));
    doc.insert(
        "states".into(),
        Value::Object(states.into_iter().collect()),
    );
    Value::Object(doc)
}
