use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{SystemState, TableFull};
use crate::property::{action_values, Property, Value};
use crate::semantics::{Action, FireError, Model, ResolvedAction};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    /// The state formula is false in the last state.
    Invariant,
    /// The last action broke modality `index`.
    Modality { index: usize, action: Action },
}

/// Actions from the initial state to the violation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub actions: Vec<Action>,
    pub violation: Violation,
}

impl Counterexample {
    /// Line-oriented rendering: one `step N:` line per action, then a
    /// `violation:` block.
    pub fn render(&self, model: &Model, property: &Property) -> String {
        let mut out = String::new();
        for (i, a) in self.actions.iter().enumerate() {
            let _ = writeln!(out, "step {}: {}", i + 1, model.describe_action(a));
        }
        out.push_str("violation:\n");
        let last = replay_states(model, &self.actions).ok();
        match self.violation {
            Violation::Invariant => {
                let _ = writeln!(out, "  invariant {}", property.source);
                if let Some(s) = &last {
                    let vals = property.atom_values(model, s);
                    for (atom, v) in property.atoms.iter().zip(vals) {
                        let _ = writeln!(out, "  {} = {v}", atom.describe(model));
                    }
                }
            }
            Violation::Modality { index, action } => {
                let m = &property.modalities[index];
                let _ = writeln!(out, "  modality {}", m.source);
                let _ = writeln!(out, "  action {}", model.describe_action(&action));
                for (pat, v) in m.args.iter().zip(action_values(model, &action)) {
                    if let crate::property::PatArg::Bind(slot) = pat {
                        let _ = writeln!(out, "  binding #{slot} = {}", describe_value(model, &v));
                    }
                }
            }
        }
        out
    }

    pub fn to_doc(&self, model: &Model, property: &Property, scenario: Option<&str>) -> TraceDoc {
        let (kind, detail, action) = match self.violation {
            Violation::Invariant => ("invariant", property.source.clone(), None),
            Violation::Modality { index, action } => {
                ("modality", property.modalities[index].source.clone(), Some(model.resolve_action(&action)))
            }
        };
        TraceDoc {
            scenario: scenario.map(str::to_string),
            steps: self
                .actions
                .iter()
                .map(|a| TraceStep { text: model.describe_action(a), action: model.resolve_action(a) })
                .collect(),
            violation: ViolationDoc { kind: kind.to_string(), detail, action },
        }
    }
}

fn describe_value(model: &Model, v: &Value) -> String {
    let topo = model.topology();
    let schema = &model.program().metadata().schema;
    match v {
        Value::Node(n) => topo.node_name(*n).to_string(),
        Value::Port(p) => p.to_string(),
        Value::Packet(p) => schema.describe(p, topo),
        Value::Rule(r) => r.describe(schema, topo),
        Value::Ports(p) => p.to_string(),
        Value::Xid(x) => x.to_string(),
    }
}

/// Machine-readable counterexample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub steps: Vec<TraceStep>,
    pub violation: ViolationDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub text: String,
    pub action: ResolvedAction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationDoc {
    pub kind: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ResolvedAction>,
}

impl TraceDoc {
    pub fn actions(&self, model: &Model) -> Result<Vec<Action>, TableFull> {
        self.steps.iter().map(|s| model.intern_action(&s.action)).collect()
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("replay diverged at step {step}: {action} is not enabled")]
    Diverged { step: usize, action: String },
    #[error(transparent)]
    Fire(#[from] FireError),
}

#[derive(Debug)]
pub struct ReplayOutcome {
    pub state: SystemState,
    /// First violation met along the way, with its 1-based step.
    pub violation: Option<(usize, Violation)>,
}

/// Re-fires `actions` from the initial state, checking each step.
pub fn replay(model: &Model, property: &Property, actions: &[Action]) -> Result<ReplayOutcome, ReplayError> {
    let mut s = model.initial_state();
    let mut violation = (!property.holds(model, &s)).then_some((0, Violation::Invariant));
    for (i, a) in actions.iter().enumerate() {
        if !model.is_enabled(&s, a) {
            return Err(ReplayError::Diverged { step: i + 1, action: model.describe_action(a) });
        }
        s = model.fire(&s, a)?;
        if violation.is_none() {
            if let Some(index) = property.violated_modality(model, a, &s) {
                violation = Some((i + 1, Violation::Modality { index, action: *a }));
            } else if !property.holds(model, &s) {
                violation = Some((i + 1, Violation::Invariant));
            }
        }
    }
    Ok(ReplayOutcome { state: s, violation })
}

fn replay_states(model: &Model, actions: &[Action]) -> Result<SystemState, FireError> {
    let mut s = model.initial_state();
    for a in actions {
        s = model.fire(&s, a)?;
    }
    Ok(s)
}
