//! Invariant properties: a state formula plus per-transition obligations.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{CtrlState, Packet, PacketSchema, SystemState};
use crate::program::CtrlArg;
use crate::semantics::{Action, ActionKind, Model};
use crate::topology::{HostId, NodeId, PortId, PortSet, SwitchId};

mod parse;
pub mod sexpr;

pub use parse::parse;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("property: {0}")]
pub struct PropertyError(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Queue {
    Pq(SwitchId),
    Rcvq(HostId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PacketPred {
    Const(bool),
    Field { field: usize, value: u32 },
    Reached(SwitchId),
    InPort(PortId),
    At(NodeId),
    Not(Box<PacketPred>),
    And(Vec<PacketPred>),
    Or(Vec<PacketPred>),
}

impl PacketPred {
    pub fn eval(&self, p: &Packet, schema: &PacketSchema) -> bool {
        match self {
            PacketPred::Const(b) => *b,
            PacketPred::Field { field, value } => schema.get(p.header, *field) == *value,
            PacketPred::Reached(sw) => p.has_reached(*sw),
            PacketPred::InPort(port) => p.loc.port == *port,
            PacketPred::At(n) => p.loc.node == *n,
            PacketPred::Not(x) => !x.eval(p, schema),
            PacketPred::And(xs) => xs.iter().all(|x| x.eval(p, schema)),
            PacketPred::Or(xs) => xs.iter().any(|x| x.eval(p, schema)),
        }
    }
}

/// A ground proposition about one state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateAtom {
    ExistsIn { queue: Queue, pred: PacketPred },
    Ctrl { name: String, args: Vec<CtrlArg> },
    CtrlEquals(CtrlState),
}

/// Boolean structure over the atom table of a [`Property`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    Atom(usize),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn eval(&self, vals: &[bool]) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Atom(i) => vals[*i],
            Formula::Not(f) => !f.eval(vals),
            Formula::And(fs) => fs.iter().all(|f| f.eval(vals)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(vals)),
        }
    }

    fn atoms(&self, out: &mut BTreeSet<usize>) {
        match self {
            Formula::Const(_) => {}
            Formula::Atom(i) => {
                out.insert(*i);
            }
            Formula::Not(f) => f.atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.atoms(out)),
        }
    }
}

/// Pattern argument of a modality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatArg {
    Any,
    Bind(usize),
    Node(NodeId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Value {
    Node(NodeId),
    Port(PortId),
    Packet(Packet),
    Rule(crate::model::Rule),
    Ports(PortSet),
    Xid(crate::model::Xid),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(usize),
    Const(CtrlArg),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Obligation {
    Const(bool),
    Not(Box<Obligation>),
    And(Vec<Obligation>),
    Or(Vec<Obligation>),
    /// The bound rule or port set contains the drop port.
    Drops(usize),
    Pkt(usize, PacketPred),
    NodeIs(usize, NodeId),
    Ctrl { name: String, args: Vec<Term> },
    State(Formula),
}

/// `[kind(args)] post`: whenever a matching action fires, `post` must hold
/// in the target state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modality {
    pub source: String,
    pub kind: ActionKind,
    pub args: Vec<PatArg>,
    pub vars: usize,
    pub post: Obligation,
}

/// Which parts of the state a property can observe.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Footprint {
    pub mentions_ctrl_state: bool,
    /// A controller predicate takes arguments bound by an action pattern.
    pub ctrl_under_binder: bool,
    pub queues: BTreeSet<Queue>,
    pub modal_kinds: BTreeSet<ActionKind>,
}

#[derive(Clone, Debug)]
pub struct Property {
    pub source: String,
    pub atoms: Vec<StateAtom>,
    pub state: Formula,
    pub modalities: Vec<Modality>,
    footprint: Footprint,
}

impl Property {
    pub fn new(source: String, atoms: Vec<StateAtom>, state: Formula, modalities: Vec<Modality>) -> Self {
        let mut fp = Footprint::default();
        let mut used = BTreeSet::new();
        state.atoms(&mut used);
        for m in &modalities {
            fp.modal_kinds.insert(m.kind);
            obligation_atoms(&m.post, &mut used, &mut fp);
        }
        for i in used {
            match &atoms[i] {
                StateAtom::ExistsIn { queue, .. } => {
                    fp.queues.insert(*queue);
                }
                StateAtom::Ctrl { .. } | StateAtom::CtrlEquals(_) => fp.mentions_ctrl_state = true,
            }
        }
        Property { source, atoms, state, modalities, footprint: fp }
    }

    /// The property `true`.
    pub fn trivial() -> Self {
        Property::new("true".into(), Vec::new(), Formula::Const(true), Vec::new())
    }

    pub fn footprint(&self) -> &Footprint {
        &self.footprint
    }

    pub fn atom_values(&self, m: &Model, s: &SystemState) -> Vec<bool> {
        self.atoms.iter().map(|a| eval_atom(a, m, s)).collect()
    }

    pub fn holds(&self, m: &Model, s: &SystemState) -> bool {
        self.state.eval(&self.atom_values(m, s))
    }

    /// Index of the first modality violated by firing `a` into `post`.
    pub fn violated_modality(&self, m: &Model, a: &Action, post: &SystemState) -> Option<usize> {
        if self.modalities.is_empty() {
            return None;
        }
        let args = action_values(m, a);
        let mut vals: Option<Vec<bool>> = None;
        for (i, md) in self.modalities.iter().enumerate() {
            if md.kind != a.kind() {
                continue;
            }
            let mut env = vec![None; md.vars];
            let matched = md.args.iter().zip(&args).all(|(pat, v)| match pat {
                PatArg::Any => true,
                PatArg::Bind(slot) => {
                    env[*slot] = Some(*v);
                    true
                }
                PatArg::Node(n) => *v == Value::Node(*n),
            });
            if !matched {
                continue;
            }
            let vals = vals.get_or_insert_with(|| self.atom_values(m, post));
            if !eval_obligation(&md.post, &env, m, post, vals) {
                return Some(i);
            }
        }
        None
    }
}

fn obligation_atoms(o: &Obligation, used: &mut BTreeSet<usize>, fp: &mut Footprint) {
    match o {
        Obligation::Not(x) => obligation_atoms(x, used, fp),
        Obligation::And(xs) | Obligation::Or(xs) => xs.iter().for_each(|x| obligation_atoms(x, used, fp)),
        Obligation::Ctrl { args, .. } => {
            fp.mentions_ctrl_state = true;
            if args.iter().any(|t| matches!(t, Term::Var(_))) {
                fp.ctrl_under_binder = true;
            }
        }
        Obligation::State(f) => f.atoms(used),
        Obligation::Const(_) | Obligation::Drops(_) | Obligation::Pkt(..) | Obligation::NodeIs(..) => {}
    }
}

fn eval_atom(a: &StateAtom, m: &Model, s: &SystemState) -> bool {
    let schema = &m.program().metadata().schema;
    match a {
        StateAtom::ExistsIn { queue, pred } => {
            let set = match queue {
                Queue::Pq(sw) => &s.switch(*sw).pq,
                Queue::Rcvq(h) => &s.hosts[h.0 as usize].rcvq,
            };
            m.packets().with_items(|pkts| set.iter().any(|id| pred.eval(&pkts[id as usize], schema)))
        }
        StateAtom::Ctrl { name, args } => m.program().predicate(&s.ctrl.cs, name, args).unwrap_or(false),
        StateAtom::CtrlEquals(cs) => s.ctrl.cs == *cs,
    }
}

fn eval_obligation(o: &Obligation, env: &[Option<Value>], m: &Model, s: &SystemState, vals: &[bool]) -> bool {
    let schema = &m.program().metadata().schema;
    match o {
        Obligation::Const(b) => *b,
        Obligation::Not(x) => !eval_obligation(x, env, m, s, vals),
        Obligation::And(xs) => xs.iter().all(|x| eval_obligation(x, env, m, s, vals)),
        Obligation::Or(xs) => xs.iter().any(|x| eval_obligation(x, env, m, s, vals)),
        Obligation::Drops(v) => match env[*v] {
            Some(Value::Rule(r)) => r.drops(),
            Some(Value::Ports(p)) => p.has_drop(),
            _ => false,
        },
        Obligation::Pkt(v, pred) => match env[*v] {
            Some(Value::Packet(p)) => pred.eval(&p, schema),
            _ => false,
        },
        Obligation::NodeIs(v, n) => env[*v] == Some(Value::Node(*n)),
        Obligation::Ctrl { name, args } => {
            let mut resolved = Vec::with_capacity(args.len());
            for t in args {
                resolved.push(match t {
                    Term::Const(c) => *c,
                    Term::Var(v) => match env[*v] {
                        Some(Value::Packet(p)) => CtrlArg::Packet(p),
                        Some(Value::Node(NodeId::Switch(sw))) => CtrlArg::Switch(sw),
                        Some(Value::Node(NodeId::Host(h))) => CtrlArg::Host(h),
                        _ => return false,
                    },
                });
            }
            m.program().predicate(&s.ctrl.cs, name, &resolved).unwrap_or(false)
        }
        Obligation::State(f) => f.eval(vals),
    }
}

impl PacketPred {
    pub fn describe(&self, schema: &PacketSchema, topo: &crate::topology::Topology) -> String {
        let list = |head: &str, xs: &[PacketPred]| {
            let inner: Vec<String> = xs.iter().map(|x| x.describe(schema, topo)).collect();
            format!("({head} {})", inner.join(" "))
        };
        match self {
            PacketPred::Const(b) => b.to_string(),
            PacketPred::Field { field, value } => {
                let f = &schema.fields()[*field];
                match f.kind {
                    crate::model::FieldKind::Host if (*value as usize) < topo.host_count() => {
                        format!("(eq {} {})", f.name, topo.host_name(HostId(*value as u16)))
                    }
                    _ => format!("(eq {} {value})", f.name),
                }
            }
            PacketPred::Reached(sw) => format!("(reached {})", topo.switch_name(*sw)),
            PacketPred::InPort(p) => format!("(in_port {p})"),
            PacketPred::At(n) => format!("(at {})", topo.node_name(*n)),
            PacketPred::Not(x) => format!("(not {})", x.describe(schema, topo)),
            PacketPred::And(xs) => list("and", xs),
            PacketPred::Or(xs) => list("or", xs),
        }
    }
}

impl StateAtom {
    pub fn describe(&self, m: &Model) -> String {
        let topo = m.topology();
        match self {
            StateAtom::ExistsIn { queue, pred } => {
                let q = match queue {
                    Queue::Pq(sw) => format!("(pq {})", topo.switch_name(*sw)),
                    Queue::Rcvq(h) => format!("(rcvq {})", topo.host_name(*h)),
                };
                format!("(exists_in {q} {})", pred.describe(&m.program().metadata().schema, topo))
            }
            StateAtom::Ctrl { name, args } => {
                let mut out = format!("(ctrl_is {name}");
                for a in args {
                    out.push(' ');
                    out.push_str(&match a {
                        CtrlArg::Switch(s) => topo.switch_name(*s).to_string(),
                        CtrlArg::Host(h) => topo.host_name(*h).to_string(),
                        CtrlArg::Packet(p) => m.program().metadata().schema.describe(p, topo),
                    });
                }
                out + ")"
            }
            StateAtom::CtrlEquals(cs) => format!("(ctrl_raw {cs:?})"),
        }
    }
}

/// Action arguments in pattern order.
pub fn action_values(m: &Model, a: &Action) -> Vec<Value> {
    let sw = |s: SwitchId| Value::Node(NodeId::Switch(s));
    match *a {
        Action::Send { host, port, pkt } => vec![Value::Node(NodeId::Host(host)), Value::Port(port), Value::Packet(m.packet(pkt))],
        Action::Recv { host, pkt } => vec![Value::Node(NodeId::Host(host)), Value::Packet(m.packet(pkt))],
        Action::Match { sw: s, pkt, rule } => vec![sw(s), Value::Packet(m.packet(pkt)), Value::Rule(m.rule(rule))],
        Action::NoMatch { sw: s, pkt } | Action::Ctrl { sw: s, pkt } => vec![sw(s), Value::Packet(m.packet(pkt))],
        Action::Fwd { sw: s, pkt, ports } => vec![sw(s), Value::Packet(m.packet(pkt)), Value::Ports(ports)],
        Action::Add { sw: s, rule } | Action::Del { sw: s, rule } => vec![sw(s), Value::Rule(m.rule(rule))],
        Action::Brepl { sw: s, xid } | Action::Bsync { sw: s, xid } => vec![sw(s), Value::Xid(xid)],
    }
}

/// Number of pattern arguments per action kind.
pub fn arity(kind: ActionKind) -> usize {
    match kind {
        ActionKind::Send | ActionKind::Match | ActionKind::Fwd => 3,
        _ => 2,
    }
}
