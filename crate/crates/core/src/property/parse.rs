use std::collections::HashMap;

use super::sexpr::{self, Sexpr};
use super::*;
use crate::model::FieldKind;
use crate::program::ArgKind;

/// Compiles a property expression against a model.
pub fn parse(src: &str, model: &Model) -> Result<Property, PropertyError> {
    let e = sexpr::read(src).map_err(PropertyError)?;
    let mut cx = Compiler { model, atoms: Vec::new() };
    let mut conjuncts = Vec::new();
    let mut modalities = Vec::new();
    let top: Vec<&Sexpr> = match e.head() {
        Some("and") => e.list().unwrap()[1..].iter().collect(),
        _ => vec![&e],
    };
    for c in top {
        if c.head() == Some("on_action") {
            modalities.push(cx.modality(c)?);
        } else {
            conjuncts.push(cx.formula(c, &Scope::default())?);
        }
    }
    let state = match conjuncts.len() {
        0 => Formula::Const(true),
        1 => conjuncts.pop().unwrap(),
        _ => Formula::And(conjuncts),
    };
    Ok(Property::new(e.to_string(), cx.atoms, state, modalities))
}

fn err<T>(msg: impl Into<String>) -> Result<T, PropertyError> {
    Err(PropertyError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Node,
    Port,
    Packet,
    Rule,
    Ports,
    Xid,
}

fn slots(kind: ActionKind) -> &'static [Slot] {
    use Slot::*;
    match kind {
        ActionKind::Send => &[Node, Port, Packet],
        ActionKind::Recv | ActionKind::NoMatch | ActionKind::Ctrl => &[Node, Packet],
        ActionKind::Match => &[Node, Packet, Rule],
        ActionKind::Fwd => &[Node, Packet, Ports],
        ActionKind::Add | ActionKind::Del => &[Node, Rule],
        ActionKind::Brepl | ActionKind::Bsync => &[Node, Xid],
    }
}

#[derive(Clone, Copy, Debug)]
enum Binding {
    Node(NodeId),
    Var(usize, Slot),
}

#[derive(Clone, Debug, Default)]
struct Scope {
    vars: HashMap<String, Binding>,
}

impl Scope {
    fn with(&self, name: &str, b: Binding) -> Scope {
        let mut s = self.clone();
        s.vars.insert(name.to_string(), b);
        s
    }
}

struct Compiler<'a> {
    model: &'a Model,
    atoms: Vec<StateAtom>,
}

impl Compiler<'_> {
    fn atom(&mut self, a: StateAtom) -> Formula {
        let i = match self.atoms.iter().position(|x| *x == a) {
            Some(i) => i,
            None => {
                self.atoms.push(a);
                self.atoms.len() - 1
            }
        };
        Formula::Atom(i)
    }

    fn args<'e>(&self, e: &'e Sexpr, n: usize) -> Result<&'e [Sexpr], PropertyError> {
        let l = e.list().unwrap_or(&[]);
        if l.len() != n + 1 {
            return err(format!("`{}` takes {n} argument(s): {e}", e.head().unwrap_or("?")));
        }
        Ok(&l[1..])
    }

    fn node(&self, e: &Sexpr, scope: &Scope) -> Result<NodeId, PropertyError> {
        let a = e.atom().ok_or_else(|| PropertyError(format!("expected a node name, got {e}")))?;
        if a.starts_with('?') {
            return match scope.vars.get(a) {
                Some(Binding::Node(n)) => Ok(*n),
                Some(Binding::Var(..)) => err(format!("action variable `{a}` cannot be used here")),
                None => err(format!("unbound variable `{a}`")),
            };
        }
        self.model.topology().lookup(a).ok_or_else(|| PropertyError(format!("unknown node `{a}`")))
    }

    fn switch(&self, e: &Sexpr, scope: &Scope) -> Result<SwitchId, PropertyError> {
        self.node(e, scope)?.as_switch().ok_or_else(|| PropertyError(format!("`{e}` is not a switch")))
    }

    fn host(&self, e: &Sexpr, scope: &Scope) -> Result<HostId, PropertyError> {
        self.node(e, scope)?.as_host().ok_or_else(|| PropertyError(format!("`{e}` is not a host")))
    }

    fn quantified<'e>(&self, e: &'e Sexpr) -> Result<(&'e str, &'e Sexpr, Vec<NodeId>), PropertyError> {
        let a = self.args(e, 2)?;
        let var = a[0].atom().filter(|v| v.starts_with('?'));
        let Some(var) = var else {
            return err(format!("expected `?name` in {e}"));
        };
        let topo = self.model.topology();
        let domain = if e.head().unwrap().ends_with("switch") {
            topo.switches().map(NodeId::from).collect()
        } else {
            topo.hosts().map(NodeId::from).collect()
        };
        Ok((var, &a[1], domain))
    }

    fn formula(&mut self, e: &Sexpr, scope: &Scope) -> Result<Formula, PropertyError> {
        if let Some(a) = e.atom() {
            return match a {
                "true" => Ok(Formula::Const(true)),
                "false" => Ok(Formula::Const(false)),
                _ => err(format!("unexpected atom `{a}` in formula")),
            };
        }
        let head = e.head().ok_or_else(|| PropertyError(format!("malformed formula {e}")))?;
        let rest = &e.list().unwrap()[1..];
        match head {
            "not" => Ok(Formula::Not(Box::new(self.formula(&self.args(e, 1)?[0], scope)?))),
            "and" | "or" => {
                let fs = rest.iter().map(|x| self.formula(x, scope)).collect::<Result<Vec<_>, _>>()?;
                Ok(if head == "and" { Formula::And(fs) } else { Formula::Or(fs) })
            }
            "implies" => {
                let a = self.args(e, 2)?;
                let l = self.formula(&a[0], scope)?;
                let r = self.formula(&a[1], scope)?;
                Ok(Formula::Or(vec![Formula::Not(Box::new(l)), r]))
            }
            "exists_in" | "forall_in" => {
                let a = self.args(e, 2)?;
                let queue = self.queue(&a[0], scope)?;
                let pred = self.pred(&a[1], scope)?;
                if head == "exists_in" {
                    Ok(self.atom(StateAtom::ExistsIn { queue, pred }))
                } else {
                    let pred = PacketPred::Not(Box::new(pred));
                    Ok(Formula::Not(Box::new(self.atom(StateAtom::ExistsIn { queue, pred }))))
                }
            }
            "forall_switch" | "exists_switch" | "forall_host" | "exists_host" => {
                let (var, body, domain) = self.quantified(e)?;
                let fs = domain
                    .into_iter()
                    .map(|n| self.formula(body, &scope.with(var, Binding::Node(n))))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(if head.starts_with("forall") { Formula::And(fs) } else { Formula::Or(fs) })
            }
            "ctrl_is" => {
                let name = rest.first().and_then(Sexpr::atom).ok_or_else(|| PropertyError(format!("missing predicate name in {e}")))?;
                let params = self.predicate_params(name, rest.len() - 1)?;
                let mut args = Vec::new();
                for (x, kind) in rest[1..].iter().zip(params) {
                    args.push(match kind {
                        ArgKind::Switch => CtrlArg::Switch(self.switch(x, scope)?),
                        ArgKind::Host => CtrlArg::Host(self.host(x, scope)?),
                        ArgKind::Packet => return err(format!("packet argument of `{name}` needs an action variable")),
                    });
                }
                Ok(self.atom(StateAtom::Ctrl { name: name.to_string(), args }))
            }
            "ctrl_raw" => {
                let bits = self.model.program().metadata().cs_bits;
                let words = rest
                    .iter()
                    .map(|x| {
                        let s = x.atom().unwrap_or("");
                        u64::from_str_radix(s.trim_start_matches("0x"), 16)
                            .map_err(|_| PropertyError(format!("bad hex word `{x}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if words.len() != bits.div_ceil(64) {
                    return err(format!("ctrl_raw needs {} word(s) for {bits} state bits", bits.div_ceil(64)));
                }
                Ok(self.atom(StateAtom::CtrlEquals(CtrlState::from_words(words))))
            }
            _ => err(format!("unknown formula `{head}`")),
        }
    }

    fn predicate_params(&self, name: &str, n: usize) -> Result<Vec<ArgKind>, PropertyError> {
        let meta = self.model.program().metadata();
        let spec = meta
            .predicates
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| PropertyError(format!("program `{}` has no predicate `{name}`", meta.name)))?;
        if spec.params.len() != n {
            return err(format!("`{name}` takes {} argument(s)", spec.params.len()));
        }
        Ok(spec.params.clone())
    }

    fn queue(&self, e: &Sexpr, scope: &Scope) -> Result<Queue, PropertyError> {
        let a = self.args(e, 1)?;
        match e.head() {
            Some("pq") => Ok(Queue::Pq(self.switch(&a[0], scope)?)),
            Some("rcvq") => Ok(Queue::Rcvq(self.host(&a[0], scope)?)),
            _ => err(format!("expected (pq SWITCH) or (rcvq HOST), got {e}")),
        }
    }

    fn pred(&self, e: &Sexpr, scope: &Scope) -> Result<PacketPred, PropertyError> {
        if let Some(a) = e.atom() {
            return match a {
                "true" => Ok(PacketPred::Const(true)),
                "false" => Ok(PacketPred::Const(false)),
                _ => err(format!("unexpected atom `{a}` in packet predicate")),
            };
        }
        let head = e.head().ok_or_else(|| PropertyError(format!("malformed packet predicate {e}")))?;
        let rest = &e.list().unwrap()[1..];
        match head {
            "not" => Ok(PacketPred::Not(Box::new(self.pred(&self.args(e, 1)?[0], scope)?))),
            "and" | "or" => {
                let ps = rest.iter().map(|x| self.pred(x, scope)).collect::<Result<Vec<_>, _>>()?;
                Ok(if head == "and" { PacketPred::And(ps) } else { PacketPred::Or(ps) })
            }
            "eq" => {
                let a = self.args(e, 2)?;
                let schema = &self.model.program().metadata().schema;
                let name = a[0].atom().unwrap_or("");
                let field = schema.field(name).map_err(|x| PropertyError(x.to_string()))?;
                let text = a[1].atom().ok_or_else(|| PropertyError(format!("bad value in {e}")))?;
                let value = match (text.parse::<u32>(), schema.fields()[field].kind) {
                    (Ok(v), _) => v,
                    (Err(_), FieldKind::Host) => self.host(&a[1], scope)?.0 as u32,
                    (Err(_), FieldKind::Int) => return err(format!("field `{name}` needs a number, got `{text}`")),
                };
                schema.set(0, field, value).map_err(|x| PropertyError(x.to_string()))?;
                Ok(PacketPred::Field { field, value })
            }
            "reached" => Ok(PacketPred::Reached(self.switch(&self.args(e, 1)?[0], scope)?)),
            "in_port" => {
                let a = self.args(e, 1)?;
                match a[0].atom().and_then(|s| s.parse::<u8>().ok()) {
                    Some(p) if (1..=PortId::MAX).contains(&p) => Ok(PacketPred::InPort(PortId(p))),
                    _ => err(format!("bad port in {e}")),
                }
            }
            "at" => Ok(PacketPred::At(self.node(&self.args(e, 1)?[0], scope)?)),
            _ => err(format!("unknown packet predicate `{head}`")),
        }
    }

    fn modality(&mut self, e: &Sexpr) -> Result<Modality, PropertyError> {
        let a = self.args(e, 2)?;
        let pat = a[0].list().filter(|l| !l.is_empty()).ok_or_else(|| PropertyError(format!("bad action pattern {}", a[0])))?;
        let kname = pat[0].atom().unwrap_or("");
        let kind = ActionKind::from_name(kname).ok_or_else(|| PropertyError(format!("unknown action `{kname}`")))?;
        let shape = slots(kind);
        if pat.len() - 1 != shape.len() {
            return err(format!("`{kname}` patterns take {} argument(s)", shape.len()));
        }
        let mut scope = Scope::default();
        let mut args = Vec::new();
        let mut vars = 0;
        for (x, slot) in pat[1..].iter().zip(shape) {
            let s = x.atom().ok_or_else(|| PropertyError(format!("bad pattern argument {x}")))?;
            if s == "_" {
                args.push(PatArg::Any);
            } else if s.starts_with('?') {
                if scope.vars.contains_key(s) {
                    return err(format!("variable `{s}` bound twice"));
                }
                scope.vars.insert(s.to_string(), Binding::Var(vars, *slot));
                args.push(PatArg::Bind(vars));
                vars += 1;
            } else if *slot == Slot::Node {
                args.push(PatArg::Node(self.node(x, &scope)?));
            } else {
                return err(format!("only node positions take constants, got `{s}`"));
            }
        }
        let post = self.obligation(&a[1], &scope)?;
        Ok(Modality { source: e.to_string(), kind, args, vars, post })
    }

    fn var(&self, e: &Sexpr, scope: &Scope, want: &[Slot]) -> Result<usize, PropertyError> {
        match e.atom().and_then(|a| scope.vars.get(a)) {
            Some(Binding::Var(i, slot)) if want.contains(slot) => Ok(*i),
            Some(Binding::Var(..)) => err(format!("variable `{e}` has the wrong type here")),
            _ => err(format!("expected an action variable, got {e}")),
        }
    }

    fn obligation(&mut self, e: &Sexpr, scope: &Scope) -> Result<Obligation, PropertyError> {
        if let Some(a) = e.atom() {
            return match a {
                "true" => Ok(Obligation::Const(true)),
                "false" => Ok(Obligation::Const(false)),
                _ => err(format!("unexpected atom `{a}` in obligation")),
            };
        }
        let head = e.head().unwrap_or("");
        let rest = &e.list().unwrap()[1..];
        match head {
            "not" => Ok(Obligation::Not(Box::new(self.obligation(&self.args(e, 1)?[0], scope)?))),
            "and" | "or" => {
                let os = rest.iter().map(|x| self.obligation(x, scope)).collect::<Result<Vec<_>, _>>()?;
                Ok(if head == "and" { Obligation::And(os) } else { Obligation::Or(os) })
            }
            "implies" => {
                let a = self.args(e, 2)?;
                let l = self.obligation(&a[0], scope)?;
                let r = self.obligation(&a[1], scope)?;
                Ok(Obligation::Or(vec![Obligation::Not(Box::new(l)), r]))
            }
            "drops" => Ok(Obligation::Drops(self.var(&self.args(e, 1)?[0], scope, &[Slot::Rule, Slot::Ports])?)),
            "pkt" => {
                let a = self.args(e, 2)?;
                let v = self.var(&a[0], scope, &[Slot::Packet])?;
                Ok(Obligation::Pkt(v, self.pred(&a[1], scope)?))
            }
            "is" => {
                let a = self.args(e, 2)?;
                let v = self.var(&a[0], scope, &[Slot::Node])?;
                Ok(Obligation::NodeIs(v, self.node(&a[1], scope)?))
            }
            "ctrl_is" if rest.iter().skip(1).any(|x| x.atom().is_some_and(|s| s.starts_with('?'))) => {
                let name = rest[0].atom().ok_or_else(|| PropertyError(format!("missing predicate name in {e}")))?;
                let params = self.predicate_params(name, rest.len() - 1)?;
                let mut args = Vec::new();
                for (x, kind) in rest[1..].iter().zip(params) {
                    let bound = x.atom().and_then(|a| scope.vars.get(a)).copied();
                    args.push(match (kind, bound) {
                        (ArgKind::Packet, Some(Binding::Var(i, Slot::Packet))) => Term::Var(i),
                        (ArgKind::Switch | ArgKind::Host, Some(Binding::Var(i, Slot::Node))) => Term::Var(i),
                        (ArgKind::Switch, _) => Term::Const(CtrlArg::Switch(self.switch(x, scope)?)),
                        (ArgKind::Host, _) => Term::Const(CtrlArg::Host(self.host(x, scope)?)),
                        (ArgKind::Packet, _) => return err(format!("`{x}` is not a packet variable")),
                    });
                }
                Ok(Obligation::Ctrl { name: name.to_string(), args })
            }
            _ => Ok(Obligation::State(self.formula(e, scope)?)),
        }
    }
}
