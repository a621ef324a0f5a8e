//! Transition relation: enabled actions and their effects.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::pack::{self, PackLayout, PackedState};
use crate::model::{
    ControllerEnv, CqEntry, FlowMod, FlowOp, HostState, Interner, Packet, PacketId, Rule, RuleId,
    SwitchState, SystemState, TableFull, VecSet, Xid,
};
use crate::program::{ControlMessage, ControllerProgram, HandlerOutput, ProgramError};
use crate::topology::{HostId, Location, NodeId, PortId, PortSet, SwitchId, Topology, TopologyError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Send { host: HostId, port: PortId, pkt: PacketId },
    Recv { host: HostId, pkt: PacketId },
    Match { sw: SwitchId, pkt: PacketId, rule: RuleId },
    NoMatch { sw: SwitchId, pkt: PacketId },
    Ctrl { sw: SwitchId, pkt: PacketId },
    Fwd { sw: SwitchId, pkt: PacketId, ports: PortSet },
    Add { sw: SwitchId, rule: RuleId },
    Del { sw: SwitchId, rule: RuleId },
    Brepl { sw: SwitchId, xid: Xid },
    Bsync { sw: SwitchId, xid: Xid },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Send,
    Recv,
    Match,
    NoMatch,
    Ctrl,
    Fwd,
    Add,
    Del,
    Brepl,
    Bsync,
}

impl ActionKind {
    pub const ALL: [ActionKind; 10] = [
        ActionKind::Send,
        ActionKind::Recv,
        ActionKind::Match,
        ActionKind::NoMatch,
        ActionKind::Ctrl,
        ActionKind::Fwd,
        ActionKind::Add,
        ActionKind::Del,
        ActionKind::Brepl,
        ActionKind::Bsync,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Send => "send",
            ActionKind::Recv => "recv",
            ActionKind::Match => "match",
            ActionKind::NoMatch => "nomatch",
            ActionKind::Ctrl => "ctrl",
            ActionKind::Fwd => "fwd",
            ActionKind::Add => "add",
            ActionKind::Del => "del",
            ActionKind::Brepl => "brepl",
            ActionKind::Bsync => "bsync",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Send { .. } => ActionKind::Send,
            Action::Recv { .. } => ActionKind::Recv,
            Action::Match { .. } => ActionKind::Match,
            Action::NoMatch { .. } => ActionKind::NoMatch,
            Action::Ctrl { .. } => ActionKind::Ctrl,
            Action::Fwd { .. } => ActionKind::Fwd,
            Action::Add { .. } => ActionKind::Add,
            Action::Del { .. } => ActionKind::Del,
            Action::Brepl { .. } => ActionKind::Brepl,
            Action::Bsync { .. } => ActionKind::Bsync,
        }
    }
}

#[derive(Debug, Error)]
pub enum FireError {
    #[error("action {0:?} is not enabled")]
    NotEnabled(Action),
    #[error("control queue of `{switch}` exceeds {limit} entries")]
    CqOverflow { switch: String, limit: usize },
    #[error(transparent)]
    TableFull(#[from] TableFull),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid handler output: {0}")]
    InvalidOutput(String),
}

impl FireError {
    /// Budget exhaustion as opposed to a modelling error.
    pub fn is_resource(&self) -> bool {
        matches!(self, FireError::CqOverflow { .. } | FireError::TableFull(_))
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    TableFull(#[from] TableFull),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("representative at {0} is not attached to a switch")]
    BadRepresentative(String),
    #[error("initial rule names unknown switch {0}")]
    BadInitialRule(u16),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelLimits {
    pub max_packets: usize,
    pub max_rules: usize,
    pub max_cq_len: usize,
}

impl Default for ModelLimits {
    fn default() -> Self {
        ModelLimits { max_packets: 1 << 16, max_rules: 1 << 12, max_cq_len: 64 }
    }
}

/// A host packet that can be injected at any time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SendRep {
    pub host: HostId,
    pub port: PortId,
    pub pkt: PacketId,
}

/// Topology, controller program and the shared interning tables.
#[derive(Debug)]
pub struct Model {
    topo: Topology,
    program: Box<dyn ControllerProgram>,
    packets: Interner<Packet>,
    rules: Interner<Rule>,
    reps: Vec<SendRep>,
    initial: SystemState,
    layout: PackLayout,
    limits: ModelLimits,
}

impl Model {
    pub fn new(topo: Topology, program: Box<dyn ControllerProgram>, limits: ModelLimits) -> Result<Self, ModelError> {
        let packets = Interner::new("packet", limits.max_packets);
        let rules = Interner::new("rule", limits.max_rules);
        let meta = program.metadata();
        let mut reps = Vec::new();
        for r in &meta.representatives {
            let loc = Location::new(r.host, r.port);
            match topo.next_hop(loc)?.node {
                NodeId::Switch(_) => {}
                NodeId::Host(_) => return Err(ModelError::BadRepresentative(topo.loc_name(loc))),
            }
            let pkt = PacketId(packets.intern(Packet::new(r.header, loc))?);
            reps.push(SendRep { host: r.host, port: r.port, pkt });
        }
        let mut switches = vec![SwitchState::default(); topo.switch_count()];
        for &(sw, rule) in &meta.initial_rules {
            let st = switches.get_mut(sw.0 as usize).ok_or(ModelError::BadInitialRule(sw.0))?;
            st.ft.insert(rules.intern(rule)?);
        }
        let initial = SystemState {
            hosts: vec![HostState::default(); topo.host_count()],
            switches,
            ctrl: ControllerEnv { cs: program.initial_cs(), ..Default::default() },
        };
        let layout = PackLayout { hosts: topo.host_count(), switches: topo.switch_count(), cs_bits: meta.cs_bits };
        Ok(Model { topo, program, packets, rules, reps, initial, layout, limits })
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn program(&self) -> &dyn ControllerProgram {
        self.program.as_ref()
    }

    pub fn packets(&self) -> &Interner<Packet> {
        &self.packets
    }

    pub fn rules(&self) -> &Interner<Rule> {
        &self.rules
    }

    pub fn representatives(&self) -> &[SendRep] {
        &self.reps
    }

    pub fn limits(&self) -> &ModelLimits {
        &self.limits
    }

    pub fn layout(&self) -> &PackLayout {
        &self.layout
    }

    pub fn initial_state(&self) -> SystemState {
        self.initial.clone()
    }

    pub fn packet(&self, id: PacketId) -> Packet {
        self.packets.get(id.0)
    }

    pub fn rule(&self, id: RuleId) -> Rule {
        self.rules.get(id.0)
    }

    pub fn intern_packet(&self, p: Packet) -> Result<PacketId, TableFull> {
        self.packets.intern(p).map(PacketId)
    }

    pub fn intern_rule(&self, r: Rule) -> Result<RuleId, TableFull> {
        self.rules.intern(r).map(RuleId)
    }

    pub fn pack(&self, s: &SystemState) -> PackedState {
        pack::pack(s, &self.layout)
    }

    pub fn pack_into(&self, s: &SystemState, buf: &mut Vec<u64>) {
        pack::pack_into(s, &self.layout, buf)
    }

    pub fn unpack(&self, p: &PackedState) -> SystemState {
        pack::unpack(p, &self.layout).expect("packed state produced by this model")
    }

    /// Hash identifying the state encoding, stored in dumps.
    pub fn schema_hash(&self) -> u64 {
        let mut h = pack::Fnv::new();
        h.word(self.program.metadata().schema.fingerprint());
        h.word(self.layout.hosts as u64);
        h.word(self.layout.switches as u64);
        h.word(self.layout.cs_bits as u64);
        h.finish()
    }

    /// Highest-priority matching rule; ties go to the smaller id.
    pub fn bestmatch(&self, ft: &crate::model::IdSet, pkt: &Packet) -> Option<RuleId> {
        self.rules.with_items(|rules| best_in(rules, ft, pkt))
    }

    pub fn enabled(&self, s: &SystemState) -> Vec<Action> {
        let mut out = Vec::new();
        for r in &self.reps {
            out.push(Action::Send { host: r.host, port: r.port, pkt: r.pkt });
        }
        for (h, hs) in s.hosts.iter().enumerate() {
            for p in hs.rcvq.iter() {
                out.push(Action::Recv { host: HostId(h as u16), pkt: PacketId(p) });
            }
        }
        self.rules.with_items(|rules| {
            self.packets.with_items(|pkts| {
                for (i, st) in s.switches.iter().enumerate() {
                    let sw = SwitchId(i as u16);
                    for p in st.pq.iter() {
                        let pkt = PacketId(p);
                        match best_in(rules, &st.ft, &pkts[p as usize]) {
                            Some(rule) => out.push(Action::Match { sw, pkt, rule }),
                            None => out.push(Action::NoMatch { sw, pkt }),
                        }
                    }
                }
            })
        });
        for (i, st) in s.switches.iter().enumerate() {
            let sw = SwitchId(i as u16);
            for &(pkt, ports) in &st.fq {
                out.push(Action::Fwd { sw, pkt, ports });
            }
            match st.cq.first() {
                Some(CqEntry::FlowMods(set)) => {
                    for fm in set {
                        out.push(match fm.op {
                            FlowOp::Add => Action::Add { sw, rule: fm.rule },
                            FlowOp::Del => Action::Del { sw, rule: fm.rule },
                        });
                    }
                }
                Some(CqEntry::Barrier(xid)) => out.push(Action::Brepl { sw, xid: *xid }),
                None => {}
            }
        }
        for &(sw, pkt) in &s.ctrl.rq {
            out.push(Action::Ctrl { sw, pkt });
        }
        for &(sw, xid) in &s.ctrl.brq {
            out.push(Action::Bsync { sw, xid });
        }
        out
    }

    pub fn is_enabled(&self, s: &SystemState, a: &Action) -> bool {
        let sw_ok = |sw: &SwitchId| (sw.0 as usize) < s.switches.len();
        match *a {
            Action::Send { host, port, pkt } => {
                self.reps.iter().any(|r| r.host == host && r.port == port && r.pkt == pkt)
            }
            Action::Recv { host, pkt } => s.hosts.get(host.0 as usize).is_some_and(|h| h.rcvq.contains(pkt.0)),
            Action::Match { sw, pkt, rule } => {
                sw_ok(&sw) && {
                    let st = s.switch(sw);
                    st.pq.contains(pkt.0) && self.bestmatch(&st.ft, &self.packet(pkt)) == Some(rule)
                }
            }
            Action::NoMatch { sw, pkt } => {
                sw_ok(&sw) && {
                    let st = s.switch(sw);
                    st.pq.contains(pkt.0) && self.bestmatch(&st.ft, &self.packet(pkt)).is_none()
                }
            }
            Action::Ctrl { sw, pkt } => s.ctrl.rq.contains(&(sw, pkt)),
            Action::Fwd { sw, pkt, ports } => sw_ok(&sw) && s.switch(sw).fq.contains(&(pkt, ports)),
            Action::Add { sw, rule } => sw_ok(&sw) && head_has(&s.switch(sw).cq, FlowMod { rule, op: FlowOp::Add }),
            Action::Del { sw, rule } => sw_ok(&sw) && head_has(&s.switch(sw).cq, FlowMod { rule, op: FlowOp::Del }),
            Action::Brepl { sw, xid } => sw_ok(&sw) && s.switch(sw).cq.first() == Some(&CqEntry::Barrier(xid)),
            Action::Bsync { sw, xid } => s.ctrl.brq.contains(&(sw, xid)),
        }
    }

    pub fn fire(&self, s: &SystemState, a: &Action) -> Result<SystemState, FireError> {
        if !self.is_enabled(s, a) {
            return Err(FireError::NotEnabled(*a));
        }
        let mut n = s.clone();
        match *a {
            Action::Send { host, port, pkt } => {
                let p = self.packet(pkt);
                let dest = self.topo.next_hop(Location::new(host, port))?;
                self.place(&mut n, Packet { loc: dest, ..p })?;
            }
            Action::Recv { host, pkt } => {
                n.hosts[host.0 as usize].rcvq.remove(pkt.0);
            }
            Action::Match { sw, pkt, rule } => {
                let ports = self.rule(rule).ports;
                self.deliver(&mut n, sw, self.packet(pkt), ports)?;
            }
            Action::NoMatch { sw, pkt } => {
                n.ctrl.rq.insert((sw, pkt));
            }
            Action::Ctrl { sw, pkt } => {
                n.ctrl.rq.remove(&(sw, pkt));
                let out = self.program.pkt_in(&n.ctrl.cs, sw, &self.packet(pkt))?;
                self.apply(&mut n, out)?;
            }
            Action::Fwd { sw, pkt, ports } => {
                n.switch_mut(sw).fq.remove(&(pkt, ports));
                self.deliver(&mut n, sw, self.packet(pkt), ports)?;
            }
            Action::Add { sw, rule } | Action::Del { sw, rule } => {
                let op = if matches!(a, Action::Add { .. }) { FlowOp::Add } else { FlowOp::Del };
                let st = n.switch_mut(sw);
                if let Some(CqEntry::FlowMods(set)) = st.cq.first_mut() {
                    set.remove(&FlowMod { rule, op });
                    if set.is_empty() {
                        st.cq.remove(0);
                    }
                }
                match op {
                    FlowOp::Add => st.ft.insert(rule.0),
                    FlowOp::Del => st.ft.remove(rule.0),
                };
            }
            Action::Brepl { sw, xid } => {
                n.switch_mut(sw).cq.remove(0);
                n.ctrl.brq.insert((sw, xid));
            }
            Action::Bsync { sw, xid } => {
                n.ctrl.brq.remove(&(sw, xid));
                let out = self.program.barrier_in(&n.ctrl.cs, sw, xid)?;
                self.apply(&mut n, out)?;
            }
        }
        Ok(n)
    }

    /// Copies `pkt` out of `sw` on every port in `ports`.
    fn deliver(&self, n: &mut SystemState, sw: SwitchId, pkt: Packet, ports: PortSet) -> Result<(), FireError> {
        let history = self.program.metadata().schema.has_history();
        for pt in ports.iter().filter(|p| !p.is_drop()) {
            let dest = self.topo.next_hop(Location::new(sw, pt))?;
            let mut copy = Packet { loc: dest, ..pkt };
            if history {
                copy.reached |= 1 << sw.0;
            }
            self.place(n, copy)?;
        }
        Ok(())
    }

    fn place(&self, n: &mut SystemState, p: Packet) -> Result<(), FireError> {
        let id = self.packets.intern(p)?;
        match p.loc.node {
            NodeId::Switch(t) => n.switch_mut(t).pq.insert(id),
            NodeId::Host(h) => n.hosts[h.0 as usize].rcvq.insert(id),
        };
        Ok(())
    }

    fn apply(&self, n: &mut SystemState, out: HandlerOutput) -> Result<(), FireError> {
        if out.cs.words().len() != n.ctrl.cs.words().len() {
            return Err(FireError::InvalidOutput("controller state changed width".into()));
        }
        n.ctrl.cs = out.cs;
        for (sw, msg) in out.messages {
            let st = n
                .switches
                .get_mut(sw.0 as usize)
                .ok_or_else(|| FireError::InvalidOutput(format!("message to unknown switch {}", sw.0)))?;
            let entry = match msg {
                ControlMessage::Add(r) => Queued::Mod(FlowMod { rule: RuleId(self.rules.intern(r)?), op: FlowOp::Add }),
                ControlMessage::Del(r) => Queued::Mod(FlowMod { rule: RuleId(self.rules.intern(r)?), op: FlowOp::Del }),
                ControlMessage::Barrier(x) => Queued::Barrier(x),
            };
            append(&mut st.cq, &st.ft, entry);
            if st.cq.len() > self.limits.max_cq_len {
                return Err(FireError::CqOverflow {
                    switch: self.topo.switch_name(sw).to_string(),
                    limit: self.limits.max_cq_len,
                });
            }
        }
        for (sw, pkt, ports) in out.packet_outs {
            if (sw.0 as usize) >= n.switches.len() {
                return Err(FireError::InvalidOutput(format!("PacketOut at unknown switch {}", sw.0)));
            }
            if let Some(bad) = ports.iter().find(|p| !p.is_drop() && !self.topo.has_port(sw, *p)) {
                return Err(FireError::InvalidOutput(format!(
                    "PacketOut to missing port {bad} of `{}`",
                    self.topo.switch_name(sw)
                )));
            }
            if ports.is_empty() {
                continue;
            }
            let id = PacketId(self.packets.intern(pkt)?);
            n.switch_mut(sw).fq.insert((id, ports));
        }
        Ok(())
    }

    pub fn describe_packet(&self, id: PacketId) -> String {
        self.program.metadata().schema.describe(&self.packet(id), &self.topo)
    }

    pub fn describe_rule(&self, id: RuleId) -> String {
        self.rule(id).describe(&self.program.metadata().schema, &self.topo)
    }

    pub fn describe_action(&self, a: &Action) -> String {
        let t = &self.topo;
        let sw = |s: SwitchId| t.switch_name(s).to_string();
        let h = |x: HostId| t.host_name(x).to_string();
        let p = |x: PacketId| self.describe_packet(x);
        let r = |x: RuleId| self.describe_rule(x);
        match *a {
            Action::Send { host, port, pkt } => format!("send({}, {port}, {})", h(host), p(pkt)),
            Action::Recv { host, pkt } => format!("recv({}, {})", h(host), p(pkt)),
            Action::Match { sw: s, pkt, rule } => format!("match({}, {}, {})", sw(s), p(pkt), r(rule)),
            Action::NoMatch { sw: s, pkt } => format!("nomatch({}, {})", sw(s), p(pkt)),
            Action::Ctrl { sw: s, pkt } => format!("ctrl({}, {})", sw(s), p(pkt)),
            Action::Fwd { sw: s, pkt, ports } => format!("fwd({}, {}, {ports})", sw(s), p(pkt)),
            Action::Add { sw: s, rule } => format!("add({}, {})", sw(s), r(rule)),
            Action::Del { sw: s, rule } => format!("del({}, {})", sw(s), r(rule)),
            Action::Brepl { sw: s, xid } => format!("brepl({}, {xid})", sw(s)),
            Action::Bsync { sw: s, xid } => format!("bsync({}, {xid})", sw(s)),
        }
    }

    /// Id-free view of a state, comparable across models and runs.
    pub fn resolve(&self, s: &SystemState) -> ResolvedState {
        let pk = |i: u32| self.packets.get(i);
        ResolvedState {
            hosts: s.hosts.iter().map(|h| h.rcvq.iter().map(pk).collect()).collect(),
            switches: s
                .switches
                .iter()
                .map(|st| ResolvedSwitch {
                    ft: st.ft.iter().map(|i| self.rules.get(i)).collect(),
                    pq: st.pq.iter().map(pk).collect(),
                    fq: st.fq.iter().map(|(p, ports)| (pk(p.0), *ports)).collect(),
                    cq: st
                        .cq
                        .iter()
                        .map(|e| match e {
                            CqEntry::FlowMods(set) => ResolvedCq::FlowMods(
                                set.iter().map(|fm| (self.rules.get(fm.rule.0), fm.op)).collect(),
                            ),
                            CqEntry::Barrier(x) => ResolvedCq::Barrier(*x),
                        })
                        .collect(),
                })
                .collect(),
            cs: s.ctrl.cs.words().to_vec(),
            rq: s.ctrl.rq.iter().map(|(sw, p)| (*sw, pk(p.0))).collect(),
            brq: s.ctrl.brq.iter().copied().collect(),
        }
    }
}

fn best_in(rules: &[Rule], ft: &crate::model::IdSet, pkt: &Packet) -> Option<RuleId> {
    let mut best: Option<(u16, u32)> = None;
    for id in ft.iter() {
        let r = &rules[id as usize];
        if r.pattern.matches(pkt) && best.map_or(true, |(prio, _)| r.priority > prio) {
            best = Some((r.priority, id));
        }
    }
    best.map(|(_, id)| RuleId(id))
}

fn head_has(cq: &[CqEntry], fm: FlowMod) -> bool {
    matches!(cq.first(), Some(CqEntry::FlowMods(set)) if set.contains(&fm))
}

#[derive(Clone, Copy, Debug)]
enum Queued {
    Mod(FlowMod),
    Barrier(Xid),
}

/// Appends to a control queue. A flow modification whose effect is already
/// guaranteed by the queue (or by the table when nothing is pending for that
/// rule) is absorbed, as is a barrier repeating the barrier at the tail.
fn append(cq: &mut Vec<CqEntry>, ft: &crate::model::IdSet, q: Queued) {
    match q {
        Queued::Mod(fm) => {
            let other = FlowMod { rule: fm.rule, op: if fm.op == FlowOp::Add { FlowOp::Del } else { FlowOp::Add } };
            let latest = cq.iter().rev().find_map(|e| match e {
                CqEntry::FlowMods(set) if set.contains(&fm) || set.contains(&other) => {
                    Some(set.contains(&fm) && !set.contains(&other))
                }
                _ => None,
            });
            let redundant = match latest {
                Some(same) => same,
                None => (fm.op == FlowOp::Add) == ft.contains(fm.rule.0),
            };
            if redundant {
                return;
            }
            match cq.last_mut() {
                Some(CqEntry::FlowMods(set)) => {
                    set.insert(fm);
                }
                _ => cq.push(CqEntry::FlowMods(VecSet::from([fm]))),
            }
        }
        Queued::Barrier(x) => {
            if cq.last() != Some(&CqEntry::Barrier(x)) {
                cq.push(CqEntry::Barrier(x));
            }
        }
    }
}

/// An action with packets and rules spelled out instead of interned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResolvedAction {
    Send { host: HostId, port: PortId, pkt: Packet },
    Recv { host: HostId, pkt: Packet },
    Match { sw: SwitchId, pkt: Packet, rule: Rule },
    NoMatch { sw: SwitchId, pkt: Packet },
    Ctrl { sw: SwitchId, pkt: Packet },
    Fwd { sw: SwitchId, pkt: Packet, ports: PortSet },
    Add { sw: SwitchId, rule: Rule },
    Del { sw: SwitchId, rule: Rule },
    Brepl { sw: SwitchId, xid: Xid },
    Bsync { sw: SwitchId, xid: Xid },
}

impl Model {
    pub fn resolve_action(&self, a: &Action) -> ResolvedAction {
        let p = |x: PacketId| self.packet(x);
        let r = |x: RuleId| self.rule(x);
        match *a {
            Action::Send { host, port, pkt } => ResolvedAction::Send { host, port, pkt: p(pkt) },
            Action::Recv { host, pkt } => ResolvedAction::Recv { host, pkt: p(pkt) },
            Action::Match { sw, pkt, rule } => ResolvedAction::Match { sw, pkt: p(pkt), rule: r(rule) },
            Action::NoMatch { sw, pkt } => ResolvedAction::NoMatch { sw, pkt: p(pkt) },
            Action::Ctrl { sw, pkt } => ResolvedAction::Ctrl { sw, pkt: p(pkt) },
            Action::Fwd { sw, pkt, ports } => ResolvedAction::Fwd { sw, pkt: p(pkt), ports },
            Action::Add { sw, rule } => ResolvedAction::Add { sw, rule: r(rule) },
            Action::Del { sw, rule } => ResolvedAction::Del { sw, rule: r(rule) },
            Action::Brepl { sw, xid } => ResolvedAction::Brepl { sw, xid },
            Action::Bsync { sw, xid } => ResolvedAction::Bsync { sw, xid },
        }
    }

    /// Interns the packets and rules an action names.
    pub fn intern_action(&self, a: &ResolvedAction) -> Result<Action, TableFull> {
        let p = |x: Packet| self.intern_packet(x);
        let r = |x: Rule| self.intern_rule(x);
        Ok(match *a {
            ResolvedAction::Send { host, port, pkt } => Action::Send { host, port, pkt: p(pkt)? },
            ResolvedAction::Recv { host, pkt } => Action::Recv { host, pkt: p(pkt)? },
            ResolvedAction::Match { sw, pkt, rule } => Action::Match { sw, pkt: p(pkt)?, rule: r(rule)? },
            ResolvedAction::NoMatch { sw, pkt } => Action::NoMatch { sw, pkt: p(pkt)? },
            ResolvedAction::Ctrl { sw, pkt } => Action::Ctrl { sw, pkt: p(pkt)? },
            ResolvedAction::Fwd { sw, pkt, ports } => Action::Fwd { sw, pkt: p(pkt)?, ports },
            ResolvedAction::Add { sw, rule } => Action::Add { sw, rule: r(rule)? },
            ResolvedAction::Del { sw, rule } => Action::Del { sw, rule: r(rule)? },
            ResolvedAction::Brepl { sw, xid } => Action::Brepl { sw, xid },
            ResolvedAction::Bsync { sw, xid } => Action::Bsync { sw, xid },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResolvedCq {
    FlowMods(BTreeSet<(Rule, FlowOp)>),
    Barrier(Xid),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResolvedSwitch {
    pub ft: BTreeSet<Rule>,
    pub pq: BTreeSet<Packet>,
    pub fq: BTreeSet<(Packet, PortSet)>,
    pub cq: Vec<ResolvedCq>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResolvedState {
    pub hosts: Vec<BTreeSet<Packet>>,
    pub switches: Vec<ResolvedSwitch>,
    pub cs: Vec<u64>,
    pub rq: BTreeSet<(SwitchId, Packet)>,
    pub brq: BTreeSet<(SwitchId, Xid)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IdSet;

    fn fm(r: u32, op: FlowOp) -> FlowMod {
        FlowMod { rule: RuleId(r), op }
    }

    fn add_q(r: u32) -> Queued {
        Queued::Mod(fm(r, FlowOp::Add))
    }

    #[test]
    fn batch_with_barrier_splits_into_sets() {
        let mut cq = Vec::new();
        let ft = IdSet::new();
        for q in [add_q(2), add_q(1), Queued::Barrier(Xid(7)), add_q(3)] {
            append(&mut cq, &ft, q);
        }
        assert_eq!(
            cq,
            vec![
                CqEntry::FlowMods(VecSet::from([fm(1, FlowOp::Add), fm(2, FlowOp::Add)])),
                CqEntry::Barrier(Xid(7)),
                CqEntry::FlowMods(VecSet::from([fm(3, FlowOp::Add)])),
            ]
        );
    }

    #[test]
    fn repeated_batch_is_absorbed() {
        let mut cq = Vec::new();
        let ft = IdSet::new();
        let batch = [add_q(2), add_q(1), Queued::Barrier(Xid(7)), add_q(3)];
        for q in batch {
            append(&mut cq, &ft, q);
        }
        for _ in 0..3 {
            for q in batch {
                append(&mut cq, &ft, q);
            }
        }
        assert_eq!(cq.len(), 4);
        assert_eq!(cq[3], CqEntry::Barrier(Xid(7)));
    }

    #[test]
    fn add_of_installed_rule_is_absorbed_unless_delete_pending() {
        let mut ft = IdSet::new();
        ft.insert(5);
        let mut cq = Vec::new();
        append(&mut cq, &ft, add_q(5));
        assert!(cq.is_empty());
        append(&mut cq, &ft, Queued::Mod(fm(5, FlowOp::Del)));
        append(&mut cq, &ft, Queued::Barrier(Xid(1)));
        append(&mut cq, &ft, add_q(5));
        assert_eq!(cq.len(), 3);
    }
}
