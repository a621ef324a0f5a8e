//! Controller programs and the interface the semantics drives them through.

use std::collections::BTreeMap;
use std::fmt::Debug;

use thiserror::Error;

use crate::model::{CtrlState, Packet, PacketSchema, Rule, SchemaError, Xid};
use crate::topology::{HostId, PortId, PortSet, SwitchId, Topology};

mod cp1;
mod cp2;
mod cp3;
mod cp4;
mod cp5;

pub use cp1::StatelessFirewall;
pub use cp2::StatefulFirewall;
pub use cp3::MacLearning;
pub use cp4::WrongNesting;
pub use cp5::ConsistentUpdate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("unknown controller program `{0}`")]
    UnknownProgram(String),
    #[error("bad parameter `{param}`: {reason}")]
    BadParam { param: String, reason: String },
    #[error("switch `{switch}` has no port {port}")]
    MissingPort { switch: String, port: u8 },
    #[error("unknown controller predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{name}` expects {expected}")]
    BadArgs { name: String, expected: String },
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// A message queued towards a switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ControlMessage {
    Add(Rule),
    Del(Rule),
    Barrier(Xid),
}

/// Result of one handler invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandlerOutput {
    pub cs: CtrlState,
    /// Messages in emission order. Order matters per target switch only.
    pub messages: Vec<(SwitchId, ControlMessage)>,
    pub packet_outs: Vec<(SwitchId, Packet, PortSet)>,
}

impl HandlerOutput {
    pub fn unchanged(cs: &CtrlState) -> Self {
        HandlerOutput { cs: cs.clone(), messages: Vec::new(), packet_outs: Vec::new() }
    }

    pub fn send(&mut self, sw: SwitchId, m: ControlMessage) {
        self.messages.push((sw, m));
    }

    pub fn packet_out(&mut self, sw: SwitchId, pkt: Packet, ports: PortSet) {
        self.packet_outs.push((sw, pkt, ports));
    }
}

/// A packet a host may send at any time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Representative {
    pub host: HostId,
    pub port: PortId,
    pub header: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgKind {
    Switch,
    Host,
    Packet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtrlArg {
    Switch(SwitchId),
    Host(HostId),
    Packet(Packet),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateSpec {
    pub name: &'static str,
    pub params: Vec<ArgKind>,
}

#[derive(Clone, Debug)]
pub struct ProgramMetadata {
    pub name: &'static str,
    pub variant: String,
    pub schema: PacketSchema,
    pub representatives: Vec<Representative>,
    pub initial_rules: Vec<(SwitchId, Rule)>,
    pub order_sensitive: bool,
    pub cs_bits: usize,
    pub predicates: Vec<PredicateSpec>,
}

pub trait ControllerProgram: Send + Sync + Debug {
    fn metadata(&self) -> &ProgramMetadata;

    fn initial_cs(&self) -> CtrlState {
        CtrlState::zeros(self.metadata().cs_bits)
    }

    fn pkt_in(&self, cs: &CtrlState, sw: SwitchId, pkt: &Packet) -> Result<HandlerOutput, ProgramError>;

    fn barrier_in(&self, cs: &CtrlState, sw: SwitchId, xid: Xid) -> Result<HandlerOutput, ProgramError>;

    /// Evaluates a named predicate over the controller state.
    fn predicate(&self, cs: &CtrlState, name: &str, args: &[CtrlArg]) -> Result<bool, ProgramError>;

    fn describe_cs(&self, cs: &CtrlState) -> String;
}

/// Program name plus free-form parameters, as written in a scenario.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProgramSpec {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl ProgramSpec {
    pub fn new(name: &str) -> Self {
        ProgramSpec { name: name.to_string(), params: BTreeMap::new() }
    }

    pub fn param(mut self, k: &str, v: &str) -> Self {
        self.params.insert(k.to_string(), v.to_string());
        self
    }
}

pub const PROGRAMS: &[&str] = &["cp1", "cp2", "cp3", "cp4", "cp5"];

pub fn build(spec: &ProgramSpec, topo: &Topology) -> Result<Box<dyn ControllerProgram>, ProgramError> {
    let p = Params { spec, topo };
    Ok(match spec.name.as_str() {
        "cp1" | "stateless_firewall" => Box::new(StatelessFirewall::new(&p)?),
        "cp2" | "stateful_firewall" => Box::new(StatefulFirewall::new(&p)?),
        "cp3" | "mac_learning" => Box::new(MacLearning::new(&p)?),
        "cp4" | "wrong_nesting" => Box::new(WrongNesting::new(&p)?),
        "cp5" | "consistent_update" => Box::new(ConsistentUpdate::new(&p)?),
        other => return Err(ProgramError::UnknownProgram(other.to_string())),
    })
}

pub(crate) struct Params<'a> {
    pub spec: &'a ProgramSpec,
    pub topo: &'a Topology,
}

impl Params<'_> {
    fn bad(&self, param: &str, reason: impl Into<String>) -> ProgramError {
        ProgramError::BadParam { param: param.to_string(), reason: reason.into() }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.spec.params.get(key).map(String::as_str)
    }

    pub fn variant(&self, allowed: &[&str], default: &str) -> Result<String, ProgramError> {
        let v = self.get("variant").unwrap_or(default);
        if allowed.contains(&v) {
            Ok(v.to_string())
        } else {
            Err(self.bad("variant", format!("expected one of {}", allowed.join(", "))))
        }
    }

    pub fn host(&self, key: &str, default: usize) -> Result<HostId, ProgramError> {
        match self.get(key) {
            Some(name) => self.topo.lookup_host(name).ok_or_else(|| self.bad(key, format!("no host `{name}`"))),
            None if default < self.topo.host_count() => Ok(HostId(default as u16)),
            None => Err(self.bad(key, "topology has too few hosts")),
        }
    }

    pub fn switch(&self, key: &str) -> Result<Option<SwitchId>, ProgramError> {
        match self.get(key) {
            Some(name) => self
                .topo
                .lookup_switch(name)
                .map(Some)
                .ok_or_else(|| self.bad(key, format!("no switch `{name}`"))),
            None => Ok(None),
        }
    }

    pub fn u32(&self, key: &str, default: u32) -> Result<u32, ProgramError> {
        match self.get(key) {
            Some(v) => v.parse().map_err(|_| self.bad(key, format!("`{v}` is not a number"))),
            None => Ok(default),
        }
    }

    /// Every switch must own each of `ports`.
    pub fn require_ports(&self, ports: &[u8]) -> Result<(), ProgramError> {
        for sw in self.topo.switches() {
            for &p in ports {
                if !self.topo.has_port(sw, PortId(p)) {
                    return Err(ProgramError::MissingPort {
                        switch: self.topo.switch_name(sw).to_string(),
                        port: p,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn check_unused(&self, known: &[&str]) -> Result<(), ProgramError> {
        for k in self.spec.params.keys() {
            if k != "variant" && !known.contains(&k.as_str()) {
                return Err(self.bad(k, "unknown parameter"));
            }
        }
        Ok(())
    }
}

pub(crate) fn no_predicate(name: &str) -> ProgramError {
    ProgramError::UnknownPredicate(name.to_string())
}

pub(crate) fn bad_args(name: &str, expected: &str) -> ProgramError {
    ProgramError::BadArgs { name: name.to_string(), expected: expected.to_string() }
}

/// `host` may send each of `headers` on each of its ports.
pub(crate) fn reps_from(topo: &Topology, host: HostId, headers: &[u32]) -> Vec<Representative> {
    let mut out = Vec::new();
    for &port in topo.ports(host) {
        for &header in headers {
            out.push(Representative { host, port, header });
        }
    }
    out
}
