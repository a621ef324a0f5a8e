//! Network wiring: switches, hosts and the port mapping between them.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SwitchId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HostId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    Switch(SwitchId),
    Host(HostId),
}

impl NodeId {
    pub fn as_switch(self) -> Option<SwitchId> {
        match self {
            NodeId::Switch(s) => Some(s),
            NodeId::Host(_) => None,
        }
    }

    pub fn as_host(self) -> Option<HostId> {
        match self {
            NodeId::Host(h) => Some(h),
            NodeId::Switch(_) => None,
        }
    }
}

impl From<SwitchId> for NodeId {
    fn from(s: SwitchId) -> Self {
        NodeId::Switch(s)
    }
}

impl From<HostId> for NodeId {
    fn from(h: HostId) -> Self {
        NodeId::Host(h)
    }
}

/// A port number. Ports `1..=MAX` are physical; [`PortId::DROP`] is reserved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortId(pub u8);

impl PortId {
    /// Forwarding to this port discards the copy.
    pub const DROP: PortId = PortId(63);
    pub const MAX: u8 = 62;

    pub fn is_drop(self) -> bool {
        self == Self::DROP
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_drop() {
            f.write_str("drop")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// A set of output ports, possibly containing [`PortId::DROP`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortSet(pub u64);

impl PortSet {
    pub const EMPTY: PortSet = PortSet(0);

    pub fn single(p: PortId) -> Self {
        PortSet(1u64 << p.0)
    }

    pub fn drop() -> Self {
        Self::single(PortId::DROP)
    }

    pub fn insert(&mut self, p: PortId) {
        self.0 |= 1u64 << p.0;
    }

    pub fn with(mut self, p: PortId) -> Self {
        self.insert(p);
        self
    }

    pub fn contains(self, p: PortId) -> bool {
        self.0 & (1u64 << p.0) != 0
    }

    pub fn has_drop(self) -> bool {
        self.contains(PortId::DROP)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = PortId> {
        let bits = self.0;
        (0..64u8).filter(move |i| bits & (1u64 << i) != 0).map(PortId)
    }
}

impl FromIterator<PortId> for PortSet {
    fn from_iter<I: IntoIterator<Item = PortId>>(iter: I) -> Self {
        let mut s = PortSet::EMPTY;
        for p in iter {
            s.insert(p);
        }
        s
    }
}

impl fmt::Display for PortSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub node: NodeId,
    pub port: PortId,
}

impl Location {
    pub fn new(node: impl Into<NodeId>, port: PortId) -> Self {
        Location { node: node.into(), port }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("unknown location {0}")]
    UnknownLocation(String),
    #[error("port is the reserved drop port")]
    DropPort,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node name `{0}`")]
    DuplicateName(String),
    #[error("endpoint reused: {0}")]
    EndpointReused(String),
    #[error("link connects {0} to itself")]
    SelfLink(String),
    #[error("port {port} on `{node}` is outside 1..={max}", max = PortId::MAX)]
    BadPort { node: String, port: u8 },
    #[error("hosts `{0}` and `{1}` are linked directly")]
    HostToHost(String, String),
    #[error("topology has no switches")]
    NoSwitches,
    #[error("too many nodes: at most {0} switches are supported")]
    TooManySwitches(usize),
}

/// An immutable, validated topology. The port map is an involution.
#[derive(Debug, Clone)]
pub struct Topology {
    switch_names: Vec<String>,
    host_names: Vec<String>,
    cables: Vec<(Location, Location)>,
    peer: HashMap<Location, Location>,
    ports: BTreeMap<NodeId, Vec<PortId>>,
}

/// Builder used to declare nodes and cables before validation.
#[derive(Debug, Default, Clone)]
pub struct TopologyBuilder {
    switches: Vec<String>,
    hosts: Vec<String>,
    cables: Vec<((String, u8), (String, u8))>,
}

pub const MAX_SWITCHES: usize = 32;

impl TopologyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn switch(mut self, name: impl Into<String>) -> Self {
        self.switches.push(name.into());
        self
    }

    pub fn host(mut self, name: impl Into<String>) -> Self {
        self.hosts.push(name.into());
        self
    }

    pub fn link(mut self, a: (&str, u8), b: (&str, u8)) -> Self {
        self.cables.push(((a.0.to_string(), a.1), (b.0.to_string(), b.1)));
        self
    }

    pub fn add_switch(&mut self, name: impl Into<String>) {
        self.switches.push(name.into());
    }

    pub fn add_host(&mut self, name: impl Into<String>) {
        self.hosts.push(name.into());
    }

    pub fn add_link(&mut self, a: (String, u8), b: (String, u8)) {
        self.cables.push((a, b));
    }

    /// Validates the declaration. All violations are reported together.
    pub fn build(self) -> Result<Topology, Vec<TopologyError>> {
        let mut errors = Vec::new();
        let mut names: HashMap<&str, NodeId> = HashMap::new();
        for (i, n) in self.switches.iter().enumerate() {
            if names.insert(n, NodeId::Switch(SwitchId(i as u16))).is_some() {
                errors.push(TopologyError::DuplicateName(n.clone()));
            }
        }
        for (i, n) in self.hosts.iter().enumerate() {
            if names.insert(n, NodeId::Host(HostId(i as u16))).is_some() {
                errors.push(TopologyError::DuplicateName(n.clone()));
            }
        }
        if self.switches.is_empty() {
            errors.push(TopologyError::NoSwitches);
        }
        if self.switches.len() > MAX_SWITCHES {
            errors.push(TopologyError::TooManySwitches(MAX_SWITCHES));
        }

        let mut peer = HashMap::new();
        let mut cables = Vec::new();
        for ((an, ap), (bn, bp)) in &self.cables {
            let mut resolve = |n: &String, p: u8| -> Option<Location> {
                let node = match names.get(n.as_str()) {
                    Some(node) => *node,
                    None => {
                        errors.push(TopologyError::UnknownNode(n.clone()));
                        return None;
                    }
                };
                if p == 0 || p > PortId::MAX {
                    errors.push(TopologyError::BadPort { node: n.clone(), port: p });
                    return None;
                }
                Some(Location { node, port: PortId(p) })
            };
            let (Some(a), Some(b)) = (resolve(an, *ap), resolve(bn, *bp)) else {
                continue;
            };
            if a == b {
                errors.push(TopologyError::SelfLink(format!("{an}:{ap}")));
                continue;
            }
            if matches!((a.node, b.node), (NodeId::Host(_), NodeId::Host(_))) {
                errors.push(TopologyError::HostToHost(an.clone(), bn.clone()));
                continue;
            }
            let mut clash = false;
            for (loc, n, p) in [(a, an, ap), (b, bn, bp)] {
                if peer.contains_key(&loc) {
                    errors.push(TopologyError::EndpointReused(format!("{n}:{p}")));
                    clash = true;
                }
            }
            if clash {
                continue;
            }
            peer.insert(a, b);
            peer.insert(b, a);
            cables.push((a, b));
        }

        if !errors.is_empty() {
            return Err(errors);
        }
        let mut ports: BTreeMap<NodeId, Vec<PortId>> = BTreeMap::new();
        for i in 0..self.switches.len() {
            ports.insert(NodeId::Switch(SwitchId(i as u16)), Vec::new());
        }
        for i in 0..self.hosts.len() {
            ports.insert(NodeId::Host(HostId(i as u16)), Vec::new());
        }
        for loc in peer.keys() {
            ports.get_mut(&loc.node).expect("node registered").push(loc.port);
        }
        for v in ports.values_mut() {
            v.sort();
        }
        Ok(Topology {
            switch_names: self.switches,
            host_names: self.hosts,
            cables,
            peer,
            ports,
        })
    }
}

impl Topology {
    pub fn builder() -> TopologyBuilder {
        TopologyBuilder::new()
    }

    /// Follows the cable attached to `loc`.
    pub fn next_hop(&self, loc: Location) -> Result<Location, TopologyError> {
        if loc.port.is_drop() {
            return Err(TopologyError::DropPort);
        }
        self.peer
            .get(&loc)
            .copied()
            .ok_or_else(|| TopologyError::UnknownLocation(self.loc_name(loc)))
    }

    pub fn switch_count(&self) -> usize {
        self.switch_names.len()
    }

    pub fn host_count(&self) -> usize {
        self.host_names.len()
    }

    pub fn switches(&self) -> impl Iterator<Item = SwitchId> + '_ {
        (0..self.switch_names.len()).map(|i| SwitchId(i as u16))
    }

    pub fn hosts(&self) -> impl Iterator<Item = HostId> + '_ {
        (0..self.host_names.len()).map(|i| HostId(i as u16))
    }

    pub fn ports(&self, node: impl Into<NodeId>) -> &[PortId] {
        self.ports.get(&node.into()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_port(&self, node: impl Into<NodeId>, port: PortId) -> bool {
        self.ports(node).contains(&port)
    }

    pub fn cables(&self) -> &[(Location, Location)] {
        &self.cables
    }

    pub fn switch_name(&self, s: SwitchId) -> &str {
        &self.switch_names[s.0 as usize]
    }

    pub fn host_name(&self, h: HostId) -> &str {
        &self.host_names[h.0 as usize]
    }

    pub fn node_name(&self, n: NodeId) -> &str {
        match n {
            NodeId::Switch(s) => self.switch_name(s),
            NodeId::Host(h) => self.host_name(h),
        }
    }

    pub fn loc_name(&self, loc: Location) -> String {
        let node = match loc.node {
            NodeId::Switch(s) if (s.0 as usize) < self.switch_names.len() => self.switch_name(s),
            NodeId::Host(h) if (h.0 as usize) < self.host_names.len() => self.host_name(h),
            _ => "?",
        };
        format!("{node}:{}", loc.port)
    }

    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        if let Some(i) = self.switch_names.iter().position(|n| n == name) {
            return Some(NodeId::Switch(SwitchId(i as u16)));
        }
        self.host_names
            .iter()
            .position(|n| n == name)
            .map(|i| NodeId::Host(HostId(i as u16)))
    }

    pub fn lookup_switch(&self, name: &str) -> Option<SwitchId> {
        self.lookup(name).and_then(NodeId::as_switch)
    }

    pub fn lookup_host(&self, name: &str) -> Option<HostId> {
        self.lookup(name).and_then(NodeId::as_host)
    }

    /// First port of `sw` on a shortest path to `host`.
    pub fn port_towards(&self, sw: SwitchId, host: HostId) -> Option<PortId> {
        let target = NodeId::Host(host);
        let mut seen = HashMap::new();
        let mut queue = VecDeque::new();
        for &p in self.ports(sw) {
            let next = self.peer[&Location::new(sw, p)].node;
            if next == target {
                return Some(p);
            }
            if let NodeId::Switch(_) = next {
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(next) {
                    e.insert(p);
                    queue.push_back(next);
                }
            }
        }
        seen.insert(NodeId::Switch(sw), PortId(0));
        while let Some(n) = queue.pop_front() {
            let first = seen[&n];
            for &p in self.ports(n) {
                let next = self.peer[&Location::new(n, p)].node;
                if next == target {
                    return Some(first);
                }
                if matches!(next, NodeId::Switch(_)) && !seen.contains_key(&next) {
                    seen.insert(next, first);
                    queue.push_back(next);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Topology {
        Topology::builder()
            .switch("s0")
            .switch("s1")
            .switch("s2")
            .host("h0")
            .host("h1")
            .host("h2")
            .link(("s0", 2), ("s1", 1))
            .link(("s1", 2), ("s2", 1))
            .link(("s2", 2), ("s0", 1))
            .link(("h0", 1), ("s0", 3))
            .link(("h1", 1), ("s1", 3))
            .link(("h2", 1), ("s2", 3))
            .build()
            .unwrap()
    }

    #[test]
    fn next_hop_is_an_involution() {
        let t = ring();
        for (a, b) in t.cables() {
            assert_eq!(t.next_hop(*a).unwrap(), *b);
            assert_eq!(t.next_hop(*b).unwrap(), *a);
        }
        for n in t.switches().map(NodeId::from).chain(t.hosts().map(NodeId::from)) {
            for &p in t.ports(n) {
                let loc = Location::new(n, p);
                assert_eq!(t.next_hop(t.next_hop(loc).unwrap()).unwrap(), loc);
            }
        }
    }

    #[test]
    fn ring_neighbours() {
        let t = ring();
        let s0 = t.lookup_switch("s0").unwrap();
        let s1 = t.lookup_switch("s1").unwrap();
        assert_eq!(t.next_hop(Location::new(s0, PortId(2))).unwrap(), Location::new(s1, PortId(1)));
    }

    #[test]
    fn drop_and_unknown_ports_are_errors() {
        let t = ring();
        let s0 = t.lookup_switch("s0").unwrap();
        assert_eq!(t.next_hop(Location::new(s0, PortId::DROP)), Err(TopologyError::DropPort));
        assert!(matches!(
            t.next_hop(Location::new(s0, PortId(9))),
            Err(TopologyError::UnknownLocation(_))
        ));
    }

    #[test]
    fn reused_endpoint_is_reported() {
        let errs = Topology::builder()
            .switch("a")
            .switch("b")
            .host("h")
            .link(("a", 1), ("b", 1))
            .link(("h", 1), ("a", 1))
            .build()
            .unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, TopologyError::EndpointReused(s) if s == "a:1")));
    }

    #[test]
    fn all_violations_reported() {
        let errs = Topology::builder()
            .switch("a")
            .host("h")
            .host("g")
            .link(("a", 0), ("h", 1))
            .link(("h", 2), ("g", 1))
            .link(("x", 1), ("a", 2))
            .build()
            .unwrap_err();
        assert_eq!(errs.len(), 3, "{errs:?}");
    }

    #[test]
    fn port_towards_follows_shortest_path() {
        let t = ring();
        let s0 = t.lookup_switch("s0").unwrap();
        assert_eq!(t.port_towards(s0, t.lookup_host("h0").unwrap()), Some(PortId(3)));
        assert_eq!(t.port_towards(s0, t.lookup_host("h1").unwrap()), Some(PortId(2)));
        assert_eq!(t.port_towards(s0, t.lookup_host("h2").unwrap()), Some(PortId(1)));
    }

    #[test]
    fn portset_roundtrip() {
        let s: PortSet = [PortId(1), PortId(3), PortId::DROP].into_iter().collect();
        assert!(s.has_drop());
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![PortId(1), PortId(3), PortId::DROP]);
        assert_eq!(s.to_string(), "{1,3,drop}");
    }
}
