use super::*;
use crate::model::{bits_for, FieldSpec, Pattern};
use crate::topology::Location;

/// Consistent two-switch update. The guard switch starts with a drop-all
/// rule; the fixed variant holds packets until the guard acknowledges the
/// new rule with a barrier reply.
#[derive(Debug)]
pub struct ConsistentUpdate {
    meta: ProgramMetadata,
    buggy: bool,
    server: HostId,
    guard: SwitchId,
    xid: Xid,
    rule_s: Rule,
    switches: Vec<SwitchId>,
    header_values: usize,
    port_slots: usize,
}

const RECEIVED: usize = 0;

impl ConsistentUpdate {
    pub(crate) fn new(p: &Params) -> Result<Self, ProgramError> {
        p.check_unused(&["client", "server", "guard", "xid"])?;
        let variant = p.variant(&["buggy", "fixed"], "fixed")?;
        p.require_ports(&[2])?;
        let topo = p.topo;
        let client = p.host("client", 0)?;
        let server = p.host("server", 1)?;
        let guard = match p.switch("guard")? {
            Some(g) => g,
            None => topo
                .cables()
                .iter()
                .find_map(|(a, b)| match (a.node, b.node) {
                    (crate::topology::NodeId::Switch(s), n) | (n, crate::topology::NodeId::Switch(s))
                        if n == server.into() =>
                    {
                        Some(s)
                    }
                    _ => None,
                })
                .ok_or_else(|| ProgramError::BadParam {
                    param: "guard".into(),
                    reason: "server is not attached to a switch".into(),
                })?,
        };
        let hb = bits_for(topo.host_count());
        let schema = PacketSchema::new(vec![FieldSpec::host("dst", hb)], false)?;
        let headers: Vec<u32> = topo
            .hosts()
            .filter(|d| *d != client)
            .map(|d| schema.header(&[("dst", d.0 as u32)]))
            .collect::<Result<_, _>>()?;
        let rule_s = Rule::new(2, Pattern::any().field(&schema, "dst", server.0 as u32)?, PortSet::single(PortId(2)));
        let drop_all = Rule::new(0, Pattern::any(), PortSet::drop());
        let max_port = topo.switches().flat_map(|s| topo.ports(s).iter().map(|p| p.0)).max().unwrap_or(0);
        let header_values = 1usize << hb;
        let port_slots = max_port as usize + 1;
        let meta = ProgramMetadata {
            name: "cp5",
            variant: variant.clone(),
            representatives: reps_from(topo, client, &headers),
            schema,
            initial_rules: vec![(guard, drop_all)],
            order_sensitive: false,
            cs_bits: 1 + topo.switch_count() * header_values * port_slots,
            predicates: vec![
                PredicateSpec { name: "received", params: vec![] },
                PredicateSpec { name: "held", params: vec![ArgKind::Packet, ArgKind::Switch] },
            ],
        };
        Ok(ConsistentUpdate {
            meta,
            buggy: variant == "buggy",
            server,
            guard,
            xid: Xid(p.u32("xid", 1)?),
            rule_s,
            switches: topo.switches().collect(),
            header_values,
            port_slots,
        })
    }

    fn held_bit(&self, sw: SwitchId, pkt: &Packet) -> usize {
        1 + (sw.0 as usize * self.header_values + pkt.header as usize) * self.port_slots + pkt.loc.port.0 as usize
    }

    fn to_server(&self, pkt: &Packet) -> bool {
        self.meta.schema.get(pkt.header, 0) == self.server.0 as u32
    }
}

impl ControllerProgram for ConsistentUpdate {
    fn metadata(&self) -> &ProgramMetadata {
        &self.meta
    }

    fn pkt_in(&self, cs: &CtrlState, sw: SwitchId, pkt: &Packet) -> Result<HandlerOutput, ProgramError> {
        let mut out = HandlerOutput::unchanged(cs);
        let fwd = PortSet::single(PortId(2));
        if self.buggy {
            if self.to_server(pkt) {
                for &s in &self.switches {
                    out.send(s, ControlMessage::Add(self.rule_s));
                }
            }
            out.packet_out(sw, *pkt, fwd);
            return Ok(out);
        }
        if self.to_server(pkt) && !cs.bit(RECEIVED) {
            let bit = self.held_bit(sw, pkt);
            if !cs.bit(bit) {
                out.cs.set_bit(bit, true);
                out.send(self.guard, ControlMessage::Add(self.rule_s));
                out.send(self.guard, ControlMessage::Barrier(self.xid));
            }
        } else {
            out.packet_out(sw, *pkt, fwd);
        }
        Ok(out)
    }

    fn barrier_in(&self, cs: &CtrlState, _sw: SwitchId, xid: Xid) -> Result<HandlerOutput, ProgramError> {
        let mut out = HandlerOutput::unchanged(cs);
        if xid != self.xid {
            return Ok(out);
        }
        out.cs.set_bit(RECEIVED, true);
        for &s in self.switches.iter().filter(|s| **s != self.guard) {
            out.send(s, ControlMessage::Add(self.rule_s));
        }
        for &s in &self.switches {
            for header in 0..self.header_values as u32 {
                for port in 0..self.port_slots as u8 {
                    let p = Packet::new(header, Location::new(s, PortId(port)));
                    let bit = self.held_bit(s, &p);
                    if out.cs.bit(bit) && self.to_server(&p) {
                        out.cs.set_bit(bit, false);
                        out.packet_out(s, p, PortSet::single(PortId(2)));
                    }
                }
            }
        }
        Ok(out)
    }

    fn predicate(&self, cs: &CtrlState, name: &str, args: &[CtrlArg]) -> Result<bool, ProgramError> {
        match (name, args) {
            ("received", []) => Ok(cs.bit(RECEIVED)),
            ("held", [CtrlArg::Packet(p), CtrlArg::Switch(sw)]) => Ok(cs.bit(self.held_bit(*sw, p))),
            ("received", _) => Err(bad_args(name, "no arguments")),
            ("held", _) => Err(bad_args(name, "(packet, switch)")),
            _ => Err(no_predicate(name)),
        }
    }

    fn describe_cs(&self, cs: &CtrlState) -> String {
        let held = (1..self.meta.cs_bits).filter(|&b| cs.bit(b)).count();
        format!("received={} held={held}", cs.bit(RECEIVED))
    }
}
