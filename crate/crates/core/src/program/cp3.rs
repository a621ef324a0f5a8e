use super::*;
use crate::model::{bits_for, FieldSpec, Pattern};

/// Learning switch: remembers the ingress port of each source address and
/// floods when the destination is unknown. Packets carry a switch history.
#[derive(Debug)]
pub struct MacLearning {
    meta: ProgramMetadata,
    hosts: usize,
    port_bits: usize,
    /// Ports of each switch, used for flooding.
    ports: Vec<PortSet>,
}

impl MacLearning {
    pub(crate) fn new(p: &Params) -> Result<Self, ProgramError> {
        p.check_unused(&[])?;
        p.variant(&["fixed"], "fixed")?;
        let topo = p.topo;
        let hb = bits_for(topo.host_count());
        let schema = PacketSchema::new(vec![FieldSpec::host("src", hb), FieldSpec::host("dst", hb)], true)?;
        let mut reps = Vec::new();
        for src in topo.hosts() {
            let headers: Vec<u32> = topo
                .hosts()
                .filter(|d| *d != src)
                .map(|d| schema.header(&[("src", src.0 as u32), ("dst", d.0 as u32)]))
                .collect::<Result<_, _>>()?;
            reps.extend(reps_from(topo, src, &headers));
        }
        let max_port = topo.switches().flat_map(|s| topo.ports(s).iter().map(|p| p.0)).max().unwrap_or(0);
        let port_bits = bits_for(max_port as usize + 1) as usize;
        let ports = topo.switches().map(|s| topo.ports(s).iter().copied().collect()).collect();
        let meta = ProgramMetadata {
            name: "cp3",
            variant: "fixed".into(),
            schema,
            representatives: reps,
            initial_rules: Vec::new(),
            order_sensitive: true,
            cs_bits: topo.switch_count() * topo.host_count() * port_bits,
            predicates: vec![PredicateSpec { name: "learned", params: vec![ArgKind::Switch, ArgKind::Host] }],
        };
        Ok(MacLearning { meta, hosts: topo.host_count(), port_bits, ports })
    }

    fn slot(&self, sw: SwitchId, host: u32) -> usize {
        (sw.0 as usize * self.hosts + host as usize) * self.port_bits
    }

    /// Learned port, 0 when unknown.
    fn lookup(&self, cs: &CtrlState, sw: SwitchId, host: u32) -> u8 {
        if host as usize >= self.hosts {
            return 0;
        }
        cs.bits(self.slot(sw, host), self.port_bits) as u8
    }
}

impl ControllerProgram for MacLearning {
    fn metadata(&self) -> &ProgramMetadata {
        &self.meta
    }

    fn pkt_in(&self, cs: &CtrlState, sw: SwitchId, pkt: &Packet) -> Result<HandlerOutput, ProgramError> {
        let s = &self.meta.schema;
        let (src, dst) = (s.get(pkt.header, 0), s.get(pkt.header, 1));
        let in_port = pkt.in_port();
        let mut out = HandlerOutput::unchanged(cs);
        if (src as usize) < self.hosts && self.lookup(cs, sw, src) == 0 {
            out.cs.set_bits(self.slot(sw, src), self.port_bits, in_port.0 as u64);
        }
        match self.lookup(&out.cs, sw, dst) {
            0 => {
                let mut flood = self.ports[sw.0 as usize];
                flood.0 &= !(1u64 << in_port.0);
                out.packet_out(sw, *pkt, flood);
            }
            port => {
                let fwd = PortSet::single(PortId(port));
                out.packet_out(sw, *pkt, fwd);
                let pattern = Pattern::any().field(s, "src", src)?.field(s, "dst", dst)?.in_port(in_port);
                out.send(sw, ControlMessage::Add(Rule::new(1, pattern, fwd)));
            }
        }
        Ok(out)
    }

    fn barrier_in(&self, cs: &CtrlState, _sw: SwitchId, _xid: Xid) -> Result<HandlerOutput, ProgramError> {
        Ok(HandlerOutput::unchanged(cs))
    }

    fn predicate(&self, cs: &CtrlState, name: &str, args: &[CtrlArg]) -> Result<bool, ProgramError> {
        if name != "learned" {
            return Err(no_predicate(name));
        }
        match args {
            [CtrlArg::Switch(sw), CtrlArg::Host(h)] => Ok(self.lookup(cs, *sw, h.0 as u32) != 0),
            _ => Err(bad_args(name, "(switch, host)")),
        }
    }

    fn describe_cs(&self, cs: &CtrlState) -> String {
        let mut parts = Vec::new();
        for sw in 0..self.ports.len() {
            for h in 0..self.hosts {
                let p = self.lookup(cs, SwitchId(sw as u16), h as u32);
                if p != 0 {
                    parts.push(format!("mac[{sw}][{h}]={p}"));
                }
            }
        }
        if parts.is_empty() {
            "-".into()
        } else {
            parts.join(" ")
        }
    }
}
