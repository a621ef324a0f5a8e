use super::*;
use crate::model::{bits_for, FieldSpec, Pattern};

/// One whitelisted TCP connection `src:sport -> dst:dport`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Connection {
    pub src: HostId,
    pub sport: u32,
    pub dst: HostId,
    pub dport: u32,
}

type Tuple = (u32, u32, u32, u32);

/// Stateful firewall replicated over every switch. Rules for an allowed
/// connection are confirmed with a barrier; the controller records which
/// switches have acknowledged them.
#[derive(Debug)]
pub struct StatefulFirewall {
    meta: ProgramMetadata,
    allowed: Vec<Connection>,
    xid_base: u32,
    switches: Vec<SwitchId>,
}

const TCP_BITS: u8 = 2;

fn parse_endpoint(p: &Params, s: &str) -> Result<(HostId, u32), ProgramError> {
    let bad = || ProgramError::BadParam { param: "allow".into(), reason: format!("bad endpoint `{s}`") };
    let (h, port) = s.trim().split_once(':').ok_or_else(bad)?;
    let host = p.topo.lookup_host(h.trim()).ok_or_else(bad)?;
    let port: u32 = port.trim().parse().map_err(|_| bad())?;
    if port >> TCP_BITS != 0 {
        return Err(bad());
    }
    Ok((host, port))
}

impl StatefulFirewall {
    pub(crate) fn new(p: &Params) -> Result<Self, ProgramError> {
        p.check_unused(&["allow", "client", "server", "xid", "reverse"])?;
        p.variant(&["fixed"], "fixed")?;
        p.require_ports(&[1, 2])?;
        let mut allowed = Vec::new();
        match p.get("allow") {
            Some(spec) => {
                for conn in spec.split(';').filter(|c| !c.trim().is_empty()) {
                    let (a, b) = conn.split_once("->").ok_or_else(|| ProgramError::BadParam {
                        param: "allow".into(),
                        reason: format!("expected `host:port -> host:port`, got `{conn}`"),
                    })?;
                    let (src, sport) = parse_endpoint(p, a)?;
                    let (dst, dport) = parse_endpoint(p, b)?;
                    allowed.push(Connection { src, sport, dst, dport });
                }
            }
            None => allowed.push(Connection { src: p.host("client", 0)?, sport: 1, dst: p.host("server", 1)?, dport: 1 }),
        }
        let hb = bits_for(p.topo.host_count());
        let schema = PacketSchema::new(
            vec![
                FieldSpec::host("src", hb),
                FieldSpec::int("sport", TCP_BITS),
                FieldSpec::host("dst", hb),
                FieldSpec::int("dport", TCP_BITS),
            ],
            false,
        )?;
        let reverse = match p.get("reverse") {
            None | Some("true") => true,
            Some("false") => false,
            Some(v) => {
                return Err(ProgramError::BadParam { param: "reverse".into(), reason: format!("`{v}` is not a boolean") })
            }
        };
        let mut reps = Vec::new();
        for c in &allowed {
            let fwd = header(&schema, (c.src.0 as u32, c.sport, c.dst.0 as u32, c.dport))?;
            reps.extend(reps_from(p.topo, c.src, &[fwd]));
            if reverse {
                let back = header(&schema, (c.dst.0 as u32, c.dport, c.src.0 as u32, c.sport))?;
                reps.extend(reps_from(p.topo, c.dst, &[back]));
            }
        }
        reps.dedup();
        let meta = ProgramMetadata {
            name: "cp2",
            variant: "fixed".into(),
            schema,
            representatives: reps,
            initial_rules: Vec::new(),
            order_sensitive: true,
            cs_bits: allowed.len() * p.topo.switch_count(),
            predicates: vec![PredicateSpec { name: "view", params: vec![ArgKind::Packet, ArgKind::Switch] }],
        };
        Ok(StatefulFirewall {
            meta,
            allowed,
            xid_base: p.u32("xid", 1)?,
            switches: p.topo.switches().collect(),
        })
    }

    fn tuple(&self, h: u32) -> Tuple {
        let s = &self.meta.schema;
        (s.get(h, 0), s.get(h, 1), s.get(h, 2), s.get(h, 3))
    }

    fn allowed_index(&self, t: Tuple) -> Option<usize> {
        self.allowed
            .iter()
            .position(|c| (c.src.0 as u32, c.sport, c.dst.0 as u32, c.dport) == t)
    }

    /// Connection a packet belongs to, in either direction.
    fn connection_of(&self, t: Tuple) -> Option<usize> {
        self.allowed_index(t).or_else(|| self.allowed_index((t.2, t.3, t.0, t.1)))
    }

    fn view_bit(&self, conn: usize, sw: SwitchId) -> usize {
        conn * self.switches.len() + sw.0 as usize
    }

    fn exact(&self, t: Tuple) -> Result<Pattern, ProgramError> {
        let s = &self.meta.schema;
        Ok(Pattern::any()
            .field(s, "src", t.0)?
            .field(s, "sport", t.1)?
            .field(s, "dst", t.2)?
            .field(s, "dport", t.3)?)
    }
}

fn header(s: &PacketSchema, t: Tuple) -> Result<u32, ProgramError> {
    Ok(s.header(&[("src", t.0), ("sport", t.1), ("dst", t.2), ("dport", t.3)])?)
}

impl ControllerProgram for StatefulFirewall {
    fn metadata(&self) -> &ProgramMetadata {
        &self.meta
    }

    fn pkt_in(&self, cs: &CtrlState, sw: SwitchId, pkt: &Packet) -> Result<HandlerOutput, ProgramError> {
        let mut out = HandlerOutput::unchanged(cs);
        let t = self.tuple(pkt.header);
        if let Some(idx) = self.allowed_index(t) {
            out.packet_out(sw, *pkt, PortSet::single(PortId(2)));
            let there = Rule::new(2, self.exact(t)?, PortSet::single(PortId(2)));
            let back = Rule::new(2, self.exact((t.2, t.3, t.0, t.1))?, PortSet::single(PortId(1)));
            let xid = Xid(self.xid_base + idx as u32);
            for &s in &self.switches {
                out.send(s, ControlMessage::Add(there));
                out.send(s, ControlMessage::Add(back));
                out.send(s, ControlMessage::Barrier(xid));
            }
        } else {
            out.packet_out(sw, *pkt, PortSet::drop());
            let drop = Rule::new(1, self.exact(t)?, PortSet::drop());
            for &s in &self.switches {
                out.send(s, ControlMessage::Add(drop));
            }
        }
        Ok(out)
    }

    fn barrier_in(&self, cs: &CtrlState, sw: SwitchId, xid: Xid) -> Result<HandlerOutput, ProgramError> {
        let mut out = HandlerOutput::unchanged(cs);
        if let Some(idx) = xid.0.checked_sub(self.xid_base).map(|i| i as usize) {
            if idx < self.allowed.len() {
                out.cs.set_bit(self.view_bit(idx, sw), true);
            }
        }
        Ok(out)
    }

    fn predicate(&self, cs: &CtrlState, name: &str, args: &[CtrlArg]) -> Result<bool, ProgramError> {
        if name != "view" {
            return Err(no_predicate(name));
        }
        match args {
            [CtrlArg::Packet(p), CtrlArg::Switch(sw)] => Ok(self
                .connection_of(self.tuple(p.header))
                .is_some_and(|c| cs.bit(self.view_bit(c, *sw)))),
            _ => Err(bad_args(name, "(packet, switch)")),
        }
    }

    fn describe_cs(&self, cs: &CtrlState) -> String {
        let mut parts = Vec::new();
        for c in 0..self.allowed.len() {
            for &sw in &self.switches {
                if cs.bit(self.view_bit(c, sw)) {
                    parts.push(format!("view[{c}][{}]", sw.0));
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
