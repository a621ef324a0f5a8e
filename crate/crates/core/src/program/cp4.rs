use super::*;
use crate::model::{bits_for, FieldSpec, Pattern};

/// SSH blocking with a one-shot flag. The `wrongnest` variant forwards SSH
/// traffic once the flag is set instead of dropping it.
#[derive(Debug)]
pub struct WrongNesting {
    meta: ProgramMetadata,
    buggy: bool,
    server: HostId,
    xid: Xid,
    switches: Vec<SwitchId>,
}

impl WrongNesting {
    pub(crate) fn new(p: &Params) -> Result<Self, ProgramError> {
        p.check_unused(&["client", "server", "xid"])?;
        let variant = p.variant(&["wrongnest", "fixed"], "fixed")?;
        p.require_ports(&[2])?;
        let client = p.host("client", 0)?;
        let server = p.host("server", 1)?;
        let schema = PacketSchema::new(
            vec![FieldSpec::int("ssh", 1), FieldSpec::host("dst", bits_for(p.topo.host_count()))],
            false,
        )?;
        let mut headers = Vec::new();
        for d in p.topo.hosts().filter(|d| *d != client) {
            for ssh in [1, 0] {
                headers.push(schema.header(&[("ssh", ssh), ("dst", d.0 as u32)])?);
            }
        }
        let meta = ProgramMetadata {
            name: "cp4",
            variant: variant.clone(),
            representatives: reps_from(p.topo, client, &headers),
            schema,
            initial_rules: Vec::new(),
            order_sensitive: true,
            cs_bits: 1,
            predicates: vec![PredicateSpec { name: "flag", params: vec![] }],
        };
        Ok(WrongNesting {
            meta,
            buggy: variant == "wrongnest",
            server,
            xid: Xid(p.u32("xid", 1)?),
            switches: p.topo.switches().collect(),
        })
    }
}

impl ControllerProgram for WrongNesting {
    fn metadata(&self) -> &ProgramMetadata {
        &self.meta
    }

    fn pkt_in(&self, cs: &CtrlState, sw: SwitchId, pkt: &Packet) -> Result<HandlerOutput, ProgramError> {
        let s = &self.meta.schema;
        let (ssh, dst) = (s.get(pkt.header, 0), s.get(pkt.header, 1));
        let mut out = HandlerOutput::unchanged(cs);
        let to_server = PortSet::single(PortId(2));
        let allow = |out: &mut HandlerOutput| -> Result<(), ProgramError> {
            out.packet_out(sw, *pkt, to_server);
            let rule = Rule::new(2, Pattern::any().field(s, "ssh", ssh)?.field(s, "dst", dst)?, to_server);
            for &t in &self.switches {
                out.send(t, ControlMessage::Add(rule));
            }
            Ok(())
        };
        if ssh == 1 && dst == self.server.0 as u32 {
            if !cs.bit(0) {
                out.cs.set_bit(0, true);
                let drop = Rule::new(1, Pattern::any().field(s, "ssh", ssh)?.field(s, "dst", dst)?, PortSet::drop());
                for &t in &self.switches {
                    out.send(t, ControlMessage::Add(drop));
                    out.send(t, ControlMessage::Barrier(self.xid));
                }
            } else if self.buggy {
                allow(&mut out)?;
            }
        } else {
            allow(&mut out)?;
        }
        Ok(out)
    }

    fn barrier_in(&self, cs: &CtrlState, _sw: SwitchId, _xid: Xid) -> Result<HandlerOutput, ProgramError> {
        Ok(HandlerOutput::unchanged(cs))
    }

    fn predicate(&self, cs: &CtrlState, name: &str, args: &[CtrlArg]) -> Result<bool, ProgramError> {
        match (name, args) {
            ("flag", []) => Ok(cs.bit(0)),
            ("flag", _) => Err(bad_args(name, "no arguments")),
            _ => Err(no_predicate(name)),
        }
    }

    fn describe_cs(&self, cs: &CtrlState) -> String {
        format!("f={}", cs.bit(0))
    }
}
