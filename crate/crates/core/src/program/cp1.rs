use super::*;
use crate::model::{FieldSpec, Pattern};

/// Stateless firewall blocking SSH. The `buggy` variant sends the SSH drop
/// rule and the allow rule in the same unordered batch.
#[derive(Debug)]
pub struct StatelessFirewall {
    meta: ProgramMetadata,
    fixed: bool,
    xid: Xid,
    block_ssh: Rule,
    allow_out: Rule,
    allow_back: Rule,
    switches: Vec<SwitchId>,
}

impl StatelessFirewall {
    pub(crate) fn new(p: &Params) -> Result<Self, ProgramError> {
        p.check_unused(&["client", "xid"])?;
        let variant = p.variant(&["buggy", "fixed"], "fixed")?;
        p.require_ports(&[1, 2])?;
        let client = p.host("client", 0)?;
        let schema = PacketSchema::new(vec![FieldSpec::int("ssh", 1)], false)?;
        let block_ssh = Rule::new(10, Pattern::any().field(&schema, "ssh", 1)?, PortSet::drop());
        let allow_out = Rule::new(1, Pattern::any().in_port(PortId(1)), PortSet::single(PortId(2)));
        let allow_back = Rule::new(1, Pattern::any().in_port(PortId(2)), PortSet::single(PortId(1)));
        let headers = [schema.header(&[("ssh", 1)])?, schema.header(&[("ssh", 0)])?];
        let meta = ProgramMetadata {
            name: "cp1",
            variant: variant.clone(),
            representatives: reps_from(p.topo, client, &headers),
            schema,
            initial_rules: Vec::new(),
            order_sensitive: false,
            cs_bits: 0,
            predicates: Vec::new(),
        };
        Ok(StatelessFirewall {
            meta,
            fixed: variant == "fixed",
            xid: Xid(p.u32("xid", 1)?),
            block_ssh,
            allow_out,
            allow_back,
            switches: p.topo.switches().collect(),
        })
    }

    pub fn rules(&self) -> [Rule; 3] {
        [self.block_ssh, self.allow_out, self.allow_back]
    }
}

impl ControllerProgram for StatelessFirewall {
    fn metadata(&self) -> &ProgramMetadata {
        &self.meta
    }

    fn pkt_in(&self, cs: &CtrlState, sw: SwitchId, pkt: &Packet) -> Result<HandlerOutput, ProgramError> {
        let mut out = HandlerOutput::unchanged(cs);
        if self.meta.schema.get(pkt.header, 0) == 0 {
            out.packet_out(sw, *pkt, PortSet::single(PortId(2)));
        }
        use ControlMessage::*;
        let batch = if self.fixed {
            [Add(self.block_ssh), Barrier(self.xid), Add(self.allow_out), Add(self.allow_back)]
        } else {
            [Add(self.allow_out), Add(self.block_ssh), Barrier(self.xid), Add(self.allow_back)]
        };
        for &s in &self.switches {
            for m in batch {
                out.send(s, m);
            }
        }
        Ok(out)
    }

    fn barrier_in(&self, cs: &CtrlState, _sw: SwitchId, _xid: Xid) -> Result<HandlerOutput, ProgramError> {
        Ok(HandlerOutput::unchanged(cs))
    }

    fn predicate(&self, _cs: &CtrlState, name: &str, _args: &[CtrlArg]) -> Result<bool, ProgramError> {
        Err(no_predicate(name))
    }

    fn describe_cs(&self, _cs: &CtrlState) -> String {
        "-".to_string()
    }
}
