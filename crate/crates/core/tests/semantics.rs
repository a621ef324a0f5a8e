use sdnmc::explore::{self, Options};
use sdnmc::model::{CqEntry, CtrlState, FieldSpec, FlowMod, FlowOp, Packet, PacketSchema, Pattern, Rule, SystemState, VecSet, Xid};
use sdnmc::program::{ControlMessage, ControllerProgram, CtrlArg, HandlerOutput, ProgramError, ProgramMetadata, Representative};
use sdnmc::scenario::{templates, Scenario};
use sdnmc::semantics::{Action, ActionKind, Model, ModelLimits};
use sdnmc::topology::{HostId, Location, PortId, PortSet, SwitchId, Topology};

/// Sends the first packet on along a fixed path and installs one
/// forwarding rule per switch.
#[derive(Debug)]
struct Forward {
    meta: ProgramMetadata,
    black: SwitchId,
    white: SwitchId,
    rule: Rule,
}

impl ControllerProgram for Forward {
    fn metadata(&self) -> &ProgramMetadata {
        &self.meta
    }

    fn pkt_in(&self, cs: &CtrlState, _sw: SwitchId, pkt: &Packet) -> Result<HandlerOutput, ProgramError> {
        let mut out = HandlerOutput::unchanged(cs);
        out.packet_out(self.black, *pkt, PortSet::single(PortId(2)));
        out.send(self.black, ControlMessage::Add(self.rule));
        out.send(self.white, ControlMessage::Add(self.rule));
        Ok(out)
    }

    fn barrier_in(&self, cs: &CtrlState, _sw: SwitchId, _xid: Xid) -> Result<HandlerOutput, ProgramError> {
        Ok(HandlerOutput::unchanged(cs))
    }

    fn predicate(&self, _cs: &CtrlState, name: &str, _args: &[CtrlArg]) -> Result<bool, ProgramError> {
        Err(ProgramError::UnknownPredicate(name.into()))
    }

    fn describe_cs(&self, _cs: &CtrlState) -> String {
        "-".into()
    }
}

/// `Hb - black - white - Hw`, one packet at `Hb`.
fn two_hop() -> Model {
    let topo = Topology::builder()
        .switch("black")
        .switch("white")
        .host("Hb")
        .host("Hw")
        .link(("Hb", 1), ("black", 1))
        .link(("black", 2), ("white", 1))
        .link(("white", 2), ("Hw", 1))
        .build()
        .unwrap();
    let schema = PacketSchema::new(vec![FieldSpec::int("x", 1)], false).unwrap();
    let meta = ProgramMetadata {
        name: "forward",
        variant: String::new(),
        schema,
        representatives: vec![Representative { host: HostId(0), port: PortId(1), header: 0 }],
        initial_rules: Vec::new(),
        order_sensitive: false,
        cs_bits: 0,
        predicates: Vec::new(),
    };
    let prog = Forward {
        meta,
        black: topo.lookup_switch("black").unwrap(),
        white: topo.lookup_switch("white").unwrap(),
        rule: Rule::new(1, Pattern::any().in_port(PortId(1)), PortSet::single(PortId(2))),
    };
    Model::new(topo, Box::new(prog), ModelLimits::default()).unwrap()
}

fn only(m: &Model, s: &SystemState, kind: ActionKind) -> Action {
    let v: Vec<Action> = m.enabled(s).into_iter().filter(|a| a.kind() == kind).collect();
    assert_eq!(v.len(), 1, "expected one {kind:?}, got {v:?}");
    v[0]
}

#[test]
fn initial_state_only_sends() {
    let m = two_hop();
    let s = m.initial_state();
    let en = m.enabled(&s);
    assert!(!en.is_empty());
    assert!(en.iter().all(|a| a.kind() == ActionKind::Send));
}

#[test]
fn forwarding_run_delivers_packet() {
    let m = two_hop();
    let (black, white) = (SwitchId(0), SwitchId(1));
    let hw = HostId(1);
    let mut s = m.initial_state();

    let send = only(&m, &s, ActionKind::Send);
    s = m.fire(&s, &send).unwrap();
    let at_black: Vec<u32> = s.switch(black).pq.iter().collect();
    assert_eq!(at_black.len(), 1);
    let p = sdnmc::model::PacketId(at_black[0]);
    assert_eq!(m.packet(p).loc, Location::new(black, PortId(1)));
    let kinds: Vec<ActionKind> = m.enabled(&s).iter().map(Action::kind).collect();
    assert_eq!(kinds, vec![ActionKind::Send, ActionKind::NoMatch]);
    assert_eq!(m.fire(&s, &send).unwrap(), s, "sending again is a self-loop");

    let nomatch = only(&m, &s, ActionKind::NoMatch);
    assert_eq!(nomatch, Action::NoMatch { sw: black, pkt: p });
    s = m.fire(&s, &nomatch).unwrap();
    assert!(s.ctrl.rq.contains(&(black, p)));
    assert!(s.switch(black).pq.contains(p.0), "nomatch keeps the packet");

    s = m.fire(&s, &only(&m, &s, ActionKind::Ctrl)).unwrap();
    assert!(s.ctrl.rq.is_empty());
    assert_eq!(s.switch(black).fq.len(), 1);
    assert_eq!(s.switch(black).cq.len(), 1);
    assert_eq!(s.switch(white).cq.len(), 1);

    s = m.fire(&s, &only(&m, &s, ActionKind::Fwd)).unwrap();
    assert!(s.switch(black).fq.is_empty());
    let at_white: Vec<u32> = s.switch(white).pq.iter().collect();
    assert_eq!(at_white.len(), 1);
    assert_eq!(m.packet(sdnmc::model::PacketId(at_white[0])).loc, Location::new(white, PortId(1)));

    let add_white = m
        .enabled(&s)
        .into_iter()
        .find(|a| matches!(a, Action::Add { sw, .. } if *sw == white))
        .expect("add pending at white");
    s = m.fire(&s, &add_white).unwrap();
    assert_eq!(s.switch(white).ft.len(), 1);
    assert!(s.switch(white).cq.is_empty());

    let matched = m
        .enabled(&s)
        .into_iter()
        .find(|a| matches!(a, Action::Match { sw, .. } if *sw == white))
        .expect("white matches");
    s = m.fire(&s, &matched).unwrap();
    assert_eq!(s.hosts[hw.0 as usize].rcvq.len(), 1);
    assert!(s.switch(white).pq.len() == 1, "match keeps the packet");

    let recv = only(&m, &s, ActionKind::Recv);
    let before = s.clone();
    s = m.fire(&s, &recv).unwrap();
    assert!(s.hosts[hw.0 as usize].rcvq.is_empty());
    let mut expect = before;
    expect.hosts[hw.0 as usize].rcvq = Default::default();
    assert_eq!(s, expect, "recv changes nothing else");
}

#[test]
fn head_of_control_queue_gates_adds_and_barriers() {
    let m = two_hop();
    let r1 = m.intern_rule(Rule::new(1, Pattern::any(), PortSet::single(PortId(2)))).unwrap();
    let r3 = m.intern_rule(Rule::new(3, Pattern::any(), PortSet::single(PortId(1)))).unwrap();
    let mut s = m.initial_state();
    let sw = SwitchId(0);
    s.switch_mut(sw).cq = vec![
        CqEntry::FlowMods(VecSet::from([FlowMod { rule: r1, op: FlowOp::Add }])),
        CqEntry::Barrier(Xid(1)),
        CqEntry::FlowMods(VecSet::from([FlowMod { rule: r3, op: FlowOp::Add }])),
    ];
    let en = m.enabled(&s);
    assert!(en.contains(&Action::Add { sw, rule: r1 }));
    assert!(!en.contains(&Action::Add { sw, rule: r3 }));
    assert!(!en.iter().any(|a| a.kind() == ActionKind::Brepl));

    s = m.fire(&s, &Action::Add { sw, rule: r1 }).unwrap();
    let en = m.enabled(&s);
    assert!(en.contains(&Action::Brepl { sw, xid: Xid(1) }));
    assert!(!en.contains(&Action::Add { sw, rule: r3 }));
    s = m.fire(&s, &Action::Brepl { sw, xid: Xid(1) }).unwrap();
    assert!(s.ctrl.brq.contains(&(sw, Xid(1))));
    assert!(m.enabled(&s).contains(&Action::Add { sw, rule: r3 }));
}

#[test]
fn disabled_action_is_rejected() {
    let m = two_hop();
    let s = m.initial_state();
    let a = Action::NoMatch { sw: SwitchId(0), pkt: sdnmc::model::PacketId(0) };
    assert!(!m.is_enabled(&s, &a));
    assert!(m.fire(&s, &a).is_err());
}

fn cp1_model() -> Model {
    templates::cp1("buggy").build().unwrap().model
}

fn cp1_rules(m: &Model) -> [Rule; 3] {
    let schema = &m.program().metadata().schema;
    [
        Rule::new(10, Pattern::any().field(schema, "ssh", 1).unwrap(), PortSet::drop()),
        Rule::new(1, Pattern::any().in_port(PortId(1)), PortSet::single(PortId(2))),
        Rule::new(1, Pattern::any().in_port(PortId(2)), PortSet::single(PortId(1))),
    ]
}

#[test]
fn bestmatch_prefers_priority() {
    let m = cp1_model();
    let [r1, r2, _] = cp1_rules(&m);
    let (i1, i2) = (m.intern_rule(r1).unwrap(), m.intern_rule(r2).unwrap());
    let schema = &m.program().metadata().schema;
    let a = SwitchId(0);
    let ssh = Packet::new(schema.header(&[("ssh", 1)]).unwrap(), Location::new(a, PortId(1)));
    let plain = Packet::new(schema.header(&[("ssh", 0)]).unwrap(), Location::new(a, PortId(1)));

    assert_eq!(m.bestmatch(&Default::default(), &ssh), None);
    let ft = [i1.0, i2.0].into_iter().collect();
    assert_eq!(m.bestmatch(&ft, &ssh), Some(i1));
    assert_eq!(m.bestmatch(&ft, &plain), Some(i2));
}

#[test]
fn bestmatch_breaks_ties_by_smallest_id() {
    let m = cp1_model();
    let a = m.intern_rule(Rule::new(5, Pattern::any(), PortSet::single(PortId(2)))).unwrap();
    let b = m.intern_rule(Rule::new(5, Pattern::any(), PortSet::single(PortId(1)))).unwrap();
    let pkt = Packet::new(0, Location::new(SwitchId(0), PortId(1)));
    let ft = [b.0, a.0].into_iter().collect();
    assert_eq!(m.bestmatch(&ft, &pkt), Some(a.min(b)));
}

#[test]
fn shipped_scenarios_never_tie() {
    for name in ["cp1_buggy_2sw", "cp1_fixed_2sw", "cp2_stateful_1", "cp3_maclearn_2x2", "cp4_wrongnest", "cp4_fixed", "cp5_consistent_buggy", "cp5_consistent_fixed"] {
        let path = format!("{}/scenarios/{name}.scn", env!("CARGO_MANIFEST_DIR"));
        let c = Scenario::load(path).unwrap().build().unwrap();
        let m = &c.model;
        let run = explore::explore(m, &c.property, &Options { por: false, stop_on_violation: false, ..Options::default() }).unwrap();
        for p in &run.states {
            let s = m.unpack(p);
            for sw in &s.switches {
                for pkt in sw.pq.iter() {
                    let pkt = m.packet(sdnmc::model::PacketId(pkt));
                    let matching: Vec<Rule> = sw.ft.iter().map(|r| m.rule(sdnmc::model::RuleId(r))).filter(|r| r.pattern.matches(&pkt)).collect();
                    let Some(top) = matching.iter().map(|r| r.priority).max() else { continue };
                    let n = matching.iter().filter(|r| r.priority == top).count();
                    assert_eq!(n, 1, "{name}: tie for {}", m.describe_packet(sdnmc::model::PacketId(0)));
                }
            }
        }
    }
}

#[test]
fn interning_is_idempotent_and_location_sensitive() {
    let m = cp1_model();
    let p = Packet::new(1, Location::new(SwitchId(0), PortId(1)));
    let q = Packet::new(1, Location::new(SwitchId(1), PortId(1)));
    let mut r = p;
    r.reached = 1;
    let mut r2 = p;
    r2.reached = 3;
    let ids: Vec<_> = [p, p, q, r, r2].into_iter().map(|x| m.intern_packet(x).unwrap()).collect();
    assert_eq!(ids[0], ids[1]);
    assert_ne!(ids[0], ids[2]);
    assert_ne!(ids[0], ids[3]);
    assert_ne!(ids[3], ids[4]);
    assert_eq!(m.packet(ids[3]), r);
}

#[test]
fn cp1_rules_get_distinct_ids() {
    let m = cp1_model();
    let ids: Vec<_> = cp1_rules(&m).into_iter().map(|r| m.intern_rule(r).unwrap()).collect();
    assert_ne!(ids[0], ids[1]);
    assert_ne!(ids[1], ids[2]);
    assert_ne!(ids[0], ids[2]);
    assert_eq!(m.intern_rule(cp1_rules(&m)[1]).unwrap(), ids[1]);
    let mut lower = cp1_rules(&m)[0];
    lower.priority = 9;
    assert_ne!(m.intern_rule(lower).unwrap(), ids[0]);
}

#[test]
fn cp1_handler_batches() {
    let topo = templates::two_switch().build().unwrap();
    let a = topo.lookup_switch("A").unwrap();
    for (variant, expect) in [("buggy", ["allow", "block", "barrier", "back"]), ("fixed", ["block", "barrier", "allow", "back"])] {
        let p = sdnmc::program::build(&sdnmc::program::ProgramSpec::new("cp1").param("variant", variant), &topo).unwrap();
        let schema = &p.metadata().schema;
        let pkt = Packet::new(schema.header(&[("ssh", 0)]).unwrap(), Location::new(a, PortId(1)));
        let out = p.pkt_in(&p.initial_cs(), a, &pkt).unwrap();
        assert_eq!(out.packet_outs, vec![(a, pkt, PortSet::single(PortId(2)))]);
        let got: Vec<&str> = out
            .messages
            .iter()
            .filter(|(sw, _)| *sw == a)
            .map(|(_, msg)| match msg {
                ControlMessage::Barrier(_) => "barrier",
                ControlMessage::Add(r) if r.drops() => "block",
                ControlMessage::Add(r) if r.pattern.in_port == Some(PortId(1)) => "allow",
                ControlMessage::Add(_) => "back",
                ControlMessage::Del(_) => "del",
            })
            .collect();
        assert_eq!(got, expect, "{variant}");
        let idle = p.barrier_in(&p.initial_cs(), a, Xid(1)).unwrap();
        assert_eq!(idle, HandlerOutput::unchanged(&p.initial_cs()));
    }
}

#[test]
fn handlers_are_pure() {
    let topo = templates::line(2, 2).build().unwrap();
    let p = sdnmc::program::build(&sdnmc::program::ProgramSpec::new("cp3"), &topo).unwrap();
    let m = templates::cp3(2, 2).build().unwrap().model;
    let rep = m.representatives()[0];
    let pkt = m.packet(rep.pkt);
    let mut at_a = pkt;
    at_a.loc = Location::new(SwitchId(0), PortId(1));
    let cs = p.initial_cs();
    assert_eq!(p.pkt_in(&cs, SwitchId(0), &at_a).unwrap(), p.pkt_in(&cs, SwitchId(0), &at_a).unwrap());
}

#[test]
fn mac_learning_floods_unknown_destination() {
    let topo = templates::line(2, 2).build().unwrap();
    let p = sdnmc::program::build(&sdnmc::program::ProgramSpec::new("cp3"), &topo).unwrap();
    assert!(p.metadata().order_sensitive);
    let schema = &p.metadata().schema;
    let header = schema.header(&[("src", 0), ("dst", 1)]).unwrap();
    let pkt = Packet::new(header, Location::new(SwitchId(0), PortId(1)));
    let cs = p.initial_cs();
    let out = p.pkt_in(&cs, SwitchId(0), &pkt).unwrap();
    assert_ne!(out.cs, cs, "source is learned");
    assert_eq!(out.packet_outs.len(), 1);
    let (_, _, ports) = out.packet_outs[0];
    assert!(!ports.contains(PortId(1)));
    assert!(ports.contains(PortId(2)));
}
