use std::collections::BTreeSet;

use sdnmc::model::{CtrlState, Packet, PacketId, Pattern, Rule};
use sdnmc::property::{self, Queue};
use sdnmc::scenario::{templates, Checker};
use sdnmc::semantics::{Action, ActionKind};
use sdnmc::topology::{Location, PortId, PortSet};

fn build(sc: sdnmc::scenario::Scenario) -> Checker {
    sc.build().unwrap()
}

#[test]
fn no_ssh_at_server() {
    let c = build(templates::cp1("fixed"));
    let m = &c.model;
    let s0 = m.initial_state();
    assert!(c.property.holds(m, &s0));

    let server = m.topology().lookup_host("S").unwrap();
    let schema = &m.program().metadata().schema;
    let mut s = s0.clone();
    let plain = m.intern_packet(Packet::new(schema.header(&[("ssh", 0)]).unwrap(), Location::new(server, PortId(1)))).unwrap();
    s.hosts[server.0 as usize].rcvq.insert(plain.0);
    assert!(c.property.holds(m, &s));
    let ssh = m.intern_packet(Packet::new(schema.header(&[("ssh", 1)]).unwrap(), Location::new(server, PortId(1)))).unwrap();
    s.hosts[server.0 as usize].rcvq.insert(ssh.0);
    assert!(!c.property.holds(m, &s));
}

#[test]
fn loop_freedom_flags_returning_packet() {
    let c = build(templates::cp3(2, 2));
    let m = &c.model;
    let a = m.topology().lookup_switch("A").unwrap();
    let b = m.topology().lookup_switch("B").unwrap();
    let mut s = m.initial_state();
    let mut p = Packet::new(0, Location::new(a, PortId(1)));
    p.reached = 1 << b.0;
    let id = m.intern_packet(p).unwrap();
    s.switch_mut(a).pq.insert(id.0);
    assert!(c.property.holds(m, &s));
    p.reached |= 1 << a.0;
    let id = m.intern_packet(p).unwrap();
    s.switch_mut(a).pq.insert(id.0);
    assert!(!c.property.holds(m, &s));
}

#[test]
fn drop_modality() {
    let c = build(templates::cp5("buggy"));
    let m = &c.model;
    let b = m.topology().lookup_switch("B").unwrap();
    let server = m.topology().lookup_host("S").unwrap();
    let schema = &m.program().metadata().schema;
    let to_s = m.intern_packet(Packet::new(schema.header(&[("dst", server.0 as u32)]).unwrap(), Location::new(b, PortId(1)))).unwrap();
    let drop = m.intern_rule(Rule::new(0, Pattern::any(), PortSet::drop())).unwrap();
    let fwd = m.intern_rule(Rule::new(0, Pattern::any(), PortSet::single(PortId(2)))).unwrap();
    let s = m.initial_state();

    let bad = Action::Match { sw: b, pkt: to_s, rule: drop };
    assert!(c.property.violated_modality(m, &bad, &s).is_some());
    let fine = Action::Match { sw: b, pkt: to_s, rule: fwd };
    assert_eq!(c.property.violated_modality(m, &fine, &s), None);
    let other = Action::Brepl { sw: b, xid: sdnmc::model::Xid(1) };
    assert_eq!(c.property.violated_modality(m, &other, &s), None);
    let fwd_drop = Action::Fwd { sw: b, pkt: to_s, ports: PortSet::drop() };
    assert!(c.property.violated_modality(m, &fwd_drop, &s).is_some());
}

#[test]
fn drop_while_controller_knows_connection() {
    let c = build(templates::cp2(1));
    let m = &c.model;
    let r1 = m.topology().lookup_switch("R1").unwrap();
    let pkt = m.representatives()[0].pkt;
    let mut p = m.packet(pkt);
    p.loc = Location::new(r1, PortId(1));
    let pkt = m.intern_packet(p).unwrap();
    let drop = m.intern_rule(Rule::new(0, Pattern::any(), PortSet::drop())).unwrap();
    let a = Action::Match { sw: r1, pkt, rule: drop };

    let mut s = m.initial_state();
    assert_eq!(c.property.violated_modality(m, &a, &s), None);
    let bits = m.program().metadata().cs_bits;
    let mut cs = CtrlState::zeros(bits);
    for i in 0..bits {
        cs.set_bit(i, true);
    }
    s.ctrl.cs = cs;
    assert!(c.property.violated_modality(m, &a, &s).is_some());
}

#[test]
fn footprints() {
    let c = build(templates::cp1("buggy"));
    let fp = c.property.footprint();
    let server = c.model.topology().lookup_host("S").unwrap();
    assert!(!fp.mentions_ctrl_state);
    assert_eq!(fp.queues, BTreeSet::from([Queue::Rcvq(server)]));
    assert!(fp.modal_kinds.is_empty());

    let c = build(templates::cp2(2));
    let fp = c.property.footprint();
    assert!(fp.mentions_ctrl_state);
    assert!(fp.queues.is_empty());
    assert_eq!(fp.modal_kinds, BTreeSet::from([ActionKind::Match]));

    let c = build(templates::cp3(3, 2));
    let fp = c.property.footprint();
    let all: BTreeSet<Queue> = c.model.topology().switches().map(Queue::Pq).collect();
    assert_eq!(fp.queues, all);
}

#[test]
fn unknown_names_are_rejected() {
    let c = build(templates::cp1("buggy"));
    for bad in [
        "(forall_in (rcvq X) (not (eq ssh 1)))",
        "(forall_in (rcvq S) (not (eq port 1)))",
        "(forall_in (pq S) true)",
        "(on_action (teleport ?x) true)",
        "(and",
    ] {
        assert!(property::parse(bad, &c.model).is_err(), "{bad}");
    }
}

#[test]
fn negation_and_connectives() {
    let c = build(templates::cp1("buggy"));
    let m = &c.model;
    let s = m.initial_state();
    let ok = |e: &str| property::parse(e, m).unwrap().holds(m, &s);
    assert!(ok("true"));
    assert!(!ok("(not true)"));
    assert!(ok("(or false true)"));
    assert!(!ok("(and true false)"));
    assert!(!ok("(exists_in (rcvq S) true)"));
    assert!(ok("(not (exists_in (rcvq S) true))"));
    assert!(ok("(implies false false)"));
    let _ = PacketId(0);
}
