use std::collections::HashSet;

use sdnmc::explore::{self, compare_modes, Options, TraceDoc, Verdict, Violation};
use sdnmc::model::{CtrlState, Packet, Pattern, Rule, Xid};
use sdnmc::program::{ControllerProgram, CtrlArg, HandlerOutput, ProgramError, ProgramMetadata, Representative};
use sdnmc::property;
use sdnmc::scenario::{templates, Checker, Scenario};
use sdnmc::semantics::{Model, ModelLimits};
use sdnmc::topology::{HostId, PortId, PortSet, SwitchId, Topology};

fn shipped(name: &str) -> Checker {
    let path = format!("{}/scenarios/{name}.scn", env!("CARGO_MANIFEST_DIR"));
    Scenario::load(path).unwrap().build().unwrap()
}

const SMALL: [&str; 8] = [
    "cp1_buggy_2sw",
    "cp1_fixed_2sw",
    "cp2_stateful_1",
    "cp3_maclearn_2x2",
    "cp4_wrongnest",
    "cp4_fixed",
    "cp5_consistent_buggy",
    "cp5_consistent_fixed",
];

fn all(por: bool) -> Options {
    Options { por, stop_on_violation: false, ..Options::default() }
}

#[test]
fn cp1_verdicts() {
    let c = shipped("cp1_buggy_2sw");
    let r = explore::explore(&c.model, &c.property, &Options::default()).unwrap();
    assert!(matches!(r.verdict, Verdict::Violated(_)));
    assert_eq!(r.verdict.exit_code(), 1);
    let c = shipped("cp1_fixed_2sw");
    let r = explore::explore(&c.model, &c.property, &Options::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert_eq!(r.stats.visited, r.states.len());
}

#[test]
fn compare_modes_on_small_scenarios() {
    for name in ["cp1_buggy_2sw", "cp1_fixed_2sw"] {
        let c = shipped(name);
        let cmp = compare_modes(&c.model, &c.property, &Options::default()).unwrap();
        assert!(cmp.conclusive() && cmp.verdicts_equal && cmp.subset(), "{name}");
        assert!(cmp.ratio >= 1.0);
    }
    let c = shipped("cp3_maclearn_2x2");
    let cmp = compare_modes(&c.model, &c.property, &Options::default()).unwrap();
    assert!(cmp.verdicts_equal && cmp.subset());
    assert!(cmp.ratio > 1.0);
    assert!(cmp.reduced.stats.visited < cmp.full.stats.visited);
}

#[test]
fn merged_chains_keep_verdicts() {
    for name in SMALL {
        let c = shipped(name);
        let plain = explore::explore(&c.model, &c.property, &all(true)).unwrap();
        let merged = explore::explore(&c.model, &c.property, &Options { merge_chains: true, ..all(true) }).unwrap();
        assert_eq!(plain.verdict.name(), merged.verdict.name(), "{name}");
        assert!(merged.stats.visited <= plain.stats.visited, "{name}");
        if let Some(cx) = merged.verdict.counterexample() {
            assert!(explore::replay(&c.model, &c.property, &cx.actions).unwrap().violation.is_some(), "{name}");
        }
    }
    let c = shipped("cp1_fixed_2sw");
    let merged = explore::explore(&c.model, &c.property, &Options { merge_chains: true, ..Options::default() }).unwrap();
    assert!(merged.stats.fused_steps > 0);
}

#[test]
fn successor_order_does_not_change_results() {
    for name in SMALL {
        let c = shipped(name);
        for por in [false, true] {
            let base = explore::explore(&c.model, &c.property, &all(por)).unwrap();
            let want: HashSet<_> = base.states.iter().collect();
            for seed in [1, 2] {
                let r = explore::explore(&c.model, &c.property, &Options { shuffle_seed: Some(seed), ..all(por) }).unwrap();
                assert_eq!(r.verdict.name(), base.verdict.name(), "{name} por={por}");
                assert_eq!(r.states.iter().collect::<HashSet<_>>(), want, "{name} por={por}");
            }
        }
    }
}

#[test]
fn traces_replay_and_truncate() {
    for name in ["cp1_buggy_2sw", "cp4_wrongnest", "cp5_consistent_buggy"] {
        let c = shipped(name);
        for por in [false, true] {
            let r = explore::explore(&c.model, &c.property, &Options { por, ..Options::default() }).unwrap();
            let cx = r.verdict.counterexample().unwrap();
            let out = explore::replay(&c.model, &c.property, &cx.actions).unwrap();
            assert_eq!(out.violation, Some((cx.actions.len(), cx.violation)), "{name}");
            let short = explore::replay(&c.model, &c.property, &cx.actions[..cx.actions.len() - 1]).unwrap();
            assert_eq!(short.violation, None, "{name}: violation before the last step");
            if cx.violation == Violation::Invariant {
                assert!(c.property.holds(&c.model, &short.state));
            }
        }
    }
}

#[test]
fn trace_rendering_and_json() {
    let c = shipped("cp1_buggy_2sw");
    let r = explore::explore(&c.model, &c.property, &Options::default()).unwrap();
    let cx = r.verdict.counterexample().unwrap();
    let text = cx.render(&c.model, &c.property);
    let lines: Vec<&str> = text.lines().collect();
    for (i, a) in cx.actions.iter().enumerate() {
        assert_eq!(lines[i], format!("step {}: {}", i + 1, c.model.describe_action(a)));
    }
    assert_eq!(lines[cx.actions.len()], "violation:");

    let doc = cx.to_doc(&c.model, &c.property, Some("x.scn"));
    let json = serde_json::to_string(&doc).unwrap();
    let back: TraceDoc = serde_json::from_str(&json).unwrap();
    let fresh = shipped("cp1_buggy_2sw");
    let actions = back.actions(&fresh.model).unwrap();
    let out = explore::replay(&fresh.model, &fresh.property, &actions).unwrap();
    assert!(out.violation.is_some());
    let original: Vec<_> = cx.actions.iter().map(|a| c.model.resolve_action(a)).collect();
    let again: Vec<_> = actions.iter().map(|a| fresh.model.resolve_action(a)).collect();
    assert_eq!(original, again);
}

#[test]
fn replay_rejects_disabled_steps() {
    let c = shipped("cp1_buggy_2sw");
    let r = explore::explore(&c.model, &c.property, &Options::default()).unwrap();
    let mut actions = r.verdict.counterexample().unwrap().actions.clone();
    actions.remove(0);
    assert!(matches!(
        explore::replay(&c.model, &c.property, &actions),
        Err(explore::ReplayError::Diverged { step: 1, .. })
    ));
}

#[test]
fn budgets_give_resource_limit() {
    let c = shipped("cp3_maclearn_2x2");
    let r = explore::explore(&c.model, &c.property, &Options { por: false, max_states: 100, ..Options::default() }).unwrap();
    assert!(matches!(r.verdict, Verdict::ResourceLimit { .. }));
    assert_eq!(r.verdict.exit_code(), 2);
    let mut sc = templates::cp1("fixed");
    sc.budgets.max_cq_len = 1;
    let c = sc.build().unwrap();
    let r = explore::explore(&c.model, &c.property, &Options::default()).unwrap();
    assert!(matches!(r.verdict, Verdict::ResourceLimit { .. }), "{}", r.verdict);
}

#[test]
fn stats_are_consistent() {
    let c = shipped("cp2_stateful_1");
    let r = explore::explore(&c.model, &c.property, &Options::default()).unwrap();
    let s = &r.stats;
    assert_eq!(s.visited, r.states.len());
    assert_eq!(s.store_bytes, r.states.iter().map(|p| p.byte_len()).sum::<usize>());
    assert!((s.bytes_per_state - s.store_bytes as f64 / s.visited as f64).abs() < 1e-9);
    assert!(s.transitions as usize >= s.visited - 1);
    assert!(s.peak_stored >= s.visited || s.peak_stored == 0);
}

#[test]
fn parallel_matches_single_threaded() {
    for name in SMALL {
        let c = shipped(name);
        let one = explore::explore(&c.model, &c.property, &all(true)).unwrap();
        let par = explore::explore(&c.model, &c.property, &Options { threads: 3, ..all(true) }).unwrap();
        assert_eq!(one.verdict.name(), par.verdict.name(), "{name}");
        assert_eq!(one.states.iter().collect::<HashSet<_>>(), par.states.iter().collect::<HashSet<_>>(), "{name}");
        if let Some(cx) = par.verdict.counterexample() {
            assert!(explore::replay(&c.model, &c.property, &cx.actions).unwrap().violation.is_some());
        }
    }
}

#[test]
fn validate_por_on_small_scenarios() {
    for name in SMALL {
        let c = shipped(name);
        let r = explore::validate_por(&c.model, &c.property, &Options::default()).unwrap();
        assert!(r.ok(), "{name}: {r:?}");
    }
}

#[test]
fn order_sensitivity_examples() {
    let c = shipped("cp1_buggy_2sw");
    assert_eq!(explore::validate_order_sensitivity(&c.model, 1_000_000).unwrap().sensitive(), Some(false));
    let c = shipped("cp3_maclearn_2x2");
    let r = explore::validate_order_sensitivity(&c.model, 1_000_000).unwrap();
    assert_eq!(r.sensitive(), Some(true));
    let c = shipped("cp3_maclearn_3x2");
    let r = explore::validate_order_sensitivity(&c.model, 10).unwrap();
    assert!(r.witness.is_some() || r.sensitive().is_none());
}

/// Forwards everything with preinstalled rules; the controller is never asked.
#[derive(Debug)]
struct Static(ProgramMetadata);

impl ControllerProgram for Static {
    fn metadata(&self) -> &ProgramMetadata {
        &self.0
    }
    fn pkt_in(&self, cs: &CtrlState, _: SwitchId, _: &Packet) -> Result<HandlerOutput, ProgramError> {
        Ok(HandlerOutput::unchanged(cs))
    }
    fn barrier_in(&self, cs: &CtrlState, _: SwitchId, _: Xid) -> Result<HandlerOutput, ProgramError> {
        Ok(HandlerOutput::unchanged(cs))
    }
    fn predicate(&self, _: &CtrlState, name: &str, _: &[CtrlArg]) -> Result<bool, ProgramError> {
        Err(ProgramError::UnknownPredicate(name.into()))
    }
    fn describe_cs(&self, _: &CtrlState) -> String {
        "-".into()
    }
}

#[test]
fn no_safe_actions_means_no_reduction() {
    let topo = Topology::builder()
        .switch("A")
        .switch("B")
        .host("C")
        .host("S")
        .link(("C", 1), ("A", 1))
        .link(("A", 2), ("B", 1))
        .link(("B", 2), ("S", 1))
        .build()
        .unwrap();
    let fwd = Rule::new(1, Pattern::any().in_port(PortId(1)), PortSet::single(PortId(2)));
    let meta = ProgramMetadata {
        name: "static",
        variant: String::new(),
        schema: sdnmc::model::PacketSchema::new(vec![sdnmc::model::FieldSpec::int("x", 1)], false).unwrap(),
        representatives: vec![
            Representative { host: HostId(0), port: PortId(1), header: 0 },
            Representative { host: HostId(0), port: PortId(1), header: 1 },
        ],
        initial_rules: vec![(SwitchId(0), fwd), (SwitchId(1), fwd)],
        order_sensitive: false,
        cs_bits: 0,
        predicates: Vec::new(),
    };
    let model = Model::new(topo, Box::new(Static(meta)), ModelLimits::default()).unwrap();
    let prop = property::parse("(or (exists_in (rcvq S) (eq x 0)) (exists_in (rcvq S) (eq x 1)) (not (exists_in (rcvq S) (eq x 0))))", &model).unwrap();
    let cmp = compare_modes(&model, &prop, &Options::default()).unwrap();
    assert!(cmp.verdicts_equal);
    assert_eq!(cmp.full.stats.visited, cmp.reduced.stats.visited);
    assert_eq!(cmp.full.states.iter().collect::<HashSet<_>>(), cmp.reduced.states.iter().collect::<HashSet<_>>());
    assert_eq!(cmp.ratio, 1.0);
}
