//! Scenario files: topology, controller program, property and budgets.
//!
//! ```text
//! [topology]
//! switches = A B
//! hosts = C S
//! link = C:1 A:1
//! link = A:2 B:1
//! link = B:2 S:1
//!
//! [controller]
//! program = cp1
//! variant = buggy
//!
//! [property]
//! expr = (forall_in (rcvq S) (not (eq ssh 1)))
//! ```

use std::fmt::{self, Write as _};
use std::path::Path;
use std::time::Duration;

use thiserror::Error;

use crate::explore::Options;
use crate::program::{self, ProgramSpec};
use crate::property::{self, Property};
use crate::semantics::{Model, ModelLimits};
use crate::topology::Topology;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ScenarioError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}:{c}: ")?,
            (Some(l), None) => write!(f, "line {l}: ")?,
            _ => {}
        }
        if let Some(k) = &self.key {
            write!(f, "`{k}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl ScenarioError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ScenarioError { line: Some(line), column: Some(column), key: None, message: message.into() }
    }

    fn key(key: &str, message: impl Into<String>) -> Self {
        ScenarioError { line: None, column: None, key: Some(key.to_string()), message: message.into() }
    }
}

/// All errors found in one scenario.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ScenarioErrors(pub Vec<ScenarioError>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl From<ScenarioError> for ScenarioErrors {
    fn from(e: ScenarioError) -> Self {
        ScenarioErrors(vec![e])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TopologySpec {
    pub switches: Vec<String>,
    pub hosts: Vec<String>,
    pub links: Vec<((String, u8), (String, u8))>,
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology, ScenarioErrors> {
        let mut b = Topology::builder();
        for s in &self.switches {
            b.add_switch(s.clone());
        }
        for h in &self.hosts {
            b.add_host(h.clone());
        }
        for (x, y) in &self.links {
            b.add_link(x.clone(), y.clone());
        }
        b.build()
            .map_err(|es| ScenarioErrors(es.into_iter().map(|e| ScenarioError::key("topology", e.to_string())).collect()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    pub max_states: usize,
    pub max_cq_len: usize,
    pub max_packets: usize,
    pub max_rules: usize,
    pub time_limit_secs: Option<u64>,
}

impl Default for Budgets {
    fn default() -> Self {
        let l = ModelLimits::default();
        Budgets {
            max_states: Options::default().max_states,
            max_cq_len: l.max_cq_len,
            max_packets: l.max_packets,
            max_rules: l.max_rules,
            time_limit_secs: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeFlags {
    pub por: bool,
    pub merge_chains: bool,
    pub threads: usize,
}

impl Default for ModeFlags {
    fn default() -> Self {
        ModeFlags { por: true, merge_chains: false, threads: 1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scenario {
    pub topology: TopologySpec,
    pub controller: ProgramSpec,
    pub property: String,
    pub budgets: Budgets,
    pub options: ModeFlags,
}

/// A scenario compiled into a model and a property.
#[derive(Debug)]
pub struct Checker {
    pub model: Model,
    pub property: Property,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<Scenario> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Ok(parse(&text)?)
    }

    pub fn limits(&self) -> ModelLimits {
        ModelLimits {
            max_packets: self.budgets.max_packets,
            max_rules: self.budgets.max_rules,
            max_cq_len: self.budgets.max_cq_len,
        }
    }

    /// Exploration options taken from the `[budgets]` and `[options]` sections.
    pub fn explore_options(&self) -> Options {
        Options {
            por: self.options.por,
            merge_chains: self.options.merge_chains,
            threads: self.options.threads,
            max_states: self.budgets.max_states,
            time_limit: self.budgets.time_limit_secs.map(Duration::from_secs),
            ..Options::default()
        }
    }

    /// Validates cross references and compiles the scenario.
    pub fn build(&self) -> Result<Checker, ScenarioErrors> {
        let topo = self.topology.build()?;
        let program = program::build(&self.controller, &topo).map_err(|e| ScenarioError::key("controller", e.to_string()))?;
        let model = Model::new(topo, program, self.limits()).map_err(|e| ScenarioError::key("controller", e.to_string()))?;
        let property = property::parse(&self.property, &model).map_err(|e| ScenarioError::key("property", e.0))?;
        Ok(Checker { model, property })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        out.push_str("[topology]\n");
        let _ = writeln!(out, "switches = {}", self.topology.switches.join(" "));
        let _ = writeln!(out, "hosts = {}", self.topology.hosts.join(" "));
        for ((a, pa), (b, pb)) in &self.topology.links {
            let _ = writeln!(out, "link = {a}:{pa} {b}:{pb}");
        }
        out.push_str("\n[controller]\n");
        let _ = writeln!(out, "program = {}", self.controller.name);
        for (k, v) in &self.controller.params {
            let _ = writeln!(out, "{k} = {v}");
        }
        out.push_str("\n[property]\n");
        let _ = writeln!(out, "expr = {}", self.property);
        let b = &self.budgets;
        out.push_str("\n[budgets]\n");
        let _ = writeln!(out, "max_states = {}", b.max_states);
        let _ = writeln!(out, "max_cq_len = {}", b.max_cq_len);
        let _ = writeln!(out, "max_packets = {}", b.max_packets);
        let _ = writeln!(out, "max_rules = {}", b.max_rules);
        if let Some(t) = b.time_limit_secs {
            let _ = writeln!(out, "time_limit = {t}");
        }
        let o = &self.options;
        out.push_str("\n[options]\n");
        let _ = writeln!(out, "por = {}", on_off(o.por));
        let _ = writeln!(out, "merge_chains = {}", on_off(o.merge_chains));
        let _ = writeln!(out, "threads = {}", o.threads);
        f.write_str(&out)
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Topology,
    Controller,
    Property,
    Budgets,
    Options,
}

/// Parses scenario text. Errors carry line and column; every error found is
/// reported.
pub fn parse(text: &str) -> Result<Scenario, ScenarioErrors> {
    let mut sc = Scenario::default();
    let mut errors = Vec::new();
    let mut section = Section::None;
    let mut seen_program = false;
    let mut seen_switches = false;
    let mut seen_hosts = false;
    let mut expr: Option<String> = None;
    let mut seen_keys: Vec<(u8, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        let trimmed = line.trim_start();
        let col = line.len() - trimmed.len() + 1;
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed.starts_with('[') {
            section = match trimmed {
                "[topology]" => Section::Topology,
                "[controller]" => Section::Controller,
                "[property]" => Section::Property,
                "[budgets]" => Section::Budgets,
                "[options]" => Section::Options,
                other => {
                    errors.push(ScenarioError::at(line_no, col, format!("unknown section {other}")));
                    Section::None
                }
            };
            continue;
        }
        let kv = trimmed.split_once('=').map(|(k, v)| (k.trim(), v.trim())).filter(|(k, _)| is_key(k));
        if section == Section::Property {
            match kv {
                Some(("expr", v)) => {
                    if expr.is_some() {
                        errors.push(ScenarioError::at(line_no, col, "duplicate key `expr`"));
                    }
                    expr = Some(v.to_string());
                }
                Some((k, _)) => errors.push(ScenarioError::at(line_no, col, format!("unknown key `{k}` in [property]"))),
                None => match expr.as_mut() {
                    Some(e) => {
                        e.push('\n');
                        e.push_str(trimmed);
                    }
                    None => errors.push(ScenarioError::at(line_no, col, "expected `expr = ...`")),
                },
            }
            continue;
        }
        let Some((key, value)) = kv else {
            errors.push(ScenarioError::at(line_no, col, "expected `key = value`"));
            continue;
        };
        let vcol = col + trimmed.find('=').unwrap() + 1;
        let err = |m: String| ScenarioError::at(line_no, vcol, m);
        if key != "link" {
            let tag = section as u8;
            if seen_keys.iter().any(|(s, k)| *s == tag && k == key) {
                errors.push(ScenarioError::at(line_no, col, format!("duplicate key `{key}`")));
                continue;
            }
            seen_keys.push((tag, key.to_string()));
        }
        match section {
            Section::None => errors.push(ScenarioError::at(line_no, col, "key outside of a section")),
            Section::Topology => match key {
                "switches" => {
                    seen_switches = true;
                    sc.topology.switches = value.split_whitespace().map(str::to_string).collect();
                }
                "hosts" => {
                    seen_hosts = true;
                    sc.topology.hosts = value.split_whitespace().map(str::to_string).collect();
                }
                "link" => match parse_link(value) {
                    Some(l) => sc.topology.links.push(l),
                    None => errors.push(err(format!("expected `NODE:PORT NODE:PORT`, got `{value}`"))),
                },
                _ => errors.push(ScenarioError::at(line_no, col, format!("unknown key `{key}` in [topology]"))),
            },
            Section::Controller => {
                if key == "program" {
                    seen_program = true;
                    sc.controller.name = value.to_string();
                } else {
                    sc.controller.params.insert(key.to_string(), value.to_string());
                }
            }
            Section::Budgets => {
                let num = value.parse::<u64>();
                match (key, num) {
                    (_, Err(_)) => errors.push(err(format!("`{value}` is not a number"))),
                    ("max_states", Ok(n)) => sc.budgets.max_states = n as usize,
                    ("max_cq_len", Ok(n)) => sc.budgets.max_cq_len = n as usize,
                    ("max_packets", Ok(n)) => sc.budgets.max_packets = n as usize,
                    ("max_rules", Ok(n)) => sc.budgets.max_rules = n as usize,
                    ("time_limit", Ok(n)) => sc.budgets.time_limit_secs = Some(n),
                    _ => errors.push(ScenarioError::at(line_no, col, format!("unknown key `{key}` in [budgets]"))),
                }
            }
            Section::Options => match key {
                "por" | "merge_chains" => match parse_switch(value) {
                    Some(b) if key == "por" => sc.options.por = b,
                    Some(b) => sc.options.merge_chains = b,
                    None => errors.push(err(format!("expected on or off, got `{value}`"))),
                },
                "threads" => match value.parse::<usize>() {
                    Ok(n) if n >= 1 => sc.options.threads = n,
                    _ => errors.push(err(format!("`{value}` is not a thread count"))),
                },
                _ => errors.push(ScenarioError::at(line_no, col, format!("unknown key `{key}` in [options]"))),
            },
            Section::Property => unreachable!(),
        }
    }
    if !seen_switches {
        errors.push(ScenarioError::key("switches", "switches required"));
    }
    if !seen_hosts {
        errors.push(ScenarioError::key("hosts", "hosts required"));
    }
    if !seen_program {
        errors.push(ScenarioError::key("program", "program required"));
    }
    match expr {
        Some(e) if !e.trim().is_empty() => sc.property = e.trim().to_string(),
        _ => errors.push(ScenarioError::key("property", "property required")),
    }
    if errors.is_empty() {
        Ok(sc)
    } else {
        Err(ScenarioErrors(errors))
    }
}

fn is_key(k: &str) -> bool {
    !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_switch(v: &str) -> Option<bool> {
    match v {
        "on" | "true" | "yes" => Some(true),
        "off" | "false" | "no" => Some(false),
        _ => None,
    }
}

fn parse_link(v: &str) -> Option<((String, u8), (String, u8))> {
    let mut it = v.split_whitespace().map(|e| {
        let (n, p) = e.rsplit_once(':')?;
        Some((n.to_string(), p.parse::<u8>().ok()?))
    });
    let a = it.next()??;
    let b = it.next()??;
    if it.next().is_some() {
        return None;
    }
    Some((a, b))
}

/// Topology and property templates for the shipped scenario families.
pub mod templates {
    use super::*;

    /// `C - A - B - S`.
    pub fn two_switch() -> TopologySpec {
        TopologySpec {
            switches: vec!["A".into(), "B".into()],
            hosts: vec!["C".into(), "S".into()],
            links: vec![
                (("C".into(), 1), ("A".into(), 1)),
                (("A".into(), 2), ("B".into(), 1)),
                (("B".into(), 2), ("S".into(), 1)),
            ],
        }
    }

    /// Client and server joined through `n` parallel switches.
    pub fn replicas(n: usize) -> TopologySpec {
        let switches: Vec<String> = (1..=n).map(|i| format!("R{i}")).collect();
        let mut links = Vec::new();
        for (i, r) in switches.iter().enumerate() {
            let p = (i + 1) as u8;
            links.push((("C".into(), p), (r.clone(), 1)));
            links.push(((r.clone(), 2), ("S".into(), p)));
        }
        TopologySpec { switches, hosts: vec!["C".into(), "S".into()], links }
    }

    /// A line of `s` switches with a host at each end; hosts beyond two
    /// hang off port 3 of successive switches.
    pub fn line(s: usize, h: usize) -> TopologySpec {
        let switches: Vec<String> = (0..s).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
        let hosts: Vec<String> = (1..=h).map(|i| format!("H{i}")).collect();
        let mut links = Vec::new();
        for w in switches.windows(2) {
            links.push(((w[0].clone(), 2), (w[1].clone(), 1)));
        }
        if h >= 1 {
            links.push(((hosts[0].clone(), 1), (switches[0].clone(), 1)));
        }
        if h >= 2 {
            links.push(((switches[s - 1].clone(), 2), (hosts[1].clone(), 1)));
        }
        for (i, host) in hosts.iter().enumerate().skip(2) {
            links.push(((host.clone(), 1), (switches[(i - 2) % s].clone(), 3)));
        }
        TopologySpec { switches, hosts, links }
    }

    pub const NO_SSH_AT_SERVER: &str = "(forall_in (rcvq S) (not (eq ssh 1)))";
    pub const LOOP_FREEDOM: &str = "(forall_switch ?s (forall_in (pq ?s) (not (reached ?s))))";
    pub const NO_DROP_AFTER_VIEW: &str =
        "(on_action (match ?sw ?p ?r) (implies (drops ?r) (not (ctrl_is view ?p ?sw))))";
    pub const NO_DROP_TO_SERVER: &str = "(and (on_action (match ?sw ?p ?r) (implies (drops ?r) (not (pkt ?p (eq dst S))))) (on_action (fwd ?sw ?p ?ports) (implies (drops ?ports) (not (pkt ?p (eq dst S))))))";

    fn scenario(topology: TopologySpec, controller: ProgramSpec, property: &str) -> Scenario {
        Scenario { topology, controller, property: property.to_string(), ..Scenario::default() }
    }

    pub fn cp1(variant: &str) -> Scenario {
        scenario(two_switch(), ProgramSpec::new("cp1").param("variant", variant), NO_SSH_AT_SERVER)
    }

    pub fn cp2(replicas: usize) -> Scenario {
        scenario(super::templates::replicas(replicas), ProgramSpec::new("cp2"), NO_DROP_AFTER_VIEW)
    }

    pub fn cp3(switches: usize, hosts: usize) -> Scenario {
        scenario(line(switches, hosts), ProgramSpec::new("cp3"), LOOP_FREEDOM)
    }

    pub fn cp4(variant: &str) -> Scenario {
        scenario(two_switch(), ProgramSpec::new("cp4").param("variant", variant), NO_SSH_AT_SERVER)
    }

    pub fn cp5(variant: &str) -> Scenario {
        scenario(two_switch(), ProgramSpec::new("cp5").param("variant", variant), NO_DROP_TO_SERVER)
    }
}
