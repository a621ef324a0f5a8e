//! Benchmark suites: a grid of scenario sizes crossed with exploration modes.

use std::fmt::Write as _;
use std::time::Duration;

use anyhow::{bail, Context};

use crate::explore::{self, Verdict};
use crate::scenario::{templates, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Por,
    Full,
    Merge,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Por => "por",
            Mode::Full => "full",
            Mode::Merge => "merge",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Suite {
    pub family: String,
    pub sizes: Vec<(usize, usize)>,
    pub modes: Vec<Mode>,
    pub max_states: usize,
    pub time_limit: Option<Duration>,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub family: String,
    pub size: String,
    pub mode: Mode,
    pub verdict: String,
    pub visited: usize,
    pub transitions: u64,
    pub bytes_per_state: f64,
    pub wall: Duration,
    pub states_per_sec: f64,
    /// The cell hit its budget.
    pub topped: bool,
}

/// Parses a suite file of `key = value` lines.
pub fn parse_suite(text: &str) -> anyhow::Result<Suite> {
    let mut suite = Suite {
        family: String::new(),
        sizes: Vec::new(),
        modes: vec![Mode::Por, Mode::Full],
        max_states: 2_000_000,
        time_limit: None,
    };
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "[suite]" {
            continue;
        }
        let (k, v) = line.split_once('=').with_context(|| format!("line {}: expected `key = value`", i + 1))?;
        let v = v.trim();
        match k.trim() {
            "family" => suite.family = v.to_string(),
            "sizes" => {
                suite.sizes = v
                    .split_whitespace()
                    .map(|s| match s.split_once('x') {
                        Some((a, b)) => Ok((a.parse()?, b.parse()?)),
                        None => Ok((s.parse()?, 0)),
                    })
                    .collect::<Result<_, std::num::ParseIntError>>()
                    .with_context(|| format!("line {}: bad size list", i + 1))?
            }
            "modes" => {
                suite.modes = v
                    .split_whitespace()
                    .map(|m| match m {
                        "por" => Ok(Mode::Por),
                        "full" => Ok(Mode::Full),
                        "merge" => Ok(Mode::Merge),
                        _ => bail!("line {}: unknown mode `{m}`", i + 1),
                    })
                    .collect::<Result<_, _>>()?
            }
            "max_states" => suite.max_states = v.parse().with_context(|| format!("line {}", i + 1))?,
            "time_limit" => suite.time_limit = Some(Duration::from_secs(v.parse().with_context(|| format!("line {}", i + 1))?)),
            other => bail!("line {}: unknown key `{other}`", i + 1),
        }
    }
    if suite.family.is_empty() {
        bail!("suite needs a `family`");
    }
    Ok(suite)
}

/// Scenario for one grid cell.
pub fn instantiate(family: &str, size: (usize, usize)) -> anyhow::Result<Scenario> {
    Ok(match family {
        "cp3" | "maclearn" => templates::cp3(size.0, size.1),
        "cp2" | "stateful" => templates::cp2(size.0),
        "cp1_buggy" => templates::cp1("buggy"),
        "cp1_fixed" => templates::cp1("fixed"),
        "cp4_wrongnest" => templates::cp4("wrongnest"),
        "cp4_fixed" => templates::cp4("fixed"),
        "cp5_buggy" => templates::cp5("buggy"),
        "cp5_fixed" => templates::cp5("fixed"),
        other => bail!("unknown scenario family `{other}`"),
    })
}

fn size_label(family: &str, size: (usize, usize)) -> String {
    match family {
        "cp3" | "maclearn" => format!("{}x{}", size.0, size.1),
        "cp2" | "stateful" => size.0.to_string(),
        _ => "-".into(),
    }
}

pub fn run(suite: &Suite) -> anyhow::Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &size in &suite.sizes {
        let sc = instantiate(&suite.family, size)?;
        for &mode in &suite.modes {
            let checker = sc.build()?;
            let mut opts = sc.explore_options();
            opts.por = mode != Mode::Full;
            opts.merge_chains = mode == Mode::Merge;
            opts.max_states = suite.max_states;
            opts.time_limit = suite.time_limit;
            let run = explore::explore(&checker.model, &checker.property, &opts)?;
            rows.push(Row {
                family: suite.family.clone(),
                size: size_label(&suite.family, size),
                mode,
                verdict: run.verdict.name().to_string(),
                visited: run.stats.visited,
                transitions: run.stats.transitions,
                bytes_per_state: run.stats.bytes_per_state,
                wall: run.stats.elapsed,
                states_per_sec: run.stats.states_per_sec,
                topped: matches!(run.verdict, Verdict::ResourceLimit { .. }),
            });
        }
    }
    Ok(rows)
}

/// Tab-separated table with a header line.
pub fn render(rows: &[Row]) -> String {
    let mut out = String::from("family\tsize\tmode\tverdict\tvisited\ttransitions\tbytes_per_state\twall_ms\tstates_per_sec\n");
    for r in rows {
        let visited = if r.topped { format!(">{}", r.visited) } else { r.visited.to_string() };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.1}\t{}\t{:.0}",
            r.family,
            r.size,
            r.mode.name(),
            r.verdict,
            visited,
            r.transitions,
            r.bytes_per_state,
            r.wall.as_millis(),
            r.states_per_sec
        );
    }
    out
}
