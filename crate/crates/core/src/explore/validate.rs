use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use rustc_hash::FxHashSet;

use super::*;
use crate::semantics::ActionKind;

/// Outcome of checking the ample-set side conditions on a reduced graph.
#[derive(Clone, Debug)]
pub struct PorReport {
    pub states: usize,
    pub reduced_states: usize,
    /// States whose ample set was empty.
    pub c1_violations: usize,
    /// Members of proper ample sets that are not safe.
    pub c3_violations: usize,
    /// Cyclic components with no fully expanded state.
    pub c4_violations: usize,
    pub cyclic_components: usize,
    pub verdict: Verdict,
}

impl PorReport {
    pub fn ok(&self) -> bool {
        self.c1_violations == 0 && self.c3_violations == 0 && self.c4_violations == 0
    }
}

/// Explores the reduced graph and checks C1, C3 and C4 on it.
pub fn validate_por(model: &Model, property: &Property, opts: &Options) -> Result<PorReport, ExploreError> {
    let opts = Options { por: true, merge_chains: false, record_graph: true, stop_on_violation: false, threads: 1, ..opts.clone() };
    let run = explore(model, property, &opts)?;
    let graph = run.graph.expect("graph recorded");
    let ctx = PorContext::new(model, property);
    let n = run.states.len();

    let mut out_degree = vec![0usize; n];
    for &(a, _) in &graph.edges {
        out_degree[a as usize] += 1;
    }
    let complete = matches!(run.verdict, Verdict::Holds | Verdict::Violated(_));
    let c1_violations = if complete { out_degree.iter().filter(|d| **d == 0).count() } else { 0 };

    let c3_violations: usize = (0..n)
        .into_par_iter()
        .filter(|&i| !graph.full[i] && out_degree[i] > 0)
        .map(|i| {
            let s = model.unpack(&run.states[i]);
            let enabled = model.enabled(&s);
            let Ok(ample) = ctx.ample(&s) else { return 1 };
            let mut bad = 0;
            if ample.successors.len() >= enabled.len() {
                bad += 1;
            }
            for (a, _) in &ample.successors {
                let safe = enabled.contains(a) && ctx.is_safe(&s, a).map(|v| v.safe).unwrap_or(false);
                if !safe {
                    bad += 1;
                }
            }
            bad
        })
        .sum();

    let mut g = DiGraph::<(), ()>::with_capacity(n, graph.edges.len());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    let mut self_loop = vec![false; n];
    for &(a, b) in &graph.edges {
        if a == b {
            self_loop[a as usize] = true;
        }
        g.add_edge(nodes[a as usize], nodes[b as usize], ());
    }
    let mut cyclic_components = 0;
    let mut c4_violations = 0;
    for scc in tarjan_scc(&g) {
        let cyclic = scc.len() > 1 || self_loop[scc[0].index()];
        if !cyclic {
            continue;
        }
        cyclic_components += 1;
        if !scc.iter().any(|v| graph.full[v.index()]) {
            c4_violations += 1;
        }
    }
    Ok(PorReport {
        states: n,
        reduced_states: graph.full.iter().filter(|f| !**f).count(),
        c1_violations,
        c3_violations,
        c4_violations,
        cyclic_components,
        verdict: run.verdict,
    })
}

/// Full and reduced runs of the same model side by side.
#[derive(Debug)]
pub struct ModeComparison {
    pub full: Exploration,
    pub reduced: Exploration,
    pub verdicts_equal: bool,
    /// Reduced states that the full run never visited.
    pub not_in_full: usize,
    pub ratio: f64,
}

impl ModeComparison {
    pub fn subset(&self) -> bool {
        self.not_in_full == 0
    }

    pub fn conclusive(&self) -> bool {
        !matches!(self.full.verdict, Verdict::ResourceLimit { .. })
            && !matches!(self.reduced.verdict, Verdict::ResourceLimit { .. })
    }
}

/// Runs the model with and without reduction and compares the results.
pub fn compare_modes(model: &Model, property: &Property, opts: &Options) -> Result<ModeComparison, ExploreError> {
    let base = Options { stop_on_violation: false, threads: 1, record_graph: false, ..opts.clone() };
    let full = explore(model, property, &Options { por: false, merge_chains: false, ..base.clone() })?;
    let reduced = explore(model, property, &Options { por: true, ..base })?;
    let known: FxHashSet<&PackedState> = full.states.iter().collect();
    let not_in_full = reduced.states.iter().filter(|p| !known.contains(p)).count();
    let verdicts_equal = full.verdict.name() == reduced.verdict.name();
    let ratio = full.stats.visited as f64 / reduced.stats.visited.max(1) as f64;
    Ok(ModeComparison { full, reduced, verdicts_equal, not_in_full, ratio })
}

/// Two controller actions whose order matters.
#[derive(Clone, Debug)]
pub struct OrderWitness {
    pub state: PackedState,
    pub first: Action,
    pub second: Action,
}

#[derive(Clone, Debug)]
pub struct OrderCheck {
    pub witness: Option<OrderWitness>,
    pub states_checked: usize,
    /// The reachable state space was covered within the bound.
    pub complete: bool,
}

impl OrderCheck {
    pub fn sensitive(&self) -> Option<bool> {
        match (&self.witness, self.complete) {
            (Some(_), _) => Some(true),
            (None, true) => Some(false),
            (None, false) => None,
        }
    }
}

/// Searches reachable states (up to `bound`) for two enabled ctrl or bsync
/// actions whose two firing orders reach different states.
pub fn validate_order_sensitivity(model: &Model, bound: usize) -> Result<OrderCheck, ExploreError> {
    let trivial = Property::trivial();
    let opts = Options { por: false, max_states: bound, stop_on_violation: false, ..Options::default() };
    let run = explore(model, &trivial, &opts)?;
    let complete = matches!(run.verdict, Verdict::Holds);
    let witness = run
        .states
        .par_iter()
        .map(|p| order_witness(model, p))
        .find_first(|w| !matches!(w, Ok(None)))
        .transpose()?
        .flatten();
    Ok(OrderCheck { witness, states_checked: run.states.len(), complete })
}

fn order_witness(model: &Model, p: &PackedState) -> Result<Option<OrderWitness>, ExploreError> {
    let s = model.unpack(p);
    let ctrl: Vec<Action> = model
        .enabled(&s)
        .into_iter()
        .filter(|a| matches!(a.kind(), ActionKind::Ctrl | ActionKind::Bsync))
        .collect();
    for (i, a) in ctrl.iter().enumerate() {
        for b in &ctrl[i + 1..] {
            let sa = model.fire(&s, a)?;
            let sb = model.fire(&s, b)?;
            if !model.is_enabled(&sa, b) || !model.is_enabled(&sb, a) {
                continue;
            }
            let (ab, ba) = (model.fire(&sa, b)?, model.fire(&sb, a)?);
            if ab != ba {
                return Ok(Some(OrderWitness { state: p.clone(), first: *a, second: *b }));
            }
        }
    }
    Ok(None)
}
