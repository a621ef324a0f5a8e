//! State-space exploration, counterexamples and run statistics.

use std::fmt;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxBuildHasher;
use smallvec::{smallvec, SmallVec};
use thiserror::Error;

use crate::model::{PackedState, SystemState};
use crate::por::{self, Ample, PorContext};
use crate::property::Property;
use crate::semantics::{Action, FireError, Model};

mod parallel;
mod trace;
mod validate;

pub use trace::{replay, Counterexample, ReplayError, ReplayOutcome, TraceDoc, Violation};
pub use validate::{
    compare_modes, validate_order_sensitivity, validate_por, ModeComparison, OrderCheck, OrderWitness, PorReport,
};

/// Longest run of safe actions fused into one step.
const MAX_CHAIN: usize = 4096;

#[derive(Clone, Debug)]
pub struct Options {
    pub por: bool,
    pub merge_chains: bool,
    pub max_states: usize,
    pub time_limit: Option<Duration>,
    /// Stop at the first violation instead of finishing the search.
    pub stop_on_violation: bool,
    /// Permute successor order with this seed.
    pub shuffle_seed: Option<u64>,
    pub threads: usize,
    /// Keep the explored graph for the ample-set validators.
    pub record_graph: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            por: true,
            merge_chains: false,
            max_states: 10_000_000,
            time_limit: None,
            stop_on_violation: true,
            shuffle_seed: None,
            threads: 1,
            record_graph: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated(Box<Counterexample>),
    ResourceLimit { states: usize, reason: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated(_) => "violated",
            Verdict::ResourceLimit { .. } => "resource-limit",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Violated(_) => 1,
            Verdict::ResourceLimit { .. } => 2,
        }
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Verdict::Violated(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::ResourceLimit { states, reason } => write!(f, "resource-limit ({reason} after {states} states)"),
            v => f.write_str(v.name()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub visited: usize,
    pub transitions: u64,
    pub peak_stored: usize,
    pub store_bytes: usize,
    pub bytes_per_state: f64,
    pub full_expansions: u64,
    pub reduced_expansions: u64,
    pub fused_steps: u64,
    pub elapsed: Duration,
    pub states_per_sec: f64,
}

impl RunStats {
    fn finish(&mut self, visited: usize, store_bytes: usize, started: Instant) {
        self.visited = visited;
        self.store_bytes = store_bytes;
        self.bytes_per_state = if visited == 0 { 0.0 } else { store_bytes as f64 / visited as f64 };
        self.elapsed = started.elapsed();
        let secs = self.elapsed.as_secs_f64();
        self.states_per_sec = if secs > 0.0 { visited as f64 / secs } else { 0.0 };
    }

    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        format!(
            "visited={}\ntransitions={}\npeak_stored={}\nstore_bytes={}\nbytes_per_state={:.1}\nfull_expansions={}\nreduced_expansions={}\nfused_steps={}\nwall_ms={}\nstates_per_sec={:.0}\n",
            self.visited,
            self.transitions,
            self.peak_stored,
            self.store_bytes,
            self.bytes_per_state,
            self.full_expansions,
            self.reduced_expansions,
            self.fused_steps,
            self.elapsed.as_millis(),
            self.states_per_sec,
        )
    }
}

/// Reduced or full graph kept for validation.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    pub full: Vec<bool>,
    pub edges: Vec<(u32, u32)>,
}

#[derive(Debug)]
pub struct Exploration {
    pub verdict: Verdict,
    pub stats: RunStats,
    /// Visited states in discovery order.
    pub states: Vec<PackedState>,
    pub graph: Option<Graph>,
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("model error: {0}")]
    Fire(#[from] FireError),
}

#[derive(Clone, Debug)]
struct Entry {
    parent: u32,
    steps: Steps,
}

const ROOT: u32 = u32::MAX;

/// Actions taken along one stored edge; more than one when chains are fused.
pub(crate) type Steps = SmallVec<[Action; 1]>;

enum Stop {
    Limit(String),
    Error(ExploreError),
}

impl From<FireError> for Stop {
    fn from(e: FireError) -> Self {
        if e.is_resource() {
            Stop::Limit(e.to_string())
        } else {
            Stop::Error(ExploreError::Fire(e))
        }
    }
}

/// Successors of `s` in the selected mode, each with the actions fused into it.
pub(crate) fn expand(
    ctx: &PorContext,
    opts: &Options,
    s: &SystemState,
    stats: &mut RunStats,
) -> Result<(bool, Vec<(Steps, SystemState)>), FireError> {
    let ample: Ample = if opts.por { ctx.ample(s)? } else { por::full(ctx.model, s, ctx.model.enabled(s))? };
    if ample.full {
        stats.full_expansions += 1;
    } else {
        stats.reduced_expansions += 1;
    }
    Ok((ample.full, ample.successors.into_iter().map(|(a, t)| (smallvec![a], t)).collect()))
}

/// Extends a step through safe actions while every intermediate state is
/// invisible. Stops early at a modality violation.
pub(crate) fn fuse(
    ctx: &PorContext,
    steps: &mut Steps,
    cur: &mut SystemState,
    stats: &mut RunStats,
) -> Result<Option<usize>, FireError> {
    while steps.len() < MAX_CHAIN {
        if !ctx.property.holds(ctx.model, cur) {
            break;
        }
        let Some((a, next)) = ctx.first_safe(cur)? else { break };
        stats.transitions += 1;
        stats.fused_steps += 1;
        steps.push(a);
        let bad = ctx.property.violated_modality(ctx.model, &a, &next);
        *cur = next;
        if bad.is_some() {
            return Ok(bad);
        }
    }
    Ok(None)
}

/// Exhaustive search from the initial state.
pub fn explore(model: &Model, property: &Property, opts: &Options) -> Result<Exploration, ExploreError> {
    if opts.threads > 1 {
        return parallel::explore(model, property, opts);
    }
    let started = Instant::now();
    let ctx = PorContext::new(model, property);
    let mut stats = RunStats::default();
    let mut store: IndexMap<PackedState, Entry, FxBuildHasher> = IndexMap::default();
    let mut graph = opts.record_graph.then(Graph::default);
    let mut rng = opts.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    let mut violation: Option<Counterexample> = None;
    let mut store_bytes = 0usize;

    let s0 = model.initial_state();
    let p0 = model.pack(&s0);
    store_bytes += p0.byte_len();
    store.insert(p0, Entry { parent: ROOT, steps: Steps::new() });
    if let Some(g) = graph.as_mut() {
        g.full.push(false);
    }
    if !property.holds(model, &s0) {
        violation = Some(Counterexample { actions: Vec::new(), violation: Violation::Invariant });
    }
    let mut stack: Vec<u32> = vec![0];
    let mut scratch = Vec::new();
    let mut stop = None;
    let mut expansions = 0u64;

    'search: while let Some(i) = stack.pop() {
        if violation.is_some() && opts.stop_on_violation {
            break;
        }
        expansions += 1;
        if expansions % 1024 == 0 {
            if let Some(limit) = opts.time_limit {
                if started.elapsed() > limit {
                    stop = Some(Stop::Limit(format!("time limit {}s", limit.as_secs())));
                    break;
                }
            }
        }
        let s = model.unpack(store.get_index(i as usize).unwrap().0);
        let (full, mut succs) = match expand(&ctx, opts, &s, &mut stats) {
            Ok(x) => x,
            Err(e) => {
                stop = Some(e.into());
                break;
            }
        };
        if let Some(g) = graph.as_mut() {
            g.full[i as usize] = full;
        }
        if let Some(r) = rng.as_mut() {
            succs.shuffle(r);
        }
        for (mut steps, mut cur) in succs {
            stats.transitions += 1;
            let a = steps[0];
            let mut bad = property.violated_modality(model, &a, &cur);
            if bad.is_none() && opts.por && opts.merge_chains {
                match fuse(&ctx, &mut steps, &mut cur, &mut stats) {
                    Ok(b) => bad = b,
                    Err(e) => {
                        stop = Some(e.into());
                        break 'search;
                    }
                }
            }
            if let Some(index) = bad {
                if violation.is_none() {
                    let mut actions = path(&store, i);
                    actions.extend_from_slice(&steps);
                    let action = *steps.last().unwrap();
                    violation = Some(Counterexample { actions, violation: Violation::Modality { index, action } });
                }
                if opts.stop_on_violation {
                    break 'search;
                }
            }
            model.pack_into(&cur, &mut scratch);
            let bytes = scratch.len() * 8;
            let (j, fresh) = match store.get_index_of(&scratch[..]) {
                Some(j) => (j, false),
                None => {
                    let key = PackedState(scratch.as_slice().into());
                    let (j, _) = store.insert_full(key, Entry { parent: i, steps });
                    (j, true)
                }
            };
            if let Some(g) = graph.as_mut() {
                if fresh {
                    g.full.push(false);
                }
                g.edges.push((i, j as u32));
            }
            if !fresh {
                continue;
            }
            store_bytes += bytes;
            if store.len() > opts.max_states {
                stop = Some(Stop::Limit(format!("state budget {}", opts.max_states)));
                break 'search;
            }
            if !property.holds(model, &cur) && violation.is_none() {
                violation = Some(Counterexample { actions: path(&store, j as u32), violation: Violation::Invariant });
                if opts.stop_on_violation {
                    break 'search;
                }
            }
            stack.push(j as u32);
            stats.peak_stored = stats.peak_stored.max(store.len());
        }
    }
    stats.peak_stored = stats.peak_stored.max(store.len());
    stats.finish(store.len(), store_bytes, started);
    let verdict = match (violation, stop) {
        (Some(c), _) => Verdict::Violated(Box::new(c)),
        (None, Some(Stop::Error(e))) => return Err(e),
        (None, Some(Stop::Limit(reason))) => Verdict::ResourceLimit { states: store.len(), reason },
        (None, None) => Verdict::Holds,
    };
    Ok(Exploration { verdict, stats, states: store.into_keys().collect(), graph })
}

fn path(store: &IndexMap<PackedState, Entry, FxBuildHasher>, mut i: u32) -> Vec<Action> {
    let mut chunks = Vec::new();
    while i != ROOT {
        let e = &store.get_index(i as usize).unwrap().1;
        chunks.push(e.steps.clone());
        i = e.parent;
    }
    chunks.into_iter().rev().flatten().collect()
}
