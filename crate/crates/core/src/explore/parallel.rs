//! Level-synchronous breadth-first search over a shared visited store.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use dashmap::mapref::entry::Entry as MapEntry;
use dashmap::DashMap;
use parking_lot::Mutex;
use rayon::prelude::*;
use rustc_hash::FxBuildHasher;

use super::*;

struct Node {
    parent: Option<PackedState>,
    steps: Steps,
}

type Store = DashMap<PackedState, Node, FxBuildHasher>;

struct Found {
    parent: Option<PackedState>,
    steps: Steps,
    violation: Violation,
}

pub(super) fn explore(model: &Model, property: &Property, opts: &Options) -> Result<Exploration, ExploreError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.threads).build();
    match pool {
        Ok(pool) => pool.install(|| run(model, property, opts)),
        Err(_) => run(model, property, opts),
    }
}

fn run(model: &Model, property: &Property, opts: &Options) -> Result<Exploration, ExploreError> {
    let started = Instant::now();
    let ctx = PorContext::new(model, property);
    let store: Store = DashMap::with_hasher(FxBuildHasher);
    let cancel = AtomicBool::new(false);
    let found: Mutex<Option<Found>> = Mutex::new(None);
    let publish = |f: Found| {
        let mut slot = found.lock();
        if slot.is_none() {
            *slot = Some(f);
        }
        if opts.stop_on_violation {
            cancel.store(true, Ordering::Relaxed);
        }
    };

    let s0 = model.initial_state();
    let p0 = model.pack(&s0);
    store.insert(p0.clone(), Node { parent: None, steps: Steps::new() });
    if !property.holds(model, &s0) {
        publish(Found { parent: None, steps: Steps::new(), violation: Violation::Invariant });
    }
    let mut stats = RunStats::default();
    let mut frontier = vec![p0];
    let mut stop: Option<Stop> = None;

    while !frontier.is_empty() && !cancel.load(Ordering::Relaxed) {
        if let Some(limit) = opts.time_limit {
            if started.elapsed() > limit {
                stop = Some(Stop::Limit(format!("time limit {}s", limit.as_secs())));
                break;
            }
        }
        let results: Vec<Result<(Vec<PackedState>, RunStats), Stop>> = frontier
            .par_iter()
            .map(|p| {
                let mut local = RunStats::default();
                let mut fresh_states = Vec::new();
                if cancel.load(Ordering::Relaxed) {
                    return Ok((fresh_states, local));
                }
                let s = model.unpack(p);
                let (_, succs) = expand(&ctx, opts, &s, &mut local)?;
                for (mut steps, mut cur) in succs {
                    local.transitions += 1;
                    let mut bad = property.violated_modality(model, &steps[0], &cur);
                    if bad.is_none() && opts.por && opts.merge_chains {
                        bad = fuse(&ctx, &mut steps, &mut cur, &mut local)?;
                    }
                    if let Some(index) = bad {
                        let action = *steps.last().unwrap();
                        publish(Found {
                            parent: Some(p.clone()),
                            steps: steps.clone(),
                            violation: Violation::Modality { index, action },
                        });
                        if opts.stop_on_violation {
                            break;
                        }
                    }
                    let packed = model.pack(&cur);
                    let fresh = match store.entry(packed.clone()) {
                        MapEntry::Vacant(v) => {
                            v.insert(Node { parent: Some(p.clone()), steps });
                            true
                        }
                        MapEntry::Occupied(_) => false,
                    };
                    if !fresh {
                        continue;
                    }
                    if !property.holds(model, &cur) {
                        publish(Found { parent: Some(packed.clone()), steps: Steps::new(), violation: Violation::Invariant });
                    }
                    fresh_states.push(packed);
                }
                Ok((fresh_states, local))
            })
            .collect();
        let mut next = Vec::new();
        for r in results {
            match r {
                Ok((states, local)) => {
                    next.extend(states);
                    stats.transitions += local.transitions;
                    stats.full_expansions += local.full_expansions;
                    stats.reduced_expansions += local.reduced_expansions;
                    stats.fused_steps += local.fused_steps;
                }
                Err(e) => {
                    if stop.is_none() {
                        stop = Some(e);
                    }
                }
            }
        }
        stats.peak_stored = stats.peak_stored.max(store.len());
        if stop.is_some() {
            break;
        }
        if store.len() > opts.max_states {
            stop = Some(Stop::Limit(format!("state budget {}", opts.max_states)));
            break;
        }
        frontier = next;
    }

    let store_bytes = store.iter().map(|e| e.key().byte_len()).sum();
    stats.finish(store.len(), store_bytes, started);
    let violation = found.into_inner().map(|f| {
        let mut actions = match &f.parent {
            Some(p) => path(&store, p),
            None => Vec::new(),
        };
        actions.extend(f.steps);
        Counterexample { actions, violation: f.violation }
    });
    let verdict = match (violation, stop) {
        (Some(c), _) => Verdict::Violated(Box::new(c)),
        (None, Some(Stop::Error(e))) => return Err(e),
        (None, Some(Stop::Limit(reason))) => Verdict::ResourceLimit { states: store.len(), reason },
        (None, None) => Verdict::Holds,
    };
    let states = store.into_iter().map(|(k, _)| k).collect();
    Ok(Exploration { verdict, stats, states, graph: None })
}

fn path(store: &Store, p: &PackedState) -> Vec<Action> {
    let mut chunks = Vec::new();
    let mut cur = Some(p.clone());
    while let Some(k) = cur {
        let node = store.get(&k).expect("parent chain is stored");
        chunks.push(node.steps.clone());
        cur = node.parent.clone();
    }
    chunks.into_iter().rev().flatten().collect()
}
