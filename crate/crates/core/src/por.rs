//! Contextual partial-order reduction: per-action safeness and ample sets.

use std::fmt;

use crate::model::SystemState;
use crate::property::Property;
use crate::semantics::{Action, ActionKind, FireError, Model};
use crate::topology::{NodeId, SwitchId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    /// The action kind is never safe.
    NeverSafe,
    /// Barrier replies are always safe.
    Brepl,
    OrderSensitive,
    /// Firing changes an atom of the property or state it observes.
    Visible,
    /// Some co-enabled action does not commute with it here.
    Dependent,
    Invisible,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::NeverSafe => "never safe",
            Reason::Brepl => "barrier reply",
            Reason::OrderSensitive => "order-sensitive program",
            Reason::Visible => "visible",
            Reason::Dependent => "dependent",
            Reason::Invisible => "invisible",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SafenessVerdict {
    pub safe: bool,
    pub reason: Reason,
    /// Whether the verdict required firing the action.
    pub dynamic: bool,
}

/// Program, topology and property the reduction is computed against.
#[derive(Debug, Clone, Copy)]
pub struct PorContext<'a> {
    pub model: &'a Model,
    pub property: &'a Property,
    pub order_sensitive: bool,
}

/// Successors selected at one state.
#[derive(Debug, Clone)]
pub struct Ample {
    pub successors: Vec<(Action, SystemState)>,
    /// All enabled actions were selected.
    pub full: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Res {
    Rcvq(u16),
    Fq(u16),
    Rq,
    Brq,
    Cq(u16),
    Ft(u16),
    Cs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Read,
    Write,
}

impl<'a> PorContext<'a> {
    pub fn new(model: &'a Model, property: &'a Property) -> Self {
        PorContext { model, property, order_sensitive: model.program().metadata().order_sensitive }
    }

    /// Verdict for `a` at `s` with its successor already computed.
    pub fn is_safe_with(
        &self,
        s: &SystemState,
        a: &Action,
        next: &SystemState,
        enabled: &[Action],
    ) -> Result<SafenessVerdict, FireError> {
        let verdict = |safe, reason, dynamic| SafenessVerdict { safe, reason, dynamic };
        match a.kind() {
            ActionKind::Send | ActionKind::Match | ActionKind::NoMatch | ActionKind::Add | ActionKind::Del => {
                return Ok(verdict(false, Reason::NeverSafe, false));
            }
            ActionKind::Ctrl | ActionKind::Bsync if self.order_sensitive => {
                return Ok(verdict(false, Reason::OrderSensitive, false));
            }
            _ => {}
        }
        if a.kind() != ActionKind::Brepl && !self.invisible(s, next) {
            return Ok(verdict(false, Reason::Visible, true));
        }
        if !self.independent_here(s, a, next, enabled)? {
            return Ok(verdict(false, Reason::Dependent, true));
        }
        let reason = if a.kind() == ActionKind::Brepl { Reason::Brepl } else { Reason::Invisible };
        Ok(verdict(true, reason, true))
    }

    pub fn is_safe(&self, s: &SystemState, a: &Action) -> Result<SafenessVerdict, FireError> {
        let next = self.model.fire(s, a)?;
        let enabled = self.model.enabled(s);
        self.is_safe_with(s, a, &next, &enabled)
    }

    fn invisible(&self, s: &SystemState, next: &SystemState) -> bool {
        let fp = self.property.footprint();
        if fp.ctrl_under_binder && s.ctrl.cs != next.ctrl.cs {
            return false;
        }
        self.property.atom_values(self.model, s) == self.property.atom_values(self.model, next)
    }

    /// Every co-enabled action that could interfere commutes with `a` at `s`
    /// and neither disables the other.
    fn independent_here(
        &self,
        s: &SystemState,
        a: &Action,
        next: &SystemState,
        enabled: &[Action],
    ) -> Result<bool, FireError> {
        let fa = self.footprint(a);
        let modal = &self.property.footprint().modal_kinds;
        for b in enabled {
            if b == a || !overlaps(&fa, &self.footprint(b)) {
                continue;
            }
            let sb = self.model.fire(s, b)?;
            if sb == *s && !modal.contains(&b.kind()) {
                continue;
            }
            if !self.model.is_enabled(next, b) || !self.model.is_enabled(&sb, a) {
                return Ok(false);
            }
            if self.model.fire(next, b)? != self.model.fire(&sb, a)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn footprint(&self, a: &Action) -> Vec<(Res, Mode)> {
        use Mode::*;
        let topo = self.model.topology();
        let all_switches = || topo.switches().map(|s| s.0);
        let targets = |sw: SwitchId, ports: crate::topology::PortSet| {
            ports
                .iter()
                .filter(|p| !p.is_drop())
                .filter_map(move |p| topo.next_hop(crate::topology::Location::new(sw, p)).ok())
                .filter_map(|l| match l.node {
                    NodeId::Host(h) => Some((Res::Rcvq(h.0), Write)),
                    NodeId::Switch(_) => None,
                })
                .collect::<Vec<_>>()
        };
        match *a {
            Action::Send { .. } => Vec::new(),
            Action::Recv { host, .. } => vec![(Res::Rcvq(host.0), Write)],
            Action::Match { sw, rule, .. } => {
                let mut v = targets(sw, self.model.rule(rule).ports);
                v.push((Res::Ft(sw.0), Read));
                v
            }
            Action::NoMatch { sw, .. } => vec![(Res::Ft(sw.0), Read), (Res::Rq, Write)],
            Action::Ctrl { .. } | Action::Bsync { .. } => {
                let q = if a.kind() == ActionKind::Ctrl { Res::Rq } else { Res::Brq };
                let mut v = vec![(q, Write), (Res::Cs, Write)];
                for s in all_switches() {
                    v.push((Res::Cq(s), Write));
                    v.push((Res::Fq(s), Write));
                    v.push((Res::Ft(s), Read));
                }
                v
            }
            Action::Fwd { sw, ports, .. } => {
                let mut v = targets(sw, ports);
                v.push((Res::Fq(sw.0), Write));
                v
            }
            Action::Add { sw, .. } | Action::Del { sw, .. } => vec![(Res::Cq(sw.0), Write), (Res::Ft(sw.0), Write)],
            Action::Brepl { sw, .. } => vec![(Res::Cq(sw.0), Write), (Res::Brq, Write)],
        }
    }

    /// Ample set per the safe-action construction: every safe enabled
    /// action if there is one, otherwise all enabled actions.
    pub fn ample(&self, s: &SystemState) -> Result<Ample, FireError> {
        let enabled = self.model.enabled(s);
        let mut safe = Vec::new();
        for a in &enabled {
            if !candidate(a.kind()) || (self.order_sensitive && matches!(a.kind(), ActionKind::Ctrl | ActionKind::Bsync)) {
                continue;
            }
            let next = self.model.fire(s, a)?;
            if self.is_safe_with(s, a, &next, &enabled)?.safe {
                safe.push((*a, next));
            }
        }
        if !safe.is_empty() {
            return Ok(Ample { successors: safe, full: false });
        }
        full(self.model, s, enabled)
    }

    /// The first safe enabled action, if any. Used when fusing chains.
    pub fn first_safe(&self, s: &SystemState) -> Result<Option<(Action, SystemState)>, FireError> {
        let enabled = self.model.enabled(s);
        for a in &enabled {
            if !candidate(a.kind()) {
                continue;
            }
            let next = self.model.fire(s, a)?;
            if self.is_safe_with(s, a, &next, &enabled)?.safe {
                return Ok(Some((*a, next)));
            }
        }
        Ok(None)
    }
}

fn candidate(k: ActionKind) -> bool {
    matches!(k, ActionKind::Recv | ActionKind::Ctrl | ActionKind::Fwd | ActionKind::Brepl | ActionKind::Bsync)
}

fn overlaps(a: &[(Res, Mode)], b: &[(Res, Mode)]) -> bool {
    a.iter().any(|(ra, ma)| b.iter().any(|(rb, mb)| ra == rb && (*ma == Mode::Write || *mb == Mode::Write)))
}

/// All enabled actions with their successors.
pub fn full(model: &Model, s: &SystemState, enabled: Vec<Action>) -> Result<Ample, FireError> {
    let successors = enabled.into_iter().map(|a| model.fire(s, &a).map(|n| (a, n))).collect::<Result<_, _>>()?;
    Ok(Ample { successors, full: true })
}
