use std::fmt;

use smallvec::SmallVec;

use serde::{Deserialize, Serialize};

use crate::topology::{PortSet, SwitchId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PacketId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RuleId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Xid(pub u32);

impl fmt::Display for Xid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Growable bitset over dense ids. Trailing zero words are never stored,
/// so equal sets compare and hash equal.
#[derive(Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IdSet {
    words: SmallVec<[u64; 2]>,
}

impl Clone for IdSet {
    fn clone(&self) -> Self {
        IdSet { words: SmallVec::from_slice(&self.words) }
    }
}

impl IdSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, id: u32) -> bool {
        let w = (id / 64) as usize;
        w < self.words.len() && self.words[w] & (1u64 << (id % 64)) != 0
    }

    /// Returns true when the id was newly added.
    pub fn insert(&mut self, id: u32) -> bool {
        let w = (id / 64) as usize;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        let bit = 1u64 << (id % 64);
        let fresh = self.words[w] & bit == 0;
        self.words[w] |= bit;
        fresh
    }

    /// Returns true when the id was present.
    pub fn remove(&mut self, id: u32) -> bool {
        let w = (id / 64) as usize;
        if w >= self.words.len() {
            return false;
        }
        let bit = 1u64 << (id % 64);
        let had = self.words[w] & bit != 0;
        self.words[w] &= !bit;
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
        had
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some(i as u32 * 64 + b)
            })
        })
    }
}

impl fmt::Debug for IdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<u32> for IdSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        let mut s = IdSet::new();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

/// Ordered set kept as a sorted inline vector.
#[derive(PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VecSet<T> {
    items: SmallVec<[T; 4]>,
}

impl<T: Copy> Clone for VecSet<T> {
    fn clone(&self) -> Self {
        VecSet { items: SmallVec::from_slice(&self.items) }
    }
}

impl<T> Default for VecSet<T> {
    fn default() -> Self {
        VecSet { items: SmallVec::new() }
    }
}

impl<T: Ord> VecSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: T) -> bool {
        match self.items.binary_search(&v) {
            Ok(_) => false,
            Err(i) => {
                self.items.insert(i, v);
                true
            }
        }
    }

    pub fn remove(&mut self, v: &T) -> bool {
        match self.items.binary_search(v) {
            Ok(i) => {
                self.items.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    pub fn contains(&self, v: &T) -> bool {
        self.items.binary_search(v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn first(&self) -> Option<&T> {
        self.items.first()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.items.iter()
    }
}

impl<T: fmt::Debug> fmt::Debug for VecSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.items.iter()).finish()
    }
}

impl<T: Ord> FromIterator<T> for VecSet<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = VecSet::new();
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl<T: Ord, const N: usize> From<[T; N]> for VecSet<T> {
    fn from(items: [T; N]) -> Self {
        items.into_iter().collect()
    }
}

impl<'a, T> IntoIterator for &'a VecSet<T> {
    type Item = &'a T;
    type IntoIter = std::slice::Iter<'a, T>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlowOp {
    Add,
    Del,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowMod {
    pub rule: RuleId,
    pub op: FlowOp,
}

/// One element of a control queue.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CqEntry {
    /// Unordered batch of flow modifications; never empty.
    FlowMods(VecSet<FlowMod>),
    Barrier(Xid),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SwitchState {
    /// Installed rules.
    pub ft: IdSet,
    /// Packets waiting for processing. Bits are never cleared.
    pub pq: IdSet,
    /// Pending PacketOut instructions.
    pub fq: VecSet<(PacketId, PortSet)>,
    pub cq: Vec<CqEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct HostState {
    pub rcvq: IdSet,
}

/// Fixed-width controller state.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CtrlState {
    words: Vec<u64>,
}

impl CtrlState {
    pub fn zeros(bits: usize) -> Self {
        CtrlState { words: vec![0; bits.div_ceil(64)] }
    }

    pub fn from_words(words: Vec<u64>) -> Self {
        CtrlState { words }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn set_bit(&mut self, i: usize, v: bool) {
        let m = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    /// Reads `width <= 64` bits starting at `off`.
    pub fn bits(&self, off: usize, width: usize) -> u64 {
        (0..width).fold(0, |acc, i| acc | ((self.bit(off + i) as u64) << i))
    }

    pub fn set_bits(&mut self, off: usize, width: usize, v: u64) {
        for i in 0..width {
            self.set_bit(off + i, v & (1u64 << i) != 0);
        }
    }
}

impl fmt::Debug for CtrlState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("cs[")?;
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{w:016x}")?;
        }
        f.write_str("]")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ControllerEnv {
    pub cs: CtrlState,
    /// Pending PacketIn requests.
    pub rq: VecSet<(SwitchId, PacketId)>,
    /// Pending barrier replies.
    pub brq: VecSet<(SwitchId, Xid)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SystemState {
    pub hosts: Vec<HostState>,
    pub switches: Vec<SwitchState>,
    pub ctrl: ControllerEnv,
}

impl SystemState {
    pub fn switch(&self, s: SwitchId) -> &SwitchState {
        &self.switches[s.0 as usize]
    }

    pub fn switch_mut(&mut self, s: SwitchId) -> &mut SwitchState {
        &mut self.switches[s.0 as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idset_canonical_after_remove() {
        let mut a = IdSet::new();
        a.insert(3);
        a.insert(200);
        a.remove(200);
        let mut b = IdSet::new();
        b.insert(3);
        assert_eq!(a, b);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn idset_iterates_in_order() {
        let s: IdSet = [130, 5, 64, 0].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 5, 64, 130]);
        assert_eq!(s.len(), 4);
        assert!(s.contains(64) && !s.contains(63));
    }

    #[test]
    fn ctrl_state_bits() {
        let mut c = CtrlState::zeros(70);
        c.set_bits(60, 8, 0xA5);
        assert_eq!(c.bits(60, 8), 0xA5);
        assert!(c.bit(60) && !c.bit(61));
        c.set_bit(60, false);
        assert_eq!(c.bits(60, 8), 0xA4);
    }
}
