//! Canonical bit-packed encoding of [`SystemState`].
//!
//! Sets are written in sorted order with delta-coded ids, so two equal
//! states always produce identical word vectors.

use std::borrow::Borrow;

use thiserror::Error;

use crate::model::state::{
    ControllerEnv, CqEntry, CtrlState, FlowMod, FlowOp, HostState, IdSet, PacketId, RuleId,
    SwitchState, SystemState, VecSet, Xid,
};
use crate::topology::{PortSet, SwitchId};

/// Packed words of one state. Equality is full-state equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PackedState(pub Box<[u64]>);

impl Borrow<[u64]> for PackedState {
    fn borrow(&self) -> &[u64] {
        &self.0
    }
}

impl PackedState {
    pub fn words(&self) -> &[u64] {
        &self.0
    }

    pub fn byte_len(&self) -> usize {
        self.0.len() * 8
    }
}

/// Shape information needed to decode a packed state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackLayout {
    pub hosts: usize,
    pub switches: usize,
    pub cs_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PackError {
    #[error("packed state truncated")]
    Truncated,
    #[error("trailing data after packed state")]
    Trailing,
    #[error("dump too short")]
    ShortDump,
    #[error("dump length field does not match payload")]
    BadLength,
}

const GROUP: u32 = 4;

struct BitWriter {
    words: Vec<u64>,
    bit: u32,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter { words: Vec::with_capacity(16), bit: 64 }
    }

    fn put(&mut self, mut value: u64, mut n: u32) {
        if n < 64 - self.bit {
            *self.words.last_mut().unwrap() |= (value & ((1u64 << n) - 1)) << self.bit;
            self.bit += n;
            return;
        }
        while n > 0 {
            if self.bit == 64 {
                self.words.push(0);
                self.bit = 0;
            }
            let take = n.min(64 - self.bit);
            let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            *self.words.last_mut().unwrap() |= (value & mask) << self.bit;
            self.bit += take;
            n -= take;
            value = if take == 64 { 0 } else { value >> take };
        }
    }

    fn varint(&mut self, mut v: u64) {
        if v < 1 << GROUP {
            self.put(v, GROUP + 1);
            return;
        }
        loop {
            let chunk = v & ((1 << GROUP) - 1);
            v >>= GROUP;
            let more = (v != 0) as u64;
            self.put(chunk | (more << GROUP), GROUP + 1);
            if more == 0 {
                break;
            }
        }
    }

    fn set(&mut self, s: &IdSet) {
        self.varint(s.len() as u64);
        let mut prev: Option<u32> = None;
        for id in s.iter() {
            let d = match prev {
                None => id,
                Some(p) => id - p - 1,
            };
            self.varint(d as u64);
            prev = Some(id);
        }
    }

    fn finish(self) -> PackedState {
        PackedState(self.words.into_boxed_slice())
    }
}

struct BitReader<'a> {
    words: &'a [u64],
    word: usize,
    bit: u32,
}

impl<'a> BitReader<'a> {
    fn new(words: &'a [u64]) -> Self {
        BitReader { words, word: 0, bit: 0 }
    }

    fn get(&mut self, mut n: u32) -> Result<u64, PackError> {
        let mut out = 0u64;
        let mut shift = 0;
        while n > 0 {
            if self.bit == 64 {
                self.word += 1;
                self.bit = 0;
            }
            let w = *self.words.get(self.word).ok_or(PackError::Truncated)?;
            let take = n.min(64 - self.bit);
            let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            out |= ((w >> self.bit) & mask) << shift;
            shift += take;
            self.bit += take;
            n -= take;
        }
        Ok(out)
    }

    fn varint(&mut self) -> Result<u64, PackError> {
        let mut v = 0u64;
        let mut shift = 0;
        loop {
            let g = self.get(GROUP + 1)?;
            v |= (g & ((1 << GROUP) - 1)) << shift;
            shift += GROUP;
            if g >> GROUP == 0 {
                return Ok(v);
            }
            if shift >= 64 {
                return Err(PackError::Truncated);
            }
        }
    }

    fn id(&mut self) -> Result<u32, PackError> {
        u32::try_from(self.varint()?).map_err(|_| PackError::Truncated)
    }

    fn set(&mut self) -> Result<IdSet, PackError> {
        let n = self.varint()?;
        let mut s = IdSet::new();
        let mut prev: Option<u32> = None;
        for _ in 0..n {
            let d = self.id()?;
            let id = match prev {
                None => d,
                Some(p) => p.checked_add(d).and_then(|x| x.checked_add(1)).ok_or(PackError::Truncated)?,
            };
            s.insert(id);
            prev = Some(id);
        }
        Ok(s)
    }

    fn done(&self) -> Result<(), PackError> {
        let rest_zero = self.words.get(self.word).map_or(true, |w| self.bit == 64 || w >> self.bit == 0);
        if self.word + 1 < self.words.len() || !rest_zero {
            return Err(PackError::Trailing);
        }
        Ok(())
    }
}

pub fn pack(s: &SystemState, layout: &PackLayout) -> PackedState {
    let mut w = BitWriter::new();
    write(s, layout, &mut w);
    w.finish()
}

/// Packs into `buf`, replacing its contents.
pub fn pack_into(s: &SystemState, layout: &PackLayout, buf: &mut Vec<u64>) {
    buf.clear();
    let mut w = BitWriter { words: std::mem::take(buf), bit: 64 };
    write(s, layout, &mut w);
    *buf = w.words;
}

fn write(s: &SystemState, layout: &PackLayout, w: &mut BitWriter) {
    debug_assert_eq!(s.hosts.len(), layout.hosts);
    debug_assert_eq!(s.switches.len(), layout.switches);
    let mut left = layout.cs_bits;
    for &word in s.ctrl.cs.words() {
        let n = left.min(64);
        w.put(word, n as u32);
        left -= n;
    }
    for h in &s.hosts {
        w.set(&h.rcvq);
    }
    for sw in &s.switches {
        w.set(&sw.ft);
        w.set(&sw.pq);
        w.varint(sw.fq.len() as u64);
        let mut prev = 0;
        for &(p, ports) in &sw.fq {
            w.varint((p.0 - prev) as u64);
            w.varint(ports.0);
            prev = p.0;
        }
        w.varint(sw.cq.len() as u64);
        for e in &sw.cq {
            match e {
                CqEntry::FlowMods(set) => {
                    w.put(0, 1);
                    w.varint(set.len() as u64 - 1);
                    let mut prev = 0;
                    for fm in set {
                        w.varint((fm.rule.0 - prev) as u64);
                        w.put((fm.op == FlowOp::Del) as u64, 1);
                        prev = fm.rule.0;
                    }
                }
                CqEntry::Barrier(x) => {
                    w.put(1, 1);
                    w.varint(x.0 as u64);
                }
            }
        }
    }
    w.varint(s.ctrl.rq.len() as u64);
    for &(sw, p) in &s.ctrl.rq {
        w.varint(sw.0 as u64);
        w.varint(p.0 as u64);
    }
    w.varint(s.ctrl.brq.len() as u64);
    for &(sw, x) in &s.ctrl.brq {
        w.varint(sw.0 as u64);
        w.varint(x.0 as u64);
    }
}

pub fn unpack(p: &PackedState, layout: &PackLayout) -> Result<SystemState, PackError> {
    let mut r = BitReader::new(&p.0);
    let mut cs_words = Vec::with_capacity(layout.cs_bits.div_ceil(64));
    let mut left = layout.cs_bits;
    while left > 0 {
        let n = left.min(64);
        cs_words.push(r.get(n as u32)?);
        left -= n;
    }
    let mut hosts = Vec::with_capacity(layout.hosts);
    for _ in 0..layout.hosts {
        hosts.push(HostState { rcvq: r.set()? });
    }
    let mut switches = Vec::with_capacity(layout.switches);
    for _ in 0..layout.switches {
        let ft = r.set()?;
        let pq = r.set()?;
        let mut fq = VecSet::new();
        let n = r.varint()?;
        let mut prev = 0u32;
        for _ in 0..n {
            let id = prev + r.id()?;
            fq.insert((PacketId(id), PortSet(r.varint()?)));
            prev = id;
        }
        let n = r.varint()?;
        let mut cq = Vec::with_capacity(n as usize);
        for _ in 0..n {
            if r.get(1)? == 0 {
                let m = r.varint()? + 1;
                let mut set = VecSet::new();
                let mut prev = 0u32;
                for _ in 0..m {
                    let id = prev + r.id()?;
                    let op = if r.get(1)? == 1 { FlowOp::Del } else { FlowOp::Add };
                    set.insert(FlowMod { rule: RuleId(id), op });
                    prev = id;
                }
                cq.push(CqEntry::FlowMods(set));
            } else {
                cq.push(CqEntry::Barrier(Xid(r.id()?)));
            }
        }
        switches.push(SwitchState { ft, pq, fq, cq });
    }
    let mut rq = VecSet::new();
    for _ in 0..r.varint()? {
        let sw = SwitchId(r.id()? as u16);
        rq.insert((sw, PacketId(r.id()?)));
    }
    let mut brq = VecSet::new();
    for _ in 0..r.varint()? {
        let sw = SwitchId(r.id()? as u16);
        brq.insert((sw, Xid(r.id()?)));
    }
    r.done()?;
    Ok(SystemState {
        hosts,
        switches,
        ctrl: ControllerEnv { cs: CtrlState::from_words(cs_words), rq, brq },
    })
}

/// Deterministic 64-bit fingerprint of a packed state.
pub fn fingerprint(p: &PackedState) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64 ^ (p.0.len() as u64);
    for &w in p.0.iter() {
        h = (h ^ w).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(31);
    }
    splitmix(h)
}

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over 64-bit words.
pub struct Fnv(u64);

impl Fnv {
    pub fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    pub fn word(&mut self, w: u64) {
        for b in w.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv {
    fn default() -> Self {
        Self::new()
    }
}

/// Diagnostic dump: schema hash, word count, then the words, all little-endian.
pub fn dump(p: &PackedState, schema_hash: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + p.byte_len());
    out.extend_from_slice(&schema_hash.to_le_bytes());
    out.extend_from_slice(&(p.0.len() as u64).to_le_bytes());
    for w in p.0.iter() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn undump(bytes: &[u8]) -> Result<(u64, PackedState), PackError> {
    if bytes.len() < 16 {
        return Err(PackError::ShortDump);
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let hash = word(0);
    let len = word(8) as usize;
    if bytes.len() != 16 + len * 8 {
        return Err(PackError::BadLength);
    }
    let words = (0..len).map(|i| word(16 + 8 * i)).collect::<Vec<_>>();
    Ok((hash, PackedState(words.into_boxed_slice())))
}
