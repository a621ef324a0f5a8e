use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{HostId, Location, PortId, PortSet, SwitchId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("unknown packet field `{0}`")]
    UnknownField(String),
    #[error("value {value} does not fit in field `{field}` ({bits} bits)")]
    ValueTooWide { field: String, value: u32, bits: u8 },
    #[error("header needs {0} bits, at most 32 are supported")]
    TooWide(u32),
    #[error("duplicate packet field `{0}`")]
    Duplicate(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    /// Plain integer value.
    Int,
    /// Host index, printed by name.
    Host,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub bits: u8,
    pub kind: FieldKind,
}

impl FieldSpec {
    pub fn int(name: &str, bits: u8) -> Self {
        FieldSpec { name: name.to_string(), bits, kind: FieldKind::Int }
    }

    pub fn host(name: &str, bits: u8) -> Self {
        FieldSpec { name: name.to_string(), bits, kind: FieldKind::Host }
    }
}

/// Header layout plus the optional per-switch history bitfield.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PacketSchema {
    fields: Vec<FieldSpec>,
    offsets: Vec<u8>,
    history: bool,
}

/// Bits needed to store values `0..n`.
pub fn bits_for(n: usize) -> u8 {
    let mut b = 0;
    while (1usize << b) < n {
        b += 1;
    }
    b.max(1)
}

impl PacketSchema {
    pub fn new(fields: Vec<FieldSpec>, history: bool) -> Result<Self, SchemaError> {
        let mut offsets = Vec::with_capacity(fields.len());
        let mut off = 0u32;
        for (i, f) in fields.iter().enumerate() {
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(SchemaError::Duplicate(f.name.clone()));
            }
            offsets.push(off as u8);
            off += f.bits as u32;
        }
        if off > 32 {
            return Err(SchemaError::TooWide(off));
        }
        Ok(PacketSchema { fields, offsets, history })
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    pub fn has_history(&self) -> bool {
        self.history
    }

    pub fn header_bits(&self) -> u32 {
        self.fields.iter().map(|f| f.bits as u32).sum()
    }

    pub fn field(&self, name: &str) -> Result<usize, SchemaError> {
        self.fields
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| SchemaError::UnknownField(name.to_string()))
    }

    pub fn mask(&self, f: usize) -> u32 {
        let bits = self.fields[f].bits as u32;
        (((1u64 << bits) - 1) as u32) << self.offsets[f]
    }

    pub fn get(&self, header: u32, f: usize) -> u32 {
        (header & self.mask(f)) >> self.offsets[f]
    }

    pub fn set(&self, header: u32, f: usize, value: u32) -> Result<u32, SchemaError> {
        let spec = &self.fields[f];
        if (value as u64) >> spec.bits != 0 {
            return Err(SchemaError::ValueTooWide { field: spec.name.clone(), value, bits: spec.bits });
        }
        Ok((header & !self.mask(f)) | (value << self.offsets[f]))
    }

    /// Builds a header from named values; unnamed fields are zero.
    pub fn header(&self, values: &[(&str, u32)]) -> Result<u32, SchemaError> {
        let mut h = 0;
        for (name, v) in values {
            h = self.set(h, self.field(name)?, *v)?;
        }
        Ok(h)
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = crate::model::pack::Fnv::new();
        h.word(self.history as u64);
        for f in &self.fields {
            for b in f.name.bytes() {
                h.word(b as u64);
            }
            h.word(((f.bits as u64) << 8) | f.kind as u64);
        }
        h.finish()
    }

    pub fn describe_header(&self, header: u32, topo: &Topology) -> String {
        let mut s = String::new();
        for (i, f) in self.fields.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let v = self.get(header, i);
            match f.kind {
                FieldKind::Host if (v as usize) < topo.host_count() => {
                    let _ = write!(s, "{}={}", f.name, topo.host_name(HostId(v as u16)));
                }
                _ => {
                    let _ = write!(s, "{}={}", f.name, v);
                }
            }
        }
        s
    }

    pub fn describe(&self, p: &Packet, topo: &Topology) -> String {
        let mut s = format!("{{{}}}@{}", self.describe_header(p.header, topo), topo.loc_name(p.loc));
        if self.history && p.reached != 0 {
            s.push_str(" reached=");
            let names: Vec<&str> = topo
                .switches()
                .filter(|sw| p.reached & (1 << sw.0) != 0)
                .map(|sw| topo.switch_name(sw))
                .collect();
            s.push_str(&names.join("+"));
        }
        s
    }
}

/// A packet: header bits, current location and switch history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Packet {
    pub header: u32,
    pub loc: Location,
    pub reached: u32,
}

impl Packet {
    pub fn new(header: u32, loc: Location) -> Self {
        Packet { header, loc, reached: 0 }
    }

    pub fn has_reached(&self, sw: SwitchId) -> bool {
        self.reached & (1 << sw.0) != 0
    }

    pub fn in_port(&self) -> PortId {
        self.loc.port
    }
}

/// Header match: `header & mask == value`, plus an optional ingress port.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pattern {
    pub mask: u32,
    pub value: u32,
    pub in_port: Option<PortId>,
}

impl Pattern {
    pub fn any() -> Self {
        Pattern::default()
    }

    pub fn field(mut self, schema: &PacketSchema, name: &str, v: u32) -> Result<Self, SchemaError> {
        let f = schema.field(name)?;
        self.value = schema.set(self.value, f, v)?;
        self.mask |= schema.mask(f);
        Ok(self)
    }

    pub fn in_port(mut self, p: PortId) -> Self {
        self.in_port = Some(p);
        self
    }

    pub fn matches(&self, p: &Packet) -> bool {
        p.header & self.mask == self.value && self.in_port.map_or(true, |ip| ip == p.loc.port)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rule {
    pub priority: u16,
    pub pattern: Pattern,
    pub ports: PortSet,
}

impl Rule {
    pub fn new(priority: u16, pattern: Pattern, ports: PortSet) -> Self {
        Rule { priority, pattern, ports }
    }

    pub fn drops(&self) -> bool {
        self.ports.has_drop()
    }

    pub fn describe(&self, schema: &PacketSchema, topo: &Topology) -> String {
        let mut s = format!("prio={} match={{", self.priority);
        let mut first = true;
        for (i, f) in schema.fields().iter().enumerate() {
            if self.pattern.mask & schema.mask(i) == 0 {
                continue;
            }
            if !first {
                s.push(',');
            }
            first = false;
            let v = schema.get(self.pattern.value, i);
            match f.kind {
                FieldKind::Host if (v as usize) < topo.host_count() => {
                    let _ = write!(s, "{}={}", f.name, topo.host_name(HostId(v as u16)));
                }
                _ => {
                    let _ = write!(s, "{}={}", f.name, v);
                }
            }
        }
        if let Some(p) = self.pattern.in_port {
            if !first {
                s.push(',');
            }
            let _ = write!(s, "in_port={p}");
        }
        let _ = write!(s, "}} fwd={}", self.ports);
        s
    }
}
