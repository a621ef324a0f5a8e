//! Packets, rules and the global system state.

pub mod intern;
pub mod pack;
pub mod packet;
pub mod state;

pub use intern::{Interner, TableFull};
pub use pack::{PackLayout, PackedState};
pub use packet::{bits_for, FieldKind, FieldSpec, Packet, PacketSchema, Pattern, Rule, SchemaError};
pub use state::{
    ControllerEnv, CqEntry, CtrlState, FlowMod, FlowOp, HostState, IdSet, PacketId, RuleId,
    SwitchState, SystemState, VecSet, Xid,
};
