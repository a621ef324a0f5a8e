//! Explicit-state model checking for software-defined networks.

pub mod model;
pub mod program;
pub mod property;
pub mod semantics;
pub mod topology;
pub mod por;
pub mod explore;
pub mod scenario;
pub mod bench;
