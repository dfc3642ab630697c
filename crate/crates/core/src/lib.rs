//! Capacity-expansion planning with flexible data-center load.
//!
//! The crate builds the deterministic equivalent of a two-stage expansion
//! problem over a DC power-flow network in which part of the data-center
//! demand can be deferred in time (backlog with completion windows) or shifted
//! between buses in the same hour, and solves it with a built-in simplex.
//!
//! Modules, bottom-up:
//! - [`lpcore`]: LP model, solver, KKT checks, MPS export.
//! - [`netcase`]: network data, case documents, incidence and flow operators.
//! - [`flexload`]: base profiles, deferrable classes, geographic shift specs.
//! - [`expansion`]: LP assembly, solves, cost decomposition, congestion.
//! - [`harness`]: flexibility / penetration sweeps and minimum-flexibility search.

pub mod expansion;
pub mod flexload;
pub mod harness;
pub mod lpcore;
pub mod netcase;
pub mod sparse;
