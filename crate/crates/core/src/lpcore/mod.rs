//! Linear programs: model building, a built-in simplex solver, optimality
//! checks and export to external solvers.

mod kkt;
mod lu;
mod model;
mod mps;
mod simplex;

pub use kkt::{check_kkt, KktReport, Violation};
pub use model::{ConId, Constraint, LinearModel, ModelError, Relation, VarId, Variable};
pub use mps::{export_mps, review_text, MpsExport};
pub use simplex::{solve, Solution, SolveOptions, SolveStatus};
