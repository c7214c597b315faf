//! Evaluation of logic programs in three tiers: stratified Datalog with
//! function symbols and aggregates by semi-naive fixed point, unstratified
//! programs under the well-founded semantics, and stable models by search.

pub mod analysis;
pub mod error;
pub mod fixpoint;
pub mod joineval;
pub mod stable;
pub mod store;
pub mod syntax;
pub mod wfs;
pub mod workloads;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use analysis::{build_graph, classify, Classification, Tier};
pub use error::{Error, ErrorKind, Pos, Result};
pub use fixpoint::{answer_query, EvalConfig, EvalStats, Mode};
pub use stable::{solve, SolveConfig, SolveStats, StableModel};
pub use syntax::{load, parse, parse_literals, Atom, Literal, Program, Rule, Term};
pub use wfs::{ground, well_founded, GroundProgram, TruthValue, WfModel};
