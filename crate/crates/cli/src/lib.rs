//! Batch driver for trilogic: runs a program file under a chosen semantics
//! and renders answers, models and statistics deterministically.

pub mod corpus;
pub mod oracle;
pub mod render;
pub mod run;

pub use corpus::{run_corpus, CorpusReport, Fixture};
pub use render::{Format, Outcome};
pub use run::{run, run_source, Models, RunConfig, RunOutput, Semantics};
