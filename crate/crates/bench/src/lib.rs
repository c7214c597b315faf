//! Inputs shared by the engine benchmarks.

use trilogic_core::analysis::{build_graph, classify, Stratification};
use trilogic_core::syntax::{load, Program};
use trilogic_core::wfs::{ground, GroundProgram};
use trilogic_core::EvalConfig;

/// The 200-statement points-to instance from the CLI corpus.
pub const ANDERSEN: &str = include_str!("../../cli/corpus/andersen/program.lp");

/// Loads a stratifiable program and its stratification.
pub fn stratified(source: &str) -> (Program, Stratification) {
    let program = load(source).expect("benchmark program loads");
    let strat = classify(&build_graph(&program))
        .require_stratified()
        .expect("benchmark program is stratifiable")
        .clone();
    (program, strat)
}

pub fn grounded(source: &str) -> GroundProgram {
    ground(&load(source).expect("benchmark program loads"), &EvalConfig::default()).expect("benchmark program grounds")
}

/// Win/move over a path of `len` positions.
pub fn win_path(len: usize) -> String {
    let mut s = String::from("win(X) :- move(X,Y), not win(Y).\n");
    for i in 1..len {
        s.push_str(&format!("move(p{}, p{i}).\n", i - 1));
    }
    s
}
