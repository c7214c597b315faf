use std::fmt;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use trilogic_core::analysis::{build_graph, classify, ANSWER_PRED};
use trilogic_core::fixpoint::{self, evaluate, EvalConfig, EvalStats, Mode};
use trilogic_core::stable::{solve, SolveConfig, SolveStats};
use trilogic_core::syntax::{load, parse_literals, Atom, Literal, Program, Term};
use trilogic_core::wfs::{ground, well_founded, with_answer_rule, GroundProgram};
use trilogic_core::{Error, ErrorKind};

use crate::render::{self, Format, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Semantics {
    #[default]
    Stratified,
    Wfs,
    Stable,
}

impl FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stratified" => Ok(Semantics::Stratified),
            "wfs" => Ok(Semantics::Wfs),
            "stable" => Ok(Semantics::Stable),
            other => Err(format!("unknown semantics `{other}` (expected stratified, wfs or stable)")),
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Stratified => "stratified",
            Semantics::Wfs => "wfs",
            Semantics::Stable => "stable",
        })
    }
}

/// How many stable models to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Models {
    Count(NonZeroUsize),
    All,
}

impl Default for Models {
    fn default() -> Self {
        Models::Count(NonZeroUsize::MIN)
    }
}

impl Models {
    pub fn limit(self) -> Option<usize> {
        match self {
            Models::Count(n) => Some(n.get()),
            Models::All => None,
        }
    }
}

impl FromStr for Models {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(Models::All);
        }
        s.parse::<NonZeroUsize>()
            .map(Models::Count)
            .map_err(|_| format!("invalid model count `{s}` (expected a positive integer or `all`)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub semantics: Semantics,
    pub query: Option<String>,
    pub models: Models,
    pub naive: bool,
    pub demand: bool,
    pub max_term_depth: u32,
    pub format: Format,
    pub stats: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            semantics: Semantics::default(),
            query: None,
            models: Models::default(),
            naive: false,
            demand: true,
            max_term_depth: 16,
            format: Format::Text,
            stats: None,
        }
    }

    fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            mode: if self.naive { Mode::Naive } else { Mode::SemiNaive },
            max_term_depth: self.max_term_depth,
            demand: self.demand,
            ..EvalConfig::default()
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Counters from whichever engine ran; rendered as one flat JSON object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStats {
    Fixpoint(EvalStats),
    WellFounded { ground_atoms: usize, ground_rules: usize },
    Stable { ground_atoms: usize, ground_rules: usize, solve: SolveStats },
}

fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Syntax => EXIT_PARSE,
        ErrorKind::Rejected => EXIT_REJECTED,
        ErrorKind::ResourceBound => EXIT_RESOURCE,
    }
}

fn failure(code: i32, message: impl fmt::Display) -> RunOutput {
    RunOutput {
        code,
        stdout: String::new(),
        stderr: format!("error: {message}\n"),
    }
}

/// Loads, checks and evaluates a program, returning the exit status and the
/// rendered result.
pub fn run(cfg: &RunConfig) -> RunOutput {
    let source = match std::fs::read_to_string(&cfg.input) {
        Ok(s) => s,
        Err(e) => return failure(EXIT_USAGE, format_args!("cannot read {}: {e}", cfg.input.display())),
    };
    run_source(&source, cfg)
}

/// [`run`] on program text already in memory; `cfg.input` is only used by
/// [`run`] to read the file.
pub fn run_source(source: &str, cfg: &RunConfig) -> RunOutput {
    if cfg.models != Models::default() && cfg.semantics != Semantics::Stable {
        return failure(EXIT_USAGE, "--models applies only to --semantics stable");
    }
    let started = Instant::now();
    let result = evaluate_source(source, cfg);
    let elapsed = started.elapsed();
    let (outcome, stats) = match result {
        Ok(r) => r,
        Err(e) => return failure(exit_code(&e), e),
    };
    let mut out = RunOutput {
        code: EXIT_OK,
        stdout: render::render(&outcome, cfg.format),
        stderr: String::new(),
    };
    if let Some(path) = &cfg.stats {
        let text = render::stats_json(&stats, elapsed);
        if let Err(e) = std::fs::write(path, text) {
            out.code = EXIT_USAGE;
            out.stderr = format!("error: cannot write {}: {e}\n", path.display());
        }
    }
    out
}

fn evaluate_source(source: &str, cfg: &RunConfig) -> trilogic_core::Result<(Outcome, RunStats)> {
    let mut program = load(source)?;
    let query: Option<Vec<Literal>> = match &cfg.query {
        Some(q) => Some(parse_literals(q)?),
        None => program.queries.first().map(|q| q.body.clone()),
    };
    program.queries.clear();
    let ecfg = cfg.eval_config();
    match cfg.semantics {
        Semantics::Stratified => {
            // Constraint-tier programs are rejected even when the query
            // would not reach the unstratified part.
            let class = classify(&build_graph(&program));
            let strat = class.require_stratified()?;
            match query {
                Some(q) => {
                    let answers = fixpoint::answer_query(&program, &q, &ecfg)?;
                    let rows = instances(&q, &answers.vars, &answers.rows);
                    Ok((Outcome::Answers { query: q, rows }, RunStats::Fixpoint(answers.stats)))
                }
                None => {
                    let (store, stats) = evaluate(&program, strat, &ecfg)?;
                    let atoms = store.atoms().iter().map(Atom::to_string).collect();
                    Ok((Outcome::Model { atoms }, RunStats::Fixpoint(stats)))
                }
            }
        }
        Semantics::Wfs => {
            let (program, answer) = with_query(&program, query.as_deref())?;
            let g = ground(&program, &ecfg)?;
            let m = well_founded(&g);
            let stats = RunStats::WellFounded {
                ground_atoms: g.atom_count(),
                ground_rules: g.rules().len(),
            };
            let pick = |set: &std::collections::BTreeSet<usize>| shown(&g, set.iter().copied(), query.as_deref(), &answer);
            let outcome = Outcome::ThreeValued {
                query: query.clone(),
                true_rows: pick(&m.true_set),
                undefined_rows: pick(&m.undefined_set),
            };
            Ok((outcome, stats))
        }
        Semantics::Stable => {
            let (program, answer) = with_query(&program, query.as_deref())?;
            let g = ground(&program, &ecfg)?;
            let sol = solve(&g, cfg.models.limit(), SolveConfig::default());
            let models = sol
                .models
                .iter()
                .map(|m| shown(&g, m.0.iter().copied(), query.as_deref(), &answer))
                .collect();
            let stats = RunStats::Stable {
                ground_atoms: g.atom_count(),
                ground_rules: g.rules().len(),
                solve: sol.stats,
            };
            Ok((Outcome::Models { query, models }, stats))
        }
    }
}

fn with_query(program: &Program, query: Option<&[Literal]>) -> trilogic_core::Result<(Program, Option<Atom>)> {
    match query {
        Some(q) => with_answer_rule(program, q).map(|(p, a)| (p, Some(a))),
        None => Ok((program.clone(), None)),
    }
}

/// The atoms of `ids` to show: all of them without a query, or the query's
/// instances read off the answer atoms.
fn shown(g: &GroundProgram, ids: impl Iterator<Item = usize>, query: Option<&[Literal]>, answer: &Option<Atom>) -> Vec<String> {
    let ids = g.sorted(ids);
    match (query, answer) {
        (Some(q), Some(head)) => {
            let vars: Vec<String> = head.args.iter().map(Term::to_string).collect();
            let rows: Vec<Vec<Term>> = ids
                .into_iter()
                .map(|a| &g.atoms()[a])
                .filter(|a| a.pred == ANSWER_PRED)
                .map(|a| a.args.clone())
                .collect();
            instances(q, &vars, &rows)
        }
        _ => ids.into_iter().map(|a| g.atoms()[a].to_string()).collect(),
    }
}

/// Renders each answer row as the query with its variables replaced.
pub fn instances(query: &[Literal], vars: &[String], rows: &[Vec<Term>]) -> Vec<String> {
    rows.iter()
        .map(|row| {
            query
                .iter()
                .map(|l| substitute_literal(l, vars, row).to_string())
                .collect::<Vec<_>>()
                .join(", ")
        })
        .collect()
}

fn substitute(t: &Term, vars: &[String], row: &[Term]) -> Term {
    match t {
        Term::Var(v) => vars.iter().position(|x| x == v).map_or_else(|| t.clone(), |i| row[i].clone()),
        Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| substitute(a, vars, row)).collect()),
        other => other.clone(),
    }
}

fn substitute_atom(a: &Atom, vars: &[String], row: &[Term]) -> Atom {
    Atom::new(a.pred.clone(), a.args.iter().map(|t| substitute(t, vars, row)).collect())
}

fn substitute_literal(l: &Literal, vars: &[String], row: &[Term]) -> Literal {
    match l {
        Literal::Pos(a) => Literal::Pos(substitute_atom(a, vars, row)),
        Literal::Neg(a) => Literal::Neg(substitute_atom(a, vars, row)),
        Literal::Cmp(x, op, y) => Literal::Cmp(substitute(x, vars, row), *op, substitute(y, vars, row)),
        // The local variable is not an answer variable, so it stays put; the
        // result is shown by value.
        Literal::Agg(agg) => {
            let mut agg = agg.clone();
            for lit in &mut agg.body {
                *lit = substitute_literal(lit, vars, row);
            }
            if let Some(i) = vars.iter().position(|v| *v == agg.result) {
                agg.result = row[i].to_string();
            }
            Literal::Agg(agg)
        }
    }
}
