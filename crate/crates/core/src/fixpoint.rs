//! Bottom-up evaluation of stratified programs to their least fixed point.
//!
//! Strata are evaluated in order. Within a stratum every round evaluates all
//! rules, buffers the head tuples, and inserts them at the end of the round.
//! Semi-naive rounds after the first evaluate one variant per positive atom
//! over a predicate of the same stratum: that atom reads the last round's
//! delta, atoms before it read only older rows, and atoms after it read
//! everything, so each ground instance is produced in exactly one round.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::analysis::{
    build_graph, check_known, classify, magic_transform, Stratification, ANSWER_PRED,
};
use crate::error::{Error, Result};
use crate::joineval::{stored, CompiledRule, JoinStats};
use crate::store::{PredId, RowSel, Store, TermId, DEFAULT_MAX_TERM_DEPTH};
use crate::syntax::{Literal, PredKey, Program, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Naive,
    #[default]
    SemiNaive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalConfig {
    pub mode: Mode,
    pub max_term_depth: u32,
    /// Rounds allowed per stratum; `None` for no limit.
    pub max_iterations: Option<usize>,
    pub demand: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: Mode::SemiNaive,
            max_term_depth: DEFAULT_MAX_TERM_DEPTH,
            max_iterations: None,
            demand: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Complete rule body matches.
    pub rule_firings: u64,
    /// Candidate tuples examined while joining.
    pub join_probes: u64,
    /// Distinct tuples added by rules (not loaded as facts). Under demand,
    /// copies of one predicate count once and demand tuples are excluded.
    pub tuples_derived: u64,
    /// Head tuples that were already present.
    pub duplicates_suppressed: u64,
    pub iterations_per_stratum: Vec<usize>,
    /// Queries answered by plain pruning because demand rewriting did not
    /// apply.
    pub demand_fallbacks: u64,
    /// Tuples in demand (magic) relations.
    pub demand_tuples: u64,
}

/// A materialized store plus, per relation, how many leading rows were
/// loaded from facts rather than derived.
struct Evaluation {
    store: Store,
    stats: EvalStats,
    loaded: Vec<usize>,
}

/// Computes the stratified model of `program`.
pub fn evaluate(program: &Program, strat: &Stratification, cfg: &EvalConfig) -> Result<(Store, EvalStats)> {
    let ev = run(program, strat, cfg)?;
    Ok((ev.store, ev.stats))
}

fn run(program: &Program, strat: &Stratification, cfg: &EvalConfig) -> Result<Evaluation> {
    let mut store = Store::new(cfg.max_term_depth);
    for stratum in &strat.strata {
        for key in stratum {
            store.pred(key);
        }
    }
    for fact in &program.facts {
        store.insert_atom(fact)?;
    }
    let loaded: Vec<usize> = store.relations().iter().map(|r| r.len()).collect();

    let mut by_stratum: Vec<Vec<CompiledRule>> = vec![Vec::new(); strat.strata.len()];
    for rule in &program.rules {
        let level = strat.level[&rule.head.key()];
        by_stratum[level].push(CompiledRule::compile(rule, &mut store)?);
    }

    let mut stats = EvalStats::default();
    for (level, rules) in by_stratum.iter().enumerate() {
        let preds: BTreeSet<PredId> = strat.strata[level].iter().filter_map(|k| store.pred_id(k)).collect();
        let rounds = eval_stratum(&mut store, rules, &preds, level, cfg, &mut stats)?;
        stats.iterations_per_stratum.push(rounds);
    }
    let loaded = (0..store.relations().len())
        .map(|i| loaded.get(i).copied().unwrap_or(0))
        .collect();
    Ok(Evaluation { store, stats, loaded })
}

fn eval_stratum(
    store: &mut Store,
    rules: &[CompiledRule],
    preds: &BTreeSet<PredId>,
    level: usize,
    cfg: &EvalConfig,
    stats: &mut EvalStats,
) -> Result<usize> {
    for &p in preds {
        let rel = store.relation_mut(p);
        rel.advance_iteration();
        rel.advance_iteration();
    }
    if rules.is_empty() {
        return Ok(0);
    }
    let mut rounds = 0;
    loop {
        if let Some(max) = cfg.max_iterations {
            if rounds >= max {
                return Err(Error::IterationLimit { stratum: level, max });
            }
        }
        let first = rounds == 0;
        rounds += 1;
        let mut buffer: Vec<(PredId, Box<[TermId]>)> = Vec::new();
        let mut join = JoinStats::default();
        for rule in rules {
            let mut out = Vec::new();
            if first || cfg.mode == Mode::Naive {
                let sel = vec![RowSel::All; rule.body_len()];
                eval_variant(store, rule, &sel, &mut join, &mut out)?;
            } else {
                let recursive: Vec<usize> = (0..rule.body_len())
                    .filter(|&i| rule.atom_pred(i).is_some_and(|p| preds.contains(&p)))
                    .collect();
                for &d in &recursive {
                    if store.relation(rule.atom_pred(d).unwrap()).delta_len() == 0 {
                        continue;
                    }
                    let sel: Vec<RowSel> = (0..rule.body_len())
                        .map(|i| match i {
                            _ if i == d => RowSel::Delta,
                            _ if i < d && recursive.contains(&i) => RowSel::Stable,
                            _ => RowSel::All,
                        })
                        .collect();
                    eval_variant(store, rule, &sel, &mut join, &mut out)?;
                }
            }
            let head = rule.head_pred();
            buffer.extend(out.into_iter().map(|t| (head, t)));
        }
        stats.rule_firings += join.firings;
        stats.join_probes += join.probes;
        let mut added = 0u64;
        for (pred, tuple) in buffer {
            if store.relation_mut(pred).insert(&tuple) {
                added += 1;
            } else {
                stats.duplicates_suppressed += 1;
            }
        }
        stats.tuples_derived += added;
        for &p in preds {
            store.relation_mut(p).advance_iteration();
        }
        if added == 0 {
            return Ok(rounds);
        }
    }
}

fn eval_variant(
    store: &mut Store,
    rule: &CompiledRule,
    sel: &[RowSel],
    join: &mut JoinStats,
    out: &mut Vec<Box<[TermId]>>,
) -> Result<()> {
    let sizes: Vec<usize> = (0..rule.body_len())
        .map(|i| match rule.atom_pred(i) {
            Some(p) => store.relation(p).rows(sel[i]).len(),
            None => 0,
        })
        .collect();
    let plan = rule.plan(&sizes);
    rule.eval(store, &plan, sel, &stored, join, out)
}

/// Ground answers to a query, sorted by the term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answers {
    /// Answer variables in order of first appearance.
    pub vars: Vec<String>,
    /// One row per answer. A query without variables has a single empty
    /// row when it holds and none otherwise.
    pub rows: Vec<Vec<Term>>,
    pub stats: EvalStats,
}

impl Answers {
    pub fn holds(&self) -> bool {
        !self.rows.is_empty()
    }
}

/// Answers a conjunctive query against a stratifiable program.
///
/// With demand on, the program is first specialized to the query (see
/// [`magic_transform`]); otherwise it is evaluated in full.
pub fn answer_query(program: &Program, query: &[Literal], cfg: &EvalConfig) -> Result<Answers> {
    let (program, query) = crate::syntax::desugar_query(program, query)?;
    let program = &program;
    check_known(program, &query)?;
    let answer_rule = crate::analysis::answer_rule(&query);
    crate::syntax::check_rule(&answer_rule)?;
    let vars: Vec<String> = answer_rule
        .head
        .args
        .iter()
        .map(|t| t.to_string())
        .collect();

    let (target, origin, magic, fallback) = if cfg.demand {
        let d = magic_transform(program, &query)?;
        (d.program, d.origin, d.magic, d.fallback)
    } else {
        let mut full = program.clone();
        full.queries.clear();
        full.rules.push(answer_rule.clone());
        (full, BTreeMap::new(), BTreeSet::new(), false)
    };
    let class = classify(&build_graph(&target));
    let strat = class.require_stratified()?;
    let ev = run(&target, strat, cfg)?;
    let mut stats = ev.stats;
    stats.demand_fallbacks = u64::from(fallback);

    if cfg.demand {
        let mut derived: HashSet<(&str, usize, &[TermId])> = HashSet::new();
        stats.demand_tuples = 0;
        for (i, rel) in ev.store.relations().iter().enumerate() {
            let key = rel.key();
            if magic.contains(&key.name) {
                stats.demand_tuples += rel.len() as u64;
                continue;
            }
            let name = origin.get(&key.name).unwrap_or(&key.name);
            for row in ev.loaded[i] as u32..rel.len() as u32 {
                derived.insert((name.as_str(), key.arity, rel.row(row)));
            }
        }
        stats.tuples_derived = derived.len() as u64;
    }

    let answer_key = PredKey::new(ANSWER_PRED, vars.len());
    let rows = match ev.store.pred_id(&answer_key) {
        Some(id) => ev
            .store
            .sorted_tuples(id)
            .into_iter()
            .map(|t| t.iter().map(|&x| ev.store.terms.to_term(x)).collect())
            .collect(),
        None => Vec::new(),
    };
    Ok(Answers { vars, rows, stats })
}

/// Least model of a ground definite program over atoms `0..atoms`, each rule
/// given as its head and positive body. Runs in time linear in the program
/// size by counting unsatisfied body atoms per rule.
pub fn ground_least_model<'a>(atoms: usize, rules: impl IntoIterator<Item = (usize, &'a [usize])>) -> Vec<bool> {
    let mut truth = vec![false; atoms];
    let mut waiting: Vec<usize> = Vec::new();
    let mut heads: Vec<usize> = Vec::new();
    let mut watchers: Vec<Vec<usize>> = vec![Vec::new(); atoms];
    let mut queue: Vec<usize> = Vec::new();
    for (head, body) in rules {
        let r = heads.len();
        heads.push(head);
        waiting.push(body.len());
        for &a in body {
            watchers[a].push(r);
        }
        if body.is_empty() && !truth[head] {
            truth[head] = true;
            queue.push(head);
        }
    }
    while let Some(a) = queue.pop() {
        for &r in &watchers[a] {
            waiting[r] -= 1;
            if waiting[r] == 0 && !truth[heads[r]] {
                truth[heads[r]] = true;
                queue.push(heads[r]);
            }
        }
    }
    truth
}

/// Evaluates a stratifiable program and returns every fact of its model,
/// sorted.
pub fn model(program: &Program, cfg: &EvalConfig) -> Result<Vec<crate::syntax::Atom>> {
    let class = classify(&build_graph(program));
    let (store, _) = evaluate(program, class.require_stratified()?, cfg)?;
    Ok(store.atoms())
}
