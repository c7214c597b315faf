//! Predicate dependencies, stratification, tier classification, and
//! query-directed program specialization.
//!
//! The tiers follow the three control abstractions:
//!
//! | tier       | recursion | negation                  |
//! |------------|-----------|---------------------------|
//! | join       | no        | anywhere (no cycles)      |
//! | recursion  | yes       | only between strata       |
//! | constraint | yes       | inside a recursive cycle  |

mod magic;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::{Error, Result};
use crate::syntax::{Atom, Literal, PredKey, Program, Rule};

pub use magic::{magic_transform, DemandProgram};

/// Name of the predicate holding query answers in evaluated programs.
pub const ANSWER_PRED: &str = "query__answer";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Positive,
    Negative,
    Aggregate,
}

impl Polarity {
    /// Whether the edge forces a strict stratum increase.
    pub fn is_strict(self) -> bool {
        !matches!(self, Polarity::Positive)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: PredKey,
    pub to: PredKey,
    pub polarity: Polarity,
}

/// Direct dependencies from rule heads to the predicates in their bodies.
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    nodes: Vec<PredKey>,
    index: HashMap<PredKey, usize>,
    edges: BTreeSet<(usize, usize, Polarity)>,
}

impl DependencyGraph {
    pub fn nodes(&self) -> &[PredKey] {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|&(f, t, polarity)| Edge {
            from: self.nodes[f].clone(),
            to: self.nodes[t].clone(),
            polarity,
        })
    }

    pub fn has_edge(&self, from: &PredKey, to: &PredKey, polarity: Polarity) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&f), Some(&t)) => self.edges.contains(&(f, t, polarity)),
            _ => false,
        }
    }

    /// Every predicate reachable from `roots` along dependency edges,
    /// including the roots themselves.
    pub fn reachable<'a>(&self, roots: impl IntoIterator<Item = &'a PredKey>) -> BTreeSet<PredKey> {
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for &(f, t, _) in &self.edges {
            succ[f].push(t);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = roots.into_iter().filter_map(|k| self.index.get(k).copied()).collect();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            stack.extend(succ[n].iter().copied().filter(|&m| !seen[m]));
        }
        seen.iter()
            .enumerate()
            .filter(|(_, s)| **s)
            .map(|(i, _)| self.nodes[i].clone())
            .collect()
    }

    /// Strongly connected components, dependencies before dependents.
    pub fn components(&self) -> Vec<Vec<PredKey>> {
        self.scc_indices()
            .into_iter()
            .map(|c| c.into_iter().map(|i| self.nodes[i].clone()).collect())
            .collect()
    }

    fn scc_indices(&self) -> Vec<Vec<usize>> {
        let mut g: DiGraph<usize, ()> = DiGraph::new();
        let ids: Vec<NodeIndex> = (0..self.nodes.len()).map(|i| g.add_node(i)).collect();
        for &(f, t, _) in &self.edges {
            g.update_edge(ids[f], ids[t], ());
        }
        // tarjan_scc yields components in reverse topological order, which
        // puts the bodies of a rule before its head.
        tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(|n| g[n]).collect();
                c.sort_unstable();
                c
            })
            .collect()
    }
}

pub fn build_graph(program: &Program) -> DependencyGraph {
    let nodes: Vec<PredKey> = program.defined_or_used().into_iter().collect();
    let index: HashMap<PredKey, usize> = nodes.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    let mut edges = BTreeSet::new();
    for rule in &program.rules {
        let h = index[&rule.head.key()];
        for lit in &rule.body {
            match lit {
                Literal::Pos(a) => {
                    edges.insert((h, index[&a.key()], Polarity::Positive));
                }
                Literal::Neg(a) => {
                    edges.insert((h, index[&a.key()], Polarity::Negative));
                }
                Literal::Agg(agg) => {
                    for a in agg.body.iter().filter_map(Literal::atom) {
                        edges.insert((h, index[&a.key()], Polarity::Aggregate));
                    }
                }
                Literal::Cmp(..) => {}
            }
        }
    }
    DependencyGraph { nodes, index, edges }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Join,
    Recursion,
    Constraint,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Join => "join",
            Tier::Recursion => "recursion",
            Tier::Constraint => "constraint",
        })
    }
}

/// Predicates partitioned into strata evaluated in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratification {
    pub strata: Vec<Vec<PredKey>>,
    pub level: BTreeMap<PredKey, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub tier: Tier,
    /// Present for the join and recursion tiers.
    pub stratification: Option<Stratification>,
    /// For the constraint tier, the first component found with a negative or
    /// aggregate edge inside it.
    pub unstratified_cycle: Option<Vec<PredKey>>,
}

impl Classification {
    /// The stratification, or the error explaining why there is none.
    pub fn require_stratified(&self) -> Result<&Stratification> {
        self.stratification.as_ref().ok_or_else(|| {
            Error::NotStratifiable(join_keys(self.unstratified_cycle.as_deref().unwrap_or_default()))
        })
    }
}

pub(crate) fn join_keys(keys: &[PredKey]) -> String {
    keys.iter().map(PredKey::to_string).collect::<Vec<_>>().join(", ")
}

pub fn classify(g: &DependencyGraph) -> Classification {
    let comps = g.scc_indices();
    let mut comp_of = vec![0usize; g.nodes.len()];
    for (c, members) in comps.iter().enumerate() {
        for &n in members {
            comp_of[n] = c;
        }
    }

    let mut cyclic = false;
    let mut bad: Option<usize> = None;
    for &(f, t, pol) in &g.edges {
        if comp_of[f] == comp_of[t] {
            cyclic = true;
            if pol.is_strict() {
                bad = Some(bad.map_or(comp_of[f], |b: usize| b.min(comp_of[f])));
            }
        }
    }
    if let Some(c) = bad {
        return Classification {
            tier: Tier::Constraint,
            stratification: None,
            unstratified_cycle: Some(comps[c].iter().map(|&i| g.nodes[i].clone()).collect()),
        };
    }

    // Longest path over the component DAG, strict edges weighing one.
    // Components come bodies-first, so one forward pass suffices.
    let mut level = vec![0usize; comps.len()];
    let mut out_edges: Vec<Vec<(usize, Polarity)>> = vec![Vec::new(); comps.len()];
    for &(f, t, pol) in &g.edges {
        if comp_of[f] != comp_of[t] {
            out_edges[comp_of[f]].push((comp_of[t], pol));
        }
    }
    for c in 0..comps.len() {
        level[c] = out_edges[c]
            .iter()
            .map(|&(d, pol)| level[d] + usize::from(pol.is_strict()))
            .max()
            .unwrap_or(0);
    }
    let height = level.iter().copied().max().map_or(0, |m| m + 1);
    let mut strata = vec![Vec::new(); height];
    let mut by_pred = BTreeMap::new();
    for (n, key) in g.nodes.iter().enumerate() {
        let l = level[comp_of[n]];
        strata[l].push(key.clone());
        by_pred.insert(key.clone(), l);
    }
    Classification {
        tier: if cyclic { Tier::Recursion } else { Tier::Join },
        stratification: Some(Stratification { strata, level: by_pred }),
        unstratified_cycle: None,
    }
}

/// Rule whose head collects the answer variables of a query body.
pub fn answer_rule(query: &[Literal]) -> Rule {
    let vars = crate::syntax::answer_vars(query);
    let head = Atom::new(
        ANSWER_PRED,
        vars.iter().map(|v| crate::syntax::Term::var(*v)).collect(),
    );
    Rule::new(head, query.to_vec())
}

pub(crate) fn query_preds(query: &[Literal]) -> BTreeSet<PredKey> {
    let mut out = BTreeSet::new();
    for lit in query {
        match lit {
            Literal::Pos(a) | Literal::Neg(a) => {
                out.insert(a.key());
            }
            Literal::Agg(agg) => out.extend(agg.body.iter().filter_map(Literal::atom).map(Atom::key)),
            Literal::Cmp(..) => {}
        }
    }
    out
}

pub(crate) fn check_known(program: &Program, query: &[Literal]) -> Result<BTreeSet<PredKey>> {
    let known = program.defined_or_used();
    let preds = query_preds(query);
    if let Some(unknown) = preds.iter().find(|k| !known.contains(k)) {
        return Err(Error::UnknownPredicate(unknown.to_string()));
    }
    Ok(preds)
}

/// Keeps the rules and facts of the predicates the query depends on.
pub fn relevance_prune(program: &Program, query: &[Literal]) -> Result<Program> {
    let roots = check_known(program, query)?;
    let cone = build_graph(program).reachable(&roots);
    Ok(restrict(program, &cone))
}

pub(crate) fn restrict(program: &Program, preds: &BTreeSet<PredKey>) -> Program {
    Program {
        rules: program
            .rules
            .iter()
            .filter(|r| preds.contains(&r.head.key()))
            .cloned()
            .collect(),
        facts: program.facts.iter().filter(|f| preds.contains(&f.key())).cloned().collect(),
        queries: program.queries.clone(),
    }
}
