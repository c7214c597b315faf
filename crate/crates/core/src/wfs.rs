//! Grounding and the well-founded model.
//!
//! [`ground`] instantiates a function-free program over the atoms derivable
//! when negation is ignored. [`well_founded`] then runs the alternating fixed
//! point: `W' = Γ(B)`, `B' = Γ(W)`, starting from `W = ∅` and `B = all`,
//! where `Γ(S)` is the least model of the program after dropping every rule
//! with a negated atom in `S` and deleting the remaining negations. `W`
//! grows to the true atoms and `B` shrinks to the atoms that are not false.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::analysis::{build_graph, check_known, classify, join_keys, restrict, ANSWER_PRED};
use crate::error::{Error, Result};
use crate::fixpoint::{evaluate, ground_least_model, EvalConfig};
use crate::joineval::CompiledRule;
use crate::store::{PredId, Store, TermId};
use crate::syntax::{Atom, Literal, PredKey, Program, Rule, Term};

/// A propositional rule over atom ids: `head :- pos, not neg`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundRule {
    pub head: usize,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

/// Ground atoms numbered densely, with the rules over them. Facts are rules
/// with empty bodies.
#[derive(Debug, Clone, Default)]
pub struct GroundProgram {
    atoms: Vec<Atom>,
    ids: HashMap<Atom, usize>,
    rules: Vec<GroundRule>,
    seen: HashSet<GroundRule>,
}

impl GroundProgram {
    pub fn new() -> Self {
        GroundProgram::default()
    }

    /// The id of `atom`, adding it to the universe if new.
    pub fn atom(&mut self, atom: &Atom) -> usize {
        if let Some(&id) = self.ids.get(atom) {
            return id;
        }
        let id = self.atoms.len();
        self.atoms.push(atom.clone());
        self.ids.insert(atom.clone(), id);
        id
    }

    pub fn find(&self, atom: &Atom) -> Option<usize> {
        self.ids.get(atom).copied()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn rules(&self) -> &[GroundRule] {
        &self.rules
    }

    /// Adds a rule; body atoms are deduplicated and exact duplicate rules
    /// are dropped.
    pub fn add_rule(&mut self, head: usize, mut pos: Vec<usize>, mut neg: Vec<usize>) {
        let n = self.atoms.len();
        assert!(head < n && pos.iter().chain(&neg).all(|&a| a < n), "atom id out of range");
        pos.sort_unstable();
        pos.dedup();
        neg.sort_unstable();
        neg.dedup();
        let rule = GroundRule { head, pos, neg };
        if self.seen.insert(rule.clone()) {
            self.rules.push(rule);
        }
    }

    pub fn add_fact(&mut self, head: usize) {
        self.add_rule(head, Vec::new(), Vec::new());
    }

    /// Least model of the reduct with respect to `s`: rules with a negated
    /// atom in `s` are dropped and the remaining negations deleted.
    pub fn reduct_least_model(&self, s: &[bool]) -> Vec<bool> {
        ground_least_model(
            self.atom_count(),
            self.rules
                .iter()
                .filter(|r| r.neg.iter().all(|&a| !s[a]))
                .map(|r| (r.head, r.pos.as_slice())),
        )
    }

    /// Atom ids sorted by predicate and then the term order.
    pub fn sorted(&self, ids: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_by(|&a, &b| self.atoms[a].total_cmp(&self.atoms[b]));
        ids
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            write!(f, "{}", self.atoms[r.head])?;
            let body: Vec<String> = r
                .pos
                .iter()
                .map(|&a| self.atoms[a].to_string())
                .chain(r.neg.iter().map(|&a| format!("not {}", self.atoms[a])))
                .collect();
            if !body.is_empty() {
                write!(f, " :- {}", body.join(", "))?;
            }
            writeln!(f, ".")?;
        }
        Ok(())
    }
}

fn exact_name(pred: &str) -> String {
    format!("{pred}__ex")
}

fn rename_aggregates(rule: &Rule) -> Rule {
    let mut rule = rule.clone();
    for lit in &mut rule.body {
        if let Literal::Agg(agg) = lit {
            for inner in &mut agg.body {
                if let Literal::Pos(a) = inner {
                    a.pred = exact_name(&a.pred);
                }
            }
        }
    }
    rule
}

/// Instantiates `program` over its positive envelope.
///
/// Comparisons are decided and removed. Aggregates are evaluated against the
/// exact stratified model of the predicates they range over, which must not
/// depend on a cycle through negation.
pub fn ground(program: &Program, cfg: &EvalConfig) -> Result<GroundProgram> {
    if let Some(rule) = program.rules.iter().find(|r| r.has_function_symbols()) {
        return Err(Error::Unsupported(format!(
            "function symbols with variables in `{rule}` need stratified evaluation"
        )));
    }
    let graph = build_graph(program);

    // Predicates depending on a component with negation or aggregation
    // inside it have no stratified meaning.
    let components = graph.components();
    let comp_of: BTreeMap<&PredKey, usize> = components
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |k| (k, i)))
        .collect();
    let unstratified: Vec<usize> = (0..components.len())
        .filter(|&i| {
            graph
                .edges()
                .any(|e| e.polarity.is_strict() && comp_of[&e.from] == i && comp_of[&e.to] == i)
        })
        .collect();

    let mut aggregated: BTreeSet<PredKey> = BTreeSet::new();
    for rule in program.rules.iter().filter(|r| r.has_aggregate()) {
        for lit in &rule.body {
            let Literal::Agg(agg) = lit else { continue };
            for a in agg.body.iter().filter_map(Literal::atom) {
                let cone = graph.reachable([&a.key()]);
                if let Some(&c) = unstratified
                    .iter()
                    .find(|&&c| components[c].iter().any(|k| cone.contains(k)))
                {
                    return Err(Error::AggregateInCycle(join_keys(&components[c])));
                }
                aggregated.insert(a.key());
            }
        }
    }

    let mut envelope = Program {
        rules: Vec::new(),
        facts: program.facts.clone(),
        queries: Vec::new(),
    };
    if !aggregated.is_empty() {
        let cone = graph.reachable(&aggregated);
        let lower = restrict(program, &cone);
        let (store, _) = evaluate(&lower, classify(&build_graph(&lower)).require_stratified()?, cfg)?;
        for key in &aggregated {
            if let Some(id) = store.pred_id(key) {
                for t in store.relation(id).tuples() {
                    let args = t.iter().map(|&x| store.terms.to_term(x)).collect();
                    envelope.facts.push(Atom::new(exact_name(&key.name), args));
                }
            }
        }
    }
    let mut grounded: Vec<Rule> = Vec::with_capacity(program.rules.len());
    for rule in &program.rules {
        let rule = rename_aggregates(rule);
        envelope.rules.push(Rule {
            head: rule.head.clone(),
            body: rule.body.iter().filter(|l| !matches!(l, Literal::Neg(_))).cloned().collect(),
            pos: rule.pos,
        });
        grounded.push(rule);
    }
    let strat = classify(&build_graph(&envelope));
    let strat = strat
        .require_stratified()
        .expect("a program without negation, aggregating only over base relations, is stratified");
    let (mut store, _) = evaluate(&envelope, strat, cfg)?;

    let mut g = GroundProgram::new();
    let mut ids: HashMap<(PredId, Box<[TermId]>), usize> = HashMap::new();
    for fact in &program.facts {
        let id = g.atom(fact);
        g.add_fact(id);
    }
    for rule in &grounded {
        let compiled = CompiledRule::compile(rule, &mut store)?;
        let mut instances = Vec::new();
        compiled.instances(&mut store, &mut |_, inst| {
            instances.push(inst);
            Ok(())
        })?;
        let mut id_of = |store: &Store, g: &mut GroundProgram, (p, t): (PredId, Box<[TermId]>)| -> usize {
            *ids.entry((p, t.clone()))
                .or_insert_with(|| g.atom(&store.terms.to_atom(store.relation(p).key(), &t)))
        };
        for inst in instances {
            let head = id_of(&store, &mut g, inst.head);
            let pos = inst.pos.into_iter().map(|a| id_of(&store, &mut g, a)).collect();
            let neg = inst.neg.into_iter().map(|a| id_of(&store, &mut g, a)).collect();
            g.add_rule(head, pos, neg);
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TruthValue {
    False,
    Undefined,
    True,
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthValue::True => "true",
            TruthValue::False => "false",
            TruthValue::Undefined => "undefined",
        })
    }
}

/// Three-valued model over the atoms of a ground program; atoms in neither
/// set are false.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WfModel {
    pub true_set: BTreeSet<usize>,
    pub undefined_set: BTreeSet<usize>,
}

impl WfModel {
    pub fn value(&self, atom: usize) -> TruthValue {
        if self.true_set.contains(&atom) {
            TruthValue::True
        } else if self.undefined_set.contains(&atom) {
            TruthValue::Undefined
        } else {
            TruthValue::False
        }
    }

    /// The truth value of a ground atom; atoms outside the universe are
    /// false.
    pub fn value_of(&self, g: &GroundProgram, atom: &Atom) -> TruthValue {
        g.find(atom).map_or(TruthValue::False, |id| self.value(id))
    }
}

pub fn well_founded(g: &GroundProgram) -> WfModel {
    let n = g.atom_count();
    let mut w = vec![false; n];
    let mut b = vec![true; n];
    loop {
        let w2 = g.reduct_least_model(&b);
        let b2 = g.reduct_least_model(&w);
        debug_assert!((0..n).all(|i| !w[i] || w2[i]), "true atoms only grow");
        debug_assert!((0..n).all(|i| b[i] || !b2[i]), "possible atoms only shrink");
        debug_assert!((0..n).all(|i| !w2[i] || b2[i]), "true atoms are possible");
        if w2 == w && b2 == b {
            break;
        }
        w = w2;
        b = b2;
    }
    WfModel {
        true_set: (0..n).filter(|&i| w[i]).collect(),
        undefined_set: (0..n).filter(|&i| b[i] && !w[i]).collect(),
    }
}

/// Query answers under the well-founded semantics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WfAnswers {
    pub vars: Vec<String>,
    pub true_rows: Vec<Vec<Term>>,
    pub undefined_rows: Vec<Vec<Term>>,
}

/// Adds the rule `query__answer(V..) :- query` to a program, after checking
/// the query names only known predicates and is safe.
pub fn with_answer_rule(program: &Program, query: &[Literal]) -> Result<(Program, Atom)> {
    let (mut program, query) = crate::syntax::desugar_query(program, query)?;
    check_known(&program, &query)?;
    let rule = crate::analysis::answer_rule(&query);
    crate::syntax::check_rule(&rule)?;
    let head = rule.head.clone();
    program.queries.clear();
    program.rules.push(rule);
    Ok((program, head))
}

pub fn answer_query(program: &Program, query: &[Literal], cfg: &EvalConfig) -> Result<WfAnswers> {
    let (program, head) = with_answer_rule(program, query)?;
    let g = ground(&program, cfg)?;
    let m = well_founded(&g);
    let vars = head.args.iter().map(Term::to_string).collect();
    let rows = |set: &BTreeSet<usize>| -> Vec<Vec<Term>> {
        g.sorted(set.iter().copied().filter(|&a| g.atoms()[a].pred == ANSWER_PRED))
            .into_iter()
            .map(|a| g.atoms()[a].args.clone())
            .collect()
    };
    Ok(WfAnswers {
        vars,
        true_rows: rows(&m.true_set),
        undefined_rows: rows(&m.undefined_set),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::load;

    const WIN: &str = "win(X) :- move(X,Y), not win(Y).";

    fn wf(src: &str) -> (GroundProgram, WfModel) {
        let g = ground(&load(src).unwrap(), &EvalConfig::default()).unwrap();
        let m = well_founded(&g);
        (g, m)
    }

    fn atom(s: &str) -> Atom {
        load(&format!("{s}.")).unwrap().facts.remove(0)
    }

    #[test]
    fn ground_win_one_move() {
        let g = ground(&load(&format!("{WIN} move(a,b).")).unwrap(), &EvalConfig::default()).unwrap();
        assert_eq!(g.to_string(), "move(a,b).\nwin(a) :- move(a,b), not win(b).\n");
    }

    #[test]
    fn ground_win_no_moves() {
        let p = Program {
            rules: load(WIN).unwrap().rules,
            ..Default::default()
        };
        let g = ground(&p, &EvalConfig::default()).unwrap();
        assert_eq!(g.atom_count(), 0);
        assert!(g.rules().is_empty());
    }

    #[test]
    fn comparisons_are_decided() {
        let g = ground(&load("p(X) :- n(X), X < 2. n(1). n(3).").unwrap(), &EvalConfig::default()).unwrap();
        assert_eq!(g.to_string(), "n(1).\nn(3).\np(1) :- n(1).\n");
    }

    #[test]
    fn function_symbols_rejected() {
        let err = ground(
            &load("is_positive(1). is_positive(succ(N)) :- is_positive(N).").unwrap(),
            &EvalConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn aggregate_over_negative_cycle_rejected() {
        let err = ground(
            &load("p(X) :- e(X), not q(X). q(X) :- e(X), not p(X). n(N) :- N = count { X : p(X) }. e(1).").unwrap(),
            &EvalConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::AggregateInCycle(_)), "{err}");
    }

    #[test]
    fn aggregate_over_stratified_part() {
        let (g, m) = wf("p(X) :- e(X), not r(X). r(2). e(1). e(2). e(3).
                         n(N) :- N = count { X : p(X) }.
                         w(X) :- e(X), not w(X).");
        assert_eq!(m.value_of(&g, &atom("n(2)")), TruthValue::True);
        assert_eq!(m.value_of(&g, &atom("n(3)")), TruthValue::False);
        assert_eq!(m.value_of(&g, &atom("w(1)")), TruthValue::Undefined);
    }

    #[test]
    fn win_one_move() {
        let (g, m) = wf(&format!("{WIN} move(a,b)."));
        assert_eq!(m.value_of(&g, &atom("win(a)")), TruthValue::True);
        assert_eq!(m.value_of(&g, &atom("win(b)")), TruthValue::False);
    }

    #[test]
    fn win_self_loop() {
        let (g, m) = wf(&format!("{WIN} move(a,a)."));
        assert_eq!(m.value_of(&g, &atom("win(a)")), TruthValue::Undefined);
    }

    #[test]
    fn win_two_cycle() {
        let (g, m) = wf(&format!("{WIN} move(a,b). move(b,a)."));
        assert_eq!(m.value_of(&g, &atom("win(a)")), TruthValue::Undefined);
        assert_eq!(m.value_of(&g, &atom("win(b)")), TruthValue::Undefined);
        assert_eq!(m.true_set.len(), 2);
    }

    #[test]
    fn good_zak_undefined() {
        let p = crate::syntax::parse("good(zak) :- not good(zak).").unwrap();
        let g = ground(&p, &EvalConfig::default()).unwrap();
        let m = well_founded(&g);
        assert_eq!(m.value_of(&g, &atom("good(zak)")), TruthValue::Undefined);
    }

    #[test]
    fn positive_program_gamma_of_empty_is_least_model() {
        let (g, m) = wf("a(X,Y) :- p(X,Y). a(X,Y) :- p(X,Z), a(Z,Y). p(1,2). p(2,3).");
        let lm = g.reduct_least_model(&vec![false; g.atom_count()]);
        assert_eq!(m.true_set, (0..g.atom_count()).filter(|&i| lm[i]).collect());
        assert!(m.undefined_set.is_empty());
    }

    #[test]
    fn query_answers_split() {
        let p = load(&format!("{WIN} move(a,b). move(b,a). move(c,d).")).unwrap();
        let q = crate::syntax::parse_literals("win(X)").unwrap();
        let a = answer_query(&p, &q, &EvalConfig::default()).unwrap();
        assert_eq!(a.true_rows, vec![vec![Term::sym("c")]]);
        assert_eq!(a.undefined_rows, vec![vec![Term::sym("a")], vec![Term::sym("b")]]);
    }
}
