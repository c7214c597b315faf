//! Random program generators and brute-force reference evaluators.
//!
//! Everything here favours obviousness over speed: the reference evaluators
//! instantiate rules over the whole constant universe and enumerate all
//! assignments, so they only suit the small programs the generators emit.

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::stable::StableModel;
use crate::syntax::{Atom, CmpOp, Literal, Program, Rule, Term};
use crate::wfs::GroundProgram;

/// Size limits for [`random_program`].
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub preds: usize,
    pub rules: usize,
    pub facts: usize,
    /// Allow negated atoms, always on strictly lower predicates so the
    /// result stays stratified.
    pub negation: bool,
    pub comparisons: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            preds: 6,
            rules: 12,
            facts: 30,
            negation: true,
            comparisons: true,
        }
    }
}

const VARS: [&str; 3] = ["X", "Y", "Z"];

fn constants() -> [Term; 5] {
    [Term::Int(1), Term::Int(2), Term::Int(3), Term::sym("a"), Term::sym("b")]
}

fn constant(rng: &mut impl Rng) -> Term {
    constants().choose(rng).unwrap().clone()
}

fn pick_bound(rng: &mut impl Rng, bound: &[String]) -> Term {
    if bound.is_empty() || rng.gen_bool(0.2) {
        constant(rng)
    } else {
        Term::var(bound.choose(rng).unwrap().clone())
    }
}

/// A random safe program over predicates `p0..`, each of arity 1 or 2.
///
/// Positive body atoms may use any predicate when negation is off, which
/// gives mutual recursion; with negation on, a rule for `pi` reads `pj` with
/// `j <= i` positively and `j < i` negatively.
pub fn random_program(rng: &mut impl Rng, shape: Shape) -> Program {
    let preds = rng.gen_range(1..=shape.preds.max(1));
    let arity: Vec<usize> = (0..preds).map(|_| rng.gen_range(1..=2)).collect();
    let atom = |i: usize, args: Vec<Term>| Atom::new(format!("p{i}"), args);
    let mut program = Program::default();
    for _ in 0..rng.gen_range(1..=shape.facts.max(1)) {
        // Facts lean towards the low predicates so the rules have input.
        let i = rng.gen_range(0..preds).min(rng.gen_range(0..preds));
        program.facts.push(atom(i, (0..arity[i]).map(|_| constant(rng)).collect()));
    }
    for _ in 0..rng.gen_range(0..=shape.rules) {
        let head = rng.gen_range(0..preds);
        let mut body = Vec::new();
        let mut bound: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let j = if shape.negation { rng.gen_range(0..=head) } else { rng.gen_range(0..preds) };
            let args = (0..arity[j])
                .map(|_| {
                    if rng.gen_bool(0.8) {
                        Term::var(*VARS.choose(rng).unwrap())
                    } else {
                        constant(rng)
                    }
                })
                .collect();
            let a = atom(j, args);
            for v in a.vars() {
                if !bound.iter().any(|b| b == v) {
                    bound.push(v.to_string());
                }
            }
            body.push(Literal::Pos(a));
        }
        if shape.negation && head > 0 && rng.gen_bool(0.4) {
            let j = rng.gen_range(0..head);
            let args = (0..arity[j]).map(|_| pick_bound(rng, &bound)).collect();
            body.push(Literal::Neg(atom(j, args)));
        }
        if shape.comparisons && !bound.is_empty() && rng.gen_bool(0.3) {
            let ops = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];
            let lhs = Term::var(bound.choose(rng).unwrap().clone());
            let rhs = pick_bound(rng, &bound);
            body.push(Literal::Cmp(lhs, *ops.choose(rng).unwrap(), rhs));
        }
        let head_args = (0..arity[head]).map(|_| pick_bound(rng, &bound)).collect();
        program.rules.push(Rule::new(atom(head, head_args), body));
    }
    program
}

/// A random positive query over the predicates of `program`.
pub fn random_query(rng: &mut impl Rng, program: &Program) -> Vec<Literal> {
    let preds: Vec<_> = program.defined_or_used().into_iter().collect();
    let key = preds.choose(rng).unwrap();
    let args = (0..key.arity)
        .map(|_| {
            if rng.gen_bool(0.5) {
                constant(rng)
            } else {
                Term::var(["X", "Y"][rng.gen_range(0..2)])
            }
        })
        .collect();
    vec![Literal::Pos(Atom::new(key.name.clone(), args))]
}

fn substitute(t: &Term, names: &[&str], values: &[Term]) -> Term {
    match t {
        Term::Var(v) => values[names.iter().position(|n| n == v).expect("variable in scope")].clone(),
        Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| substitute(a, names, values)).collect()),
        other => other.clone(),
    }
}

fn ground_atom(a: &Atom, names: &[&str], values: &[Term]) -> String {
    Atom::new(a.pred.clone(), a.args.iter().map(|t| substitute(t, names, values)).collect()).to_string()
}

fn collect_constants(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::Var(_) => {}
        Term::Compound(_, args) => args.iter().for_each(|a| collect_constants(a, out)),
        other => {
            if !out.contains(other) {
                out.push(other.clone())
            }
        }
    }
}

/// Every constant in the program, in first-seen order.
pub fn universe(program: &Program) -> Vec<Term> {
    let mut out = Vec::new();
    for f in &program.facts {
        f.args.iter().for_each(|t| collect_constants(t, &mut out));
    }
    for r in &program.rules {
        r.head.args.iter().for_each(|t| collect_constants(t, &mut out));
        for lit in &r.body {
            match lit {
                Literal::Pos(a) | Literal::Neg(a) => a.args.iter().for_each(|t| collect_constants(t, &mut out)),
                Literal::Cmp(l, _, r) => {
                    collect_constants(l, &mut out);
                    collect_constants(r, &mut out);
                }
                Literal::Agg(_) => panic!("aggregates are outside the reference evaluator"),
            }
        }
    }
    out
}

/// Calls `f` with every assignment of `vars` over `universe`.
fn for_each_assignment(vars: usize, universe: &[Term], f: &mut dyn FnMut(&[Term])) {
    if vars > 0 && universe.is_empty() {
        return;
    }
    let mut idx = vec![0usize; vars];
    loop {
        let values: Vec<Term> = idx.iter().map(|&i| universe[i].clone()).collect();
        f(&values);
        let mut k = 0;
        loop {
            if k == vars {
                return;
            }
            idx[k] += 1;
            if idx[k] < universe.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn body_holds(body: &[Literal], names: &[&str], values: &[Term], model: &BTreeSet<String>) -> bool {
    body.iter().all(|lit| match lit {
        Literal::Pos(a) => model.contains(&ground_atom(a, names, values)),
        Literal::Neg(a) => !model.contains(&ground_atom(a, names, values)),
        Literal::Cmp(l, op, r) => op.holds(substitute(l, names, values).total_cmp(&substitute(r, names, values))),
        Literal::Agg(_) => panic!("aggregates are outside the reference evaluator"),
    })
}

fn rule_vars(rule: &Rule) -> Vec<&str> {
    let mut vars = rule.head.vars();
    for lit in &rule.body {
        lit.collect_vars(&mut vars);
    }
    let mut seen = Vec::new();
    for v in vars {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    seen
}

/// The least model of a negation-free, function-free program, by applying
/// every ground instance of every rule until nothing changes. Atoms are
/// rendered with `Display`.
pub fn brute_least_model(program: &Program) -> BTreeSet<String> {
    assert!(program.rules.iter().all(|r| !r.has_negation()), "negation-free programs only");
    let universe = universe(program);
    let mut model: BTreeSet<String> = program.facts.iter().map(Atom::to_string).collect();
    loop {
        let mut new = Vec::new();
        for rule in &program.rules {
            let names = rule_vars(rule);
            for_each_assignment(names.len(), &universe, &mut |values| {
                if body_holds(&rule.body, &names, values, &model) {
                    let h = ground_atom(&rule.head, &names, values);
                    if !model.contains(&h) {
                        new.push(h);
                    }
                }
            });
        }
        if new.is_empty() {
            return model;
        }
        model.extend(new);
    }
}

/// Ground instances of `query` that hold in `model`, one rendered row per
/// answer with the values of the query's variables.
pub fn brute_answers(program: &Program, query: &[Literal], model: &BTreeSet<String>) -> BTreeSet<Vec<String>> {
    let mut universe = universe(program);
    for lit in query {
        if let Some(a) = lit.atom() {
            a.args.iter().for_each(|t| collect_constants(t, &mut universe));
        }
    }
    let mut names = Vec::new();
    for lit in query {
        lit.collect_vars(&mut names);
    }
    let mut seen: Vec<&str> = Vec::new();
    for v in names {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    let mut out = BTreeSet::new();
    for_each_assignment(seen.len(), &universe, &mut |values| {
        if body_holds(query, &seen, values, model) {
            out.insert(values.iter().map(Term::to_string).collect());
        }
    });
    out
}

/// A random ground program over atoms `a0..a{atoms-1}`.
pub fn random_ground(rng: &mut impl Rng, atoms: usize) -> GroundProgram {
    let mut g = GroundProgram::new();
    let ids: Vec<usize> = (0..atoms).map(|i| g.atom(&Atom::new(format!("a{i}"), vec![]))).collect();
    if atoms == 0 {
        return g;
    }
    for _ in 0..rng.gen_range(0..=2 * atoms) {
        let head = *ids.choose(rng).unwrap();
        let pos = (0..rng.gen_range(0..=2)).map(|_| *ids.choose(rng).unwrap()).collect();
        let neg = (0..rng.gen_range(0..=2)).map(|_| *ids.choose(rng).unwrap()).collect();
        g.add_rule(head, pos, neg);
    }
    g
}

/// Stable models by trying all `2^n` candidate sets, each checked against
/// the least model of its reduct computed by naive iteration.
pub fn brute_stable(g: &GroundProgram) -> Vec<StableModel> {
    let n = g.atom_count();
    assert!(n <= 20, "brute force over {n} atoms");
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let m = |a: usize| mask & (1 << a) != 0;
        let mut least = vec![false; n];
        loop {
            let mut changed = false;
            for r in g.rules() {
                if r.neg.iter().any(|&a| m(a)) || least[r.head] {
                    continue;
                }
                if r.pos.iter().all(|&a| least[a]) {
                    least[r.head] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if (0..n).all(|a| least[a] == m(a)) {
            out.push(StableModel((0..n).filter(|&a| m(a)).collect()));
        }
    }
    out
}

/// Facts for a random points-to instance with `statements` assignments over
/// variables `v0..v{vars-1}`, roughly a third of them taking addresses.
pub fn andersen_facts(rng: &mut impl Rng, statements: usize, vars: usize) -> String {
    let mut s = String::new();
    let v = |rng: &mut dyn rand::RngCore| format!("v{}", rng.gen_range(0..vars));
    for _ in 0..statements {
        let kind = match rng.gen_range(0..6) {
            0 | 1 => "addr",
            2 | 3 => "copy",
            4 => "load",
            _ => "store",
        };
        let (a, b) = (v(rng), v(rng));
        writeln!(s, "{kind}({a}, {b}).").unwrap();
    }
    s
}
