use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{answer_rule, build_graph, check_known, restrict, ANSWER_PRED};
use crate::error::Result;
use crate::syntax::{Atom, Literal, PredKey, Program, Rule, Term};

/// A query-specialized program together with the bookkeeping needed to read
/// answers back and to attribute derived tuples to source predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandProgram {
    pub program: Program,
    /// `query__answer(V1,..,Vn)` with the query's answer variables.
    pub answer: Atom,
    /// Adorned predicate name to the predicate it specializes.
    pub origin: BTreeMap<String, String>,
    /// Names of the demand (magic) predicates.
    pub magic: BTreeSet<String>,
    /// Set when some predicate the query needs is defined with negation or
    /// aggregation, so the rewrite was skipped in favour of plain pruning.
    pub fallback: bool,
}

type Adornment = Vec<bool>;

fn adorn_text(a: &[bool]) -> String {
    a.iter().map(|&b| if b { 'b' } else { 'f' }).collect()
}

fn adorned_name(pred: &str, a: &[bool]) -> String {
    format!("{pred}__ad_{}", adorn_text(a))
}

fn magic_name(pred: &str, a: &[bool]) -> String {
    format!("{pred}__dm_{}", adorn_text(a))
}

fn term_bound(t: &Term, bound: &BTreeSet<String>) -> bool {
    let mut vars = Vec::new();
    t.collect_vars(&mut vars);
    vars.iter().all(|v| bound.contains(*v))
}

fn bind_all(bound: &mut BTreeSet<String>, atom: &Atom) {
    bound.extend(atom.vars().into_iter().map(str::to_string));
}

fn bound_args(atom: &Atom, a: &[bool]) -> Vec<Term> {
    atom.args.iter().zip(a).filter(|(_, &b)| b).map(|(t, _)| t.clone()).collect()
}

struct Rewriter<'a> {
    program: &'a Program,
    adornable: BTreeSet<PredKey>,
    out: Program,
    origin: BTreeMap<String, String>,
    magic: BTreeSet<String>,
    seen: BTreeSet<(PredKey, Adornment)>,
    queue: VecDeque<(PredKey, Adornment)>,
}

impl Rewriter<'_> {
    fn demand(&mut self, key: &PredKey, a: &[bool]) {
        if self.seen.insert((key.clone(), a.to_vec())) {
            self.queue.push_back((key.clone(), a.to_vec()));
            self.origin.insert(adorned_name(&key.name, a), key.name.clone());
            self.magic.insert(magic_name(&key.name, a));
        }
    }

    /// Rewrites one body under sideways information passing from left to
    /// right. `guard` is the demand atom of the head, absent for the
    /// query's answer rule.
    fn rewrite_body(&mut self, body: &[Literal], guard: Option<Atom>, mut bound: BTreeSet<String>) -> Vec<Literal> {
        let mut done: Vec<Literal> = guard.into_iter().map(Literal::Pos).collect();
        for lit in body {
            let Literal::Pos(atom) = lit else {
                done.push(lit.clone());
                continue;
            };
            let key = atom.key();
            if !self.adornable.contains(&key) {
                done.push(lit.clone());
                bind_all(&mut bound, atom);
                continue;
            }
            let a: Adornment = atom.args.iter().map(|t| term_bound(t, &bound)).collect();
            self.demand(&key, &a);
            let magic_head = Atom::new(magic_name(&atom.pred, &a), bound_args(atom, &a));
            // Demand for this atom is justified by everything to its left that
            // can be evaluated: positive atoms and fully bound comparisons.
            let mut covered: Vec<&str> = Vec::new();
            for l in &done {
                if let Literal::Pos(x) = l {
                    x.collect_vars(&mut covered);
                }
            }
            let magic_body: Vec<Literal> = done
                .iter()
                .filter(|l| match l {
                    Literal::Pos(_) => true,
                    Literal::Cmp(..) => l.vars().iter().all(|v| covered.contains(v)),
                    _ => false,
                })
                .cloned()
                .collect();
            if magic_body.is_empty() {
                self.out.facts.push(magic_head);
            } else {
                self.out.rules.push(Rule::new(magic_head, magic_body));
            }
            done.push(Literal::Pos(Atom::new(adorned_name(&atom.pred, &a), atom.args.clone())));
            bind_all(&mut bound, atom);
        }
        done
    }

    fn run(&mut self) {
        while let Some((key, a)) = self.queue.pop_front() {
            let name = adorned_name(&key.name, &a);
            for fact in self.program.facts.iter().filter(|f| f.key() == key) {
                self.out.facts.push(Atom::new(name.clone(), fact.args.clone()));
            }
            let rules: Vec<&Rule> = self.program.rules.iter().filter(|r| r.head.key() == key).collect();
            for rule in rules {
                let guard = Atom::new(magic_name(&key.name, &a), bound_args(&rule.head, &a));
                let mut bound = BTreeSet::new();
                bind_all(&mut bound, &guard);
                let body = self.rewrite_body(&rule.body, Some(guard), bound);
                self.out.rules.push(Rule {
                    head: Atom::new(name.clone(), rule.head.args.clone()),
                    body,
                    pos: rule.pos,
                });
            }
        }
    }
}

/// Specializes `program` to `query` with magic-set rewriting.
///
/// Each derived predicate reachable from the query gets one copy per binding
/// pattern it is called with (`p__ad_bf`), guarded by a demand predicate
/// (`p__dm_bf`) holding the bound arguments of the calls. Facts of a derived
/// predicate are loaded into each of its copies. Predicates used only under
/// negation or aggregation in the query keep their original rules. When any
/// derived predicate in the query's cone uses negation or aggregation, the
/// result is the relevance-pruned program with `fallback` set.
pub fn magic_transform(program: &Program, query: &[Literal]) -> Result<DemandProgram> {
    check_known(program, query)?;
    let answer_rule = answer_rule(query);
    let answer = answer_rule.head.clone();

    let graph = build_graph(program);
    let idb: BTreeSet<PredKey> = program.rules.iter().map(|r| r.head.key()).collect();
    let impure: BTreeSet<PredKey> = program
        .rules
        .iter()
        .filter(|r| r.has_negation() || r.has_aggregate())
        .map(|r| r.head.key())
        .collect();
    let positive_roots: BTreeSet<PredKey> = query
        .iter()
        .filter_map(|l| match l {
            Literal::Pos(a) => Some(a.key()),
            _ => None,
        })
        .collect();
    let other_roots: BTreeSet<PredKey> = super::query_preds(query)
        .into_iter()
        .filter(|k| {
            query.iter().any(|l| match l {
                Literal::Neg(a) => a.key() == *k,
                Literal::Agg(agg) => agg.body.iter().filter_map(Literal::atom).any(|a| a.key() == *k),
                _ => false,
            })
        })
        .collect();
    let demand_cone = graph.reachable(&positive_roots);
    let fallback = demand_cone.iter().any(|k| impure.contains(k));

    let mut base_keys = graph.reachable(&other_roots);
    if fallback {
        base_keys.extend(demand_cone.iter().cloned());
        let mut out = restrict(program, &base_keys);
        out.rules.push(answer_rule);
        out.queries.clear();
        return Ok(DemandProgram {
            program: out,
            answer,
            origin: BTreeMap::new(),
            magic: BTreeSet::new(),
            fallback,
        });
    }

    let adornable: BTreeSet<PredKey> = demand_cone.intersection(&idb).cloned().collect();
    // Base relations the adorned rules read directly.
    base_keys.extend(demand_cone.difference(&adornable).cloned());
    let mut rw = Rewriter {
        program,
        adornable,
        out: restrict(program, &base_keys),
        origin: BTreeMap::new(),
        magic: BTreeSet::new(),
        seen: BTreeSet::new(),
        queue: VecDeque::new(),
    };
    rw.out.queries.clear();
    let body = rw.rewrite_body(&answer_rule.body, None, BTreeSet::new());
    rw.run();
    rw.out.rules.push(Rule {
        head: answer_rule.head,
        body,
        pos: answer_rule.pos,
    });
    debug_assert!(rw.out.rules.iter().all(|r| r.head.pred != ANSWER_PRED || r.head == answer));
    Ok(DemandProgram {
        program: rw.out,
        answer,
        origin: rw.origin,
        magic: rw.magic,
        fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{load, parse, parse_literals};

    #[test]
    fn is_positive_rewrite_is_finite() {
        let p = load("is_positive(1). is_positive(succ(N)) :- is_positive(N).").unwrap();
        let d = magic_transform(&p, &parse_literals("is_positive(succ(1))").unwrap()).unwrap();
        assert!(!d.fallback);
        let expected = parse(
            "is_positive__dm_b(succ(1)).
             is_positive__ad_b(1).
             is_positive__dm_b(N) :- is_positive__dm_b(succ(N)).
             is_positive__ad_b(succ(N)) :- is_positive__dm_b(succ(N)), is_positive__ad_b(N).
             query__answer :- is_positive__ad_b(succ(1)).",
        )
        .unwrap();
        let sorted = |mut p: Program| {
            p.rules.sort_by_key(|r| r.to_string());
            p.facts.sort_by_key(|f| f.to_string());
            p
        };
        assert_eq!(sorted(d.program), sorted(expected));
        assert_eq!(d.origin["is_positive__ad_b"], "is_positive");
    }

    #[test]
    fn base_query_is_untouched() {
        let p = load("is_father(dan,bob). is_father(bob,amy).").unwrap();
        let d = magic_transform(&p, &parse_literals("is_father(dan,bob)").unwrap()).unwrap();
        assert!(d.magic.is_empty());
        assert_eq!(d.program.rules.len(), 1);
        assert_eq!(d.program.facts.len(), 2);
    }

    #[test]
    fn negation_in_cone_falls_back() {
        let p = load("m(X) :- p(X), not q(X). r(X) :- m(X). p(1). q(2).").unwrap();
        let d = magic_transform(&p, &parse_literals("r(1)").unwrap()).unwrap();
        assert!(d.fallback);
        assert!(d.magic.is_empty());
    }

    #[test]
    fn negated_query_literal_keeps_original() {
        let p = load("a(X) :- e(X). b(X) :- e(X), X > 1. e(1). e(2).").unwrap();
        let d = magic_transform(&p, &parse_literals("a(X), not b(X)").unwrap()).unwrap();
        assert!(!d.fallback);
        assert!(d.program.rules.iter().any(|r| r.head.pred == "b"));
        assert!(d.program.rules.iter().any(|r| r.head.pred == "a__ad_f"));
    }

    #[test]
    fn sips_binds_left_to_right() {
        let p = load(
            "anc(X,Y) :- par(X,Y). anc(X,Y) :- par(X,Z), anc(Z,Y). par(a,b). par(b,c).",
        )
        .unwrap();
        let d = magic_transform(&p, &parse_literals("anc(a,Y)").unwrap()).unwrap();
        let names: BTreeSet<&str> = d.origin.keys().map(String::as_str).collect();
        assert_eq!(names, BTreeSet::from(["anc__ad_bf"]));
        assert!(d
            .program
            .rules
            .iter()
            .any(|r| r.to_string() == "anc__dm_bf(Z) :- anc__dm_bf(X), par(X,Z)."));
    }
}
