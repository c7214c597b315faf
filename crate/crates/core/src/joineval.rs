//! Rule bodies as index-backed nested-loop joins.
//!
//! A rule is compiled against a [`Store`] into slot-numbered terms, ordered by
//! [`plan`], and then enumerated: each positive atom probes its relation
//! through the index for the columns already bound, and negations,
//! comparisons and aggregates run as soon as their variables are bound.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::store::{BindingPattern, Interner, PredId, Relation, RowSel, Store, TermId, Value};
use crate::syntax::{AggFunc, Aggregate, Atom, CmpOp, Literal, PredKey, Rule, Term};

/// One step of a join plan, referring to a body literal by position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Scan a positive atom through the index for `pattern`.
    Atom { literal: usize, pattern: BindingPattern },
    /// Test a negation or comparison, or evaluate an aggregate.
    Condition { literal: usize },
}

impl Step {
    pub fn literal(&self) -> usize {
        match *self {
            Step::Atom { literal, .. } | Step::Condition { literal } => literal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinPlan {
    pub steps: Vec<Step>,
}

impl JoinPlan {
    /// The body literal positions in evaluation order.
    pub fn order(&self) -> Vec<usize> {
        self.steps.iter().map(Step::literal).collect()
    }
}

/// Which positive atom, if any, reads only the current delta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaMode {
    #[default]
    Full,
    Delta(usize),
}

/// Variables as slots; the planner only needs which slots each literal
/// binds or requires.
#[derive(Debug, Clone)]
enum Shape {
    /// Per argument, the variables it mentions.
    Atom(Vec<Vec<usize>>),
    Cond(Vec<usize>),
    Agg { needs: Vec<usize>, binds: usize },
}

struct Slots(Vec<String>);

impl Slots {
    fn of(&mut self, v: &str) -> usize {
        match self.0.iter().position(|x| x == v) {
            Some(i) => i,
            None => {
                self.0.push(v.to_string());
                self.0.len() - 1
            }
        }
    }

    fn of_all(&mut self, vars: &[&str]) -> Vec<usize> {
        vars.iter().map(|v| self.of(v)).collect()
    }
}

fn term_slots(t: &Term, slots: &mut Slots) -> Vec<usize> {
    let mut vs = Vec::new();
    t.collect_vars(&mut vs);
    slots.of_all(&vs)
}

fn shapes(body: &[Literal], slots: &mut Slots) -> Vec<Shape> {
    body.iter()
        .map(|lit| match lit {
            Literal::Pos(a) => Shape::Atom(a.args.iter().map(|t| term_slots(t, slots)).collect()),
            Literal::Agg(agg) => Shape::Agg {
                needs: slots.of_all(&agg.outer_vars()),
                binds: slots.of(&agg.result),
            },
            other => Shape::Cond(slots.of_all(&other.vars())),
        })
        .collect()
}

fn bound_pattern(args: &[Vec<usize>], bound: &[bool]) -> BindingPattern {
    BindingPattern::from_positions(
        args.iter()
            .enumerate()
            .filter(|(_, vs)| vs.iter().all(|&v| bound[v]))
            .map(|(i, _)| i),
    )
}

/// Emits atoms in `atom_order` and places every condition right after the
/// first point at which its variables are bound.
fn place(shapes: &[Shape], nslots: usize, initially: &[usize], atom_order: &[usize]) -> JoinPlan {
    let mut bound = vec![false; nslots];
    initially.iter().for_each(|&v| bound[v] = true);
    let mut pending: Vec<usize> = (0..shapes.len()).filter(|&i| !matches!(shapes[i], Shape::Atom(_))).collect();
    let mut steps = Vec::with_capacity(shapes.len());
    let flush = |bound: &mut Vec<bool>, steps: &mut Vec<Step>, pending: &mut Vec<usize>| loop {
        let ready = pending.iter().position(|&i| match &shapes[i] {
            Shape::Cond(needs) | Shape::Agg { needs, .. } => needs.iter().all(|&v| bound[v]),
            Shape::Atom(_) => unreachable!(),
        });
        let Some(k) = ready else { break };
        let i = pending.remove(k);
        if let Shape::Agg { binds, .. } = shapes[i] {
            bound[binds] = true;
        }
        steps.push(Step::Condition { literal: i });
    };
    flush(&mut bound, &mut steps, &mut pending);
    for &i in atom_order {
        let Shape::Atom(args) = &shapes[i] else { unreachable!() };
        steps.push(Step::Atom {
            literal: i,
            pattern: bound_pattern(args, &bound),
        });
        args.iter().flatten().for_each(|&v| bound[v] = true);
        flush(&mut bound, &mut steps, &mut pending);
    }
    // Unsafe leftovers keep their textual order at the end; evaluating them
    // reports the unbound variable.
    steps.extend(pending.into_iter().map(|literal| Step::Condition { literal }));
    JoinPlan { steps }
}

fn greedy(shapes: &[Shape], nslots: usize, initially: &[usize], sizes: &[usize]) -> JoinPlan {
    let mut bound = vec![false; nslots];
    initially.iter().for_each(|&v| bound[v] = true);
    let mut left: Vec<usize> = (0..shapes.len()).filter(|&i| matches!(shapes[i], Shape::Atom(_))).collect();
    let mut order = Vec::with_capacity(left.len());
    let args = |i: usize| match &shapes[i] {
        Shape::Atom(a) => a,
        _ => unreachable!(),
    };
    // Conditions never bind atom variables except aggregate results, which
    // the bound-column count below picks up once their inputs are bound.
    let refresh = |bound: &mut Vec<bool>| loop {
        let mut changed = false;
        for s in shapes {
            if let Shape::Agg { needs, binds } = s {
                if !bound[*binds] && needs.iter().all(|&v| bound[v]) {
                    bound[*binds] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    };
    refresh(&mut bound);
    let mut first = initially.is_empty();
    while !left.is_empty() {
        let pick = if first {
            first = false;
            *left.iter().min_by_key(|&&i| (sizes[i], i)).unwrap()
        } else {
            *left
                .iter()
                .min_by_key(|&&i| (std::cmp::Reverse(bound_pattern(args(i), &bound).count()), sizes[i], i))
                .unwrap()
        };
        left.retain(|&i| i != pick);
        order.push(pick);
        args(pick).iter().flatten().for_each(|&v| bound[v] = true);
        refresh(&mut bound);
    }
    place(shapes, nslots, initially, &order)
}

/// Orders a rule body for evaluation.
///
/// The first atom is the one over the smallest relation; after that the atom
/// with the most bound argument positions goes next, ties broken by smaller
/// relation and then by position in the body. Negations, comparisons and
/// aggregates are placed as early as their variables allow.
pub fn plan(rule: &Rule, sizes: &dyn Fn(&PredKey) -> usize) -> JoinPlan {
    let mut slots = Slots(Vec::new());
    let shapes = shapes(&rule.body, &mut slots);
    let sizes: Vec<usize> = rule
        .body
        .iter()
        .map(|l| match l {
            Literal::Pos(a) => sizes(&a.key()),
            _ => 0,
        })
        .collect();
    greedy(&shapes, slots.0.len(), &[], &sizes)
}

/// A plan that scans positive atoms in the given order, with conditions
/// placed as early as possible. Panics if `atom_order` is not a permutation
/// of the positive atom positions.
pub fn plan_in_order(rule: &Rule, atom_order: &[usize]) -> JoinPlan {
    let mut slots = Slots(Vec::new());
    let shapes = shapes(&rule.body, &mut slots);
    let mut atoms: Vec<usize> = (0..shapes.len()).filter(|&i| matches!(shapes[i], Shape::Atom(_))).collect();
    let mut given = atom_order.to_vec();
    atoms.sort_unstable();
    given.sort_unstable();
    assert_eq!(atoms, given, "atom order must permute the positive atoms");
    place(&shapes, slots.0.len(), &[], atom_order)
}

#[derive(Debug, Clone)]
enum CTerm {
    Const(TermId),
    Var(usize),
    Compound(Box<str>, Box<[CTerm]>),
}

#[derive(Debug, Clone)]
struct CAtom {
    pred: PredId,
    args: Vec<CTerm>,
}

#[derive(Debug, Clone)]
struct CAgg {
    result: usize,
    func: AggFunc,
    local: usize,
    body: Vec<CLit>,
    shapes: Vec<Shape>,
    needs: Vec<usize>,
}

#[derive(Debug, Clone)]
enum CLit {
    Pos(CAtom),
    Neg(CAtom),
    Cmp(CTerm, CmpOp, CTerm),
    Agg(CAgg),
}

/// A rule compiled against one store: predicates resolved to relations,
/// constants interned, variables numbered.
#[derive(Debug, Clone)]
pub struct CompiledRule {
    text: String,
    head: CAtom,
    body: Vec<CLit>,
    shapes: Vec<Shape>,
    nslots: usize,
    /// Predicate of each positive body atom, by literal position.
    atom_preds: Vec<Option<PredId>>,
}

fn compile_term(t: &Term, slots: &mut Slots, terms: &mut Interner) -> Result<CTerm> {
    Ok(match t {
        Term::Var(v) => CTerm::Var(slots.of(v)),
        Term::Compound(f, args) if !t.is_ground() => CTerm::Compound(
            f.as_str().into(),
            args.iter().map(|a| compile_term(a, slots, terms)).collect::<Result<_>>()?,
        ),
        ground => CTerm::Const(terms.intern(ground)?),
    })
}

fn compile_atom(a: &Atom, slots: &mut Slots, store: &mut Store) -> Result<CAtom> {
    let pred = store.pred(&a.key());
    let args = a
        .args
        .iter()
        .map(|t| compile_term(t, slots, &mut store.terms))
        .collect::<Result<_>>()?;
    Ok(CAtom { pred, args })
}

fn compile_body(body: &[Literal], slots: &mut Slots, store: &mut Store) -> Result<Vec<CLit>> {
    body.iter()
        .map(|lit| {
            Ok(match lit {
                Literal::Pos(a) => CLit::Pos(compile_atom(a, slots, store)?),
                Literal::Neg(a) => CLit::Neg(compile_atom(a, slots, store)?),
                Literal::Cmp(l, op, r) => CLit::Cmp(
                    compile_term(l, slots, &mut store.terms)?,
                    *op,
                    compile_term(r, slots, &mut store.terms)?,
                ),
                Literal::Agg(agg) => CLit::Agg(compile_agg(agg, slots, store)?),
            })
        })
        .collect()
}

fn compile_agg(agg: &Aggregate, slots: &mut Slots, store: &mut Store) -> Result<CAgg> {
    let result = slots.of(&agg.result);
    let local = slots.of(&agg.local);
    let needs = slots.of_all(&agg.outer_vars());
    let body = compile_body(&agg.body, slots, store)?;
    let shapes = shapes(&agg.body, slots);
    Ok(CAgg {
        result,
        func: agg.func,
        local,
        body,
        shapes,
        needs,
    })
}

impl CompiledRule {
    pub fn compile(rule: &Rule, store: &mut Store) -> Result<CompiledRule> {
        let mut slots = Slots(Vec::new());
        let text = rule.to_string();
        let body = compile_body(&rule.body, &mut slots, store).map_err(|e| e.in_rule(&text))?;
        let head = compile_atom(&rule.head, &mut slots, store).map_err(|e| e.in_rule(&text))?;
        let shapes = shapes(&rule.body, &mut slots);
        let atom_preds = body
            .iter()
            .map(|l| match l {
                CLit::Pos(a) => Some(a.pred),
                _ => None,
            })
            .collect();
        Ok(CompiledRule {
            text,
            head,
            body,
            shapes,
            nslots: slots.0.len(),
            atom_preds,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn head_pred(&self) -> PredId {
        self.head.pred
    }

    /// Predicate of the positive atom at body position `i`.
    pub fn atom_pred(&self, i: usize) -> Option<PredId> {
        self.atom_preds[i]
    }

    pub fn body_len(&self) -> usize {
        self.body.len()
    }

    /// Greedy plan given the cardinality each positive atom will see.
    pub fn plan(&self, sizes: &[usize]) -> JoinPlan {
        greedy(&self.shapes, self.nslots, &[], sizes)
    }

    /// Builds every index the plan (and the aggregate plans inside it) will
    /// probe.
    pub fn prepare(&self, store: &mut Store, plan: &JoinPlan) {
        for step in &plan.steps {
            match *step {
                Step::Atom { literal, pattern } => {
                    let pred = self.atom_preds[literal].expect("atom step");
                    store.relation_mut(pred).ensure_index(pattern);
                }
                Step::Condition { literal } => {
                    if let CLit::Agg(agg) = &self.body[literal] {
                        prepare_agg(agg, store);
                    }
                }
            }
        }
    }

    /// Enumerates the body under `plan`, reading each positive atom's rows
    /// through `sel` (indexed by body position), and appends one head tuple
    /// per satisfying binding to `out`.
    pub fn eval(
        &self,
        store: &mut Store,
        plan: &JoinPlan,
        sel: &[RowSel],
        holds: &Holds,
        stats: &mut JoinStats,
        out: &mut Vec<Box<[TermId]>>,
    ) -> Result<()> {
        self.prepare(store, plan);
        let (terms, rels) = store.parts();
        let ops = self.ops(plan, sel, rels, terms);
        let mut walk = Walk {
            terms,
            rels,
            holds,
            rule: &self.text,
            stats,
            ignore_negation: false,
        };
        let mut b = vec![None; self.nslots];
        let head = &self.head;
        let text = &self.text;
        walk.run(&ops, &mut b, &mut |terms, b| {
            let tuple = head
                .args
                .iter()
                .map(|t| build(t, terms, b))
                .collect::<Result<Box<[TermId]>>>()
                .map_err(|e| e.in_rule(text))?;
            out.push(tuple);
            Ok(())
        })
    }

    /// Enumerates the body with negative literals ignored, calling `leaf`
    /// with the ground positive and negative body atoms of each binding and
    /// the head tuple. Comparisons and aggregates are evaluated.
    pub(crate) fn instances(
        &self,
        store: &mut Store,
        leaf: &mut dyn FnMut(&mut Interner, Instance) -> Result<()>,
    ) -> Result<()> {
        let sizes: Vec<usize> = self
            .atom_preds
            .iter()
            .map(|p| p.map_or(0, |p| store.relation(p).len()))
            .collect();
        let plan = self.plan(&sizes);
        self.prepare(store, &plan);
        let (terms, rels) = store.parts();
        let sel = vec![RowSel::All; self.body.len()];
        let ops = self.ops(&plan, &sel, rels, terms);
        let never = |_: &[Relation], _: PredId, _: &[TermId]| false;
        let mut stats = JoinStats::default();
        let mut walk = Walk {
            terms,
            rels,
            holds: &never,
            rule: &self.text,
            stats: &mut stats,
            ignore_negation: true,
        };
        let mut b = vec![None; self.nslots];
        walk.run(&ops, &mut b, &mut |terms, b| {
            let ground = |a: &CAtom, terms: &mut Interner| -> Result<(PredId, Box<[TermId]>)> {
                Ok((a.pred, a.args.iter().map(|t| build(t, terms, b)).collect::<Result<_>>()?))
            };
            let head = ground(&self.head, terms)?;
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for lit in &self.body {
                match lit {
                    CLit::Pos(a) => pos.push(ground(a, terms)?),
                    CLit::Neg(a) => neg.push(ground(a, terms)?),
                    _ => {}
                }
            }
            leaf(terms, Instance { head, pos, neg })
        })
    }

    fn ops<'r>(&'r self, plan: &JoinPlan, sel: &[RowSel], rels: &'r [Relation], terms: &Interner) -> Vec<Op<'r>> {
        plan.steps
            .iter()
            .map(|step| match (*step, &self.body[step.literal()]) {
                (Step::Atom { literal, pattern }, CLit::Pos(atom)) => Op::Scan {
                    atom,
                    pattern,
                    sel: sel[literal],
                },
                (Step::Condition { .. }, CLit::Neg(atom)) => Op::Neg(atom),
                (Step::Condition { .. }, CLit::Cmp(l, op, r)) => Op::Cmp(l, *op, r),
                (Step::Condition { .. }, CLit::Agg(agg)) => Op::Agg(agg, agg_ops(agg, rels, terms)),
                (step, _) => panic!("plan step {step:?} does not match the rule body"),
            })
            .collect()
    }
}

fn agg_plan(agg: &CAgg, rels: &[Relation]) -> JoinPlan {
    let sizes: Vec<usize> = agg
        .body
        .iter()
        .map(|l| match l {
            CLit::Pos(a) => rels[a.pred.index()].len(),
            _ => 0,
        })
        .collect();
    let nslots = agg
        .shapes
        .iter()
        .flat_map(|s| match s {
            Shape::Atom(a) => a.iter().flatten().copied().collect::<Vec<_>>(),
            Shape::Cond(v) => v.clone(),
            Shape::Agg { needs, binds } => needs.iter().copied().chain([*binds]).collect(),
        })
        .chain(agg.needs.iter().copied())
        .max()
        .map_or(0, |m| m + 1);
    greedy(&agg.shapes, nslots, &agg.needs, &sizes)
}

fn prepare_agg(agg: &CAgg, store: &mut Store) {
    let plan = agg_plan(agg, store.relations());
    for step in &plan.steps {
        if let (Step::Atom { pattern, .. }, CLit::Pos(a)) = (step, &agg.body[step.literal()]) {
            store.relation_mut(a.pred).ensure_index(*pattern);
        }
    }
}

fn agg_ops<'r>(agg: &'r CAgg, rels: &[Relation], _terms: &Interner) -> Vec<Op<'r>> {
    agg_plan(agg, rels)
        .steps
        .iter()
        .map(|step| match (*step, &agg.body[step.literal()]) {
            (Step::Atom { pattern, .. }, CLit::Pos(atom)) => Op::Scan {
                atom,
                pattern,
                sel: RowSel::All,
            },
            (_, CLit::Cmp(l, op, r)) => Op::Cmp(l, *op, r),
            (step, _) => panic!("aggregate plan step {step:?} does not match its body"),
        })
        .collect()
}

/// Ground atoms of one rule instance, as predicate and tuple.
pub(crate) struct Instance {
    pub head: (PredId, Box<[TermId]>),
    pub pos: Vec<(PredId, Box<[TermId]>)>,
    pub neg: Vec<(PredId, Box<[TermId]>)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JoinStats {
    /// Candidate tuples examined by index probes and scans.
    pub probes: u64,
    /// Complete body matches, each producing one head tuple.
    pub firings: u64,
}

enum Op<'r> {
    Scan {
        atom: &'r CAtom,
        pattern: BindingPattern,
        sel: RowSel,
    },
    Neg(&'r CAtom),
    Cmp(&'r CTerm, CmpOp, &'r CTerm),
    Agg(&'r CAgg, Vec<Op<'r>>),
}

type Bindings = Vec<Option<TermId>>;

fn build(t: &CTerm, terms: &mut Interner, b: &Bindings) -> Result<TermId> {
    match t {
        CTerm::Const(id) => Ok(*id),
        CTerm::Var(v) => Ok(b[*v].expect("variable bound by the plan")),
        CTerm::Compound(f, args) => {
            let ids = args.iter().map(|a| build(a, terms, b)).collect::<Result<Box<[TermId]>>>()?;
            terms.intern_value(Value::Compound(f.clone(), ids))
        }
    }
}

fn find(t: &CTerm, terms: &Interner, b: &Bindings) -> Option<TermId> {
    match t {
        CTerm::Const(id) => Some(*id),
        CTerm::Var(v) => Some(b[*v].expect("variable bound by the plan")),
        CTerm::Compound(f, args) => {
            let ids = args.iter().map(|a| find(a, terms, b)).collect::<Option<Box<[TermId]>>>()?;
            terms.find_value(&Value::Compound(f.clone(), ids))
        }
    }
}

fn unify(t: &CTerm, id: TermId, terms: &Interner, b: &mut Bindings, trail: &mut Vec<usize>) -> bool {
    match t {
        CTerm::Const(c) => *c == id,
        CTerm::Var(v) => match b[*v] {
            Some(x) => x == id,
            None => {
                b[*v] = Some(id);
                trail.push(*v);
                true
            }
        },
        CTerm::Compound(f, args) => match terms.value(id) {
            Value::Compound(g, ids) if g == f && ids.len() == args.len() => {
                let ids = ids.clone();
                args.iter().zip(ids.iter()).all(|(a, &i)| unify(a, i, terms, b, trail))
            }
            _ => false,
        },
    }
}

type Leaf<'a> = dyn FnMut(&mut Interner, &Bindings) -> Result<()> + 'a;

struct Walk<'a> {
    terms: &'a mut Interner,
    rels: &'a [Relation],
    holds: &'a Holds<'a>,
    rule: &'a str,
    stats: &'a mut JoinStats,
    ignore_negation: bool,
}

impl Walk<'_> {
    fn run(&mut self, ops: &[Op<'_>], b: &mut Bindings, leaf: &mut Leaf<'_>) -> Result<()> {
        let Some((op, rest)) = ops.split_first() else {
            self.stats.firings += 1;
            return leaf(self.terms, b);
        };
        match op {
            Op::Scan { atom, pattern, sel } => {
                let rels = self.rels;
                let rel = &rels[atom.pred.index()];
                let mut key = Vec::with_capacity(pattern.count());
                for i in pattern.positions(atom.args.len()) {
                    match find(&atom.args[i], self.terms, b) {
                        Some(id) => key.push(id),
                        None => return Ok(()),
                    }
                }
                let mut trail = Vec::new();
                for row in rel.probe_rows(*pattern, &key, *sel) {
                    self.stats.probes += 1;
                    let tuple = rel.row(row);
                    let ok = atom
                        .args
                        .iter()
                        .zip(tuple)
                        .enumerate()
                        .filter(|(i, _)| !pattern.is_bound(*i))
                        .all(|(_, (t, &id))| unify(t, id, self.terms, b, &mut trail));
                    if ok {
                        self.run(rest, b, leaf)?;
                    }
                    for v in trail.drain(..) {
                        b[v] = None;
                    }
                }
                Ok(())
            }
            Op::Neg(atom) => {
                if !self.ignore_negation {
                    let tuple: Option<Vec<TermId>> = atom.args.iter().map(|t| find(t, self.terms, b)).collect();
                    if let Some(tuple) = tuple {
                        if (self.holds)(self.rels, atom.pred, &tuple) {
                            return Ok(());
                        }
                    }
                }
                self.run(rest, b, leaf)
            }
            Op::Cmp(l, op, r) => {
                let l = build(l, self.terms, b).map_err(|e| e.in_rule(&self.rule))?;
                let r = build(r, self.terms, b).map_err(|e| e.in_rule(&self.rule))?;
                if op.holds(self.terms.compare(l, r)) {
                    self.run(rest, b, leaf)
                } else {
                    Ok(())
                }
            }
            Op::Agg(agg, inner) => {
                let Some(value) = self.aggregate(agg, inner, b)? else {
                    return Ok(());
                };
                match b[agg.result] {
                    Some(x) if x == value => self.run(rest, b, leaf),
                    Some(_) => Ok(()),
                    None => {
                        b[agg.result] = Some(value);
                        let r = self.run(rest, b, leaf);
                        b[agg.result] = None;
                        r
                    }
                }
            }
        }
    }

    fn aggregate(&mut self, agg: &CAgg, inner: &[Op<'_>], b: &mut Bindings) -> Result<Option<TermId>> {
        let mut values: BTreeSet<TermId> = BTreeSet::new();
        let firings = self.stats.firings;
        let local = agg.local;
        self.run(inner, b, &mut |_, b| {
            values.insert(b[local].expect("collected variable bound"));
            Ok(())
        })?;
        self.stats.firings = firings;
        eval_aggregate_values(agg.func, values.into_iter(), self.terms).map_err(|message| Error::Type {
            rule: self.rule.to_string(),
            message,
        })
    }
}

/// Applies an aggregate function to a set of collected values. `None` means
/// the aggregate has no value (min or max of nothing).
fn eval_aggregate_values(
    func: AggFunc,
    values: impl Iterator<Item = TermId>,
    terms: &mut Interner,
) -> std::result::Result<Option<TermId>, String> {
    let values: Vec<TermId> = values.collect();
    if func == AggFunc::Count {
        return Ok(Some(terms.int(values.len() as i64)));
    }
    let ints = values
        .iter()
        .map(|&v| {
            terms
                .as_int(v)
                .ok_or_else(|| format!("{} over the non-integer {}", func.name(), terms.to_term(v)))
        })
        .collect::<std::result::Result<Vec<i64>, String>>()?;
    let result = match func {
        AggFunc::Sum => Some(
            ints.iter()
                .try_fold(0i64, |acc, &x| acc.checked_add(x))
                .ok_or_else(|| "sum overflows a 64-bit integer".to_string())?,
        ),
        AggFunc::Min => ints.iter().copied().min(),
        AggFunc::Max => ints.iter().copied().max(),
        AggFunc::Count => unreachable!(),
    };
    Ok(result.map(|i| terms.int(i)))
}

/// Evaluates `rule` once against the store. With [`DeltaMode::Delta`], the
/// chosen positive atom reads only its relation's delta. Negated atoms fail
/// when `holds` says the atom is true. Returns the distinct head tuples.
pub fn eval_rule(
    store: &mut Store,
    rule: &Rule,
    plan: &JoinPlan,
    delta: DeltaMode,
    holds: &Holds,
) -> Result<BTreeSet<Vec<TermId>>> {
    let compiled = CompiledRule::compile(rule, store)?;
    let mut sel = vec![RowSel::All; rule.body.len()];
    if let DeltaMode::Delta(i) = delta {
        sel[i] = RowSel::Delta;
    }
    let mut out = Vec::new();
    compiled.eval(store, plan, &sel, holds, &mut JoinStats::default(), &mut out)?;
    Ok(out.into_iter().map(Vec::from).collect())
}

/// Decides negated atoms: whether the atom `pred(tuple)` counts as true.
pub type Holds<'a> = dyn Fn(&[Relation], PredId, &[TermId]) -> bool + 'a;

/// Negation oracle reading the store itself: the usual two-valued reading.
pub fn stored(rels: &[Relation], pred: PredId, tuple: &[TermId]) -> bool {
    rels[pred.index()].contains(tuple)
}

/// Evaluates `agg` under the outer variable values in `outer`, returning the
/// value of the result variable, or `None` when the aggregate fails.
pub fn eval_aggregate(store: &mut Store, agg: &Aggregate, outer: &[(&str, Term)]) -> Result<Option<Term>> {
    let mut slots = Slots(Vec::new());
    let compiled = compile_agg(agg, &mut slots, store)?;
    prepare_agg(&compiled, store);
    let mut b: Bindings = vec![None; slots.0.len().max(1)];
    for (v, t) in outer {
        if let Some(i) = slots.0.iter().position(|x| x == v) {
            b[i] = Some(store.terms.intern(t)?);
        }
    }
    let (terms, rels) = store.parts();
    let inner = agg_ops(&compiled, rels, terms);
    let never = |_: &[Relation], _: PredId, _: &[TermId]| false;
    let mut stats = JoinStats::default();
    let mut walk = Walk {
        terms,
        rels,
        holds: &never,
        rule: "aggregate",
        stats: &mut stats,
        ignore_negation: false,
    };
    let value = walk.aggregate(&compiled, &inner, &mut b)?;
    Ok(value.map(|v| store.terms.to_term(v)))
}
