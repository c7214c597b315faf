//! Source language: terms, literals, rules, and programs.
//!
//! Programs are written in a Prolog-like ASCII notation:
//!
//! ```text
//! is_parent(X,Y) :- is_father(X,Y).
//! is_mother(X,Y) :- is_parent(X,Y), not male(X).
//! n_children(P,N) :- person(P), N = count { C : is_parent(P,C) }.
//! is_ancestor(X,Y) :- is_parent+(X,Y).
//! ?- is_ancestor(bob,Y).
//! ```
//!
//! Names starting with an upper-case letter are variables; `%` starts a line
//! comment. [`parse`] builds a [`Program`], [`desugar_paths`] expands `q+`
//! path atoms into recursive rules, and [`validate_safety`] checks range
//! restriction.

mod desugar;
mod lexer;
mod parser;
mod safety;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

pub use crate::error::Pos;
pub use desugar::{desugar_paths, desugar_query};
pub(crate) use safety::check_rule;
pub use parser::{parse, parse_literals};
pub use safety::validate_safety;

/// A predicate is identified by its name together with its arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredKey {
    pub name: String,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        PredKey {
            name: name.into(),
            arity,
        }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Int(i64),
    /// Lower-case identifier, or a quoted string normalized to one.
    Sym(String),
    /// Quoted text that is not shaped like a lower-case identifier.
    Str(String),
    Var(String),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn sym(s: impl Into<String>) -> Term {
        Term::Sym(s.into())
    }

    pub fn var(s: impl Into<String>) -> Term {
        Term::Var(s.into())
    }

    /// Builds a text constant, choosing the symbol kind when the text is
    /// shaped like a lower-case identifier.
    pub fn text(s: impl Into<String>) -> Term {
        let s = s.into();
        if is_symbol_shaped(&s) {
            Term::Sym(s)
        } else {
            Term::Str(s)
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            Term::Compound(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 1,
        }
    }

    pub fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v)
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    pub fn has_compound(&self) -> bool {
        matches!(self, Term::Compound(..))
    }

    /// The canonical order on ground terms: integers by value, then symbols
    /// and strings by text, then compounds by functor, then arguments.
    /// Variables sort before everything and compare by name; they never occur
    /// in stored data.
    pub fn total_cmp(&self, other: &Term) -> Ordering {
        fn rank(t: &Term) -> u8 {
            match t {
                Term::Var(_) => 0,
                Term::Int(_) => 1,
                Term::Sym(_) | Term::Str(_) => 2,
                Term::Compound(..) => 3,
            }
        }
        match (self, other) {
            (Term::Int(a), Term::Int(b)) => a.cmp(b),
            (Term::Sym(a) | Term::Str(a), Term::Sym(b) | Term::Str(b)) => a.cmp(b),
            (Term::Var(a), Term::Var(b)) => a.cmp(b),
            (Term::Compound(f, xs), Term::Compound(g, ys)) => f.cmp(g).then_with(|| {
                for (x, y) in xs.iter().zip(ys) {
                    match x.total_cmp(y) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
                xs.len().cmp(&ys.len())
            }),
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

pub(crate) fn is_symbol_shaped(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(i) => write!(f, "{i}"),
            Term::Sym(s) | Term::Str(s) => {
                if is_symbol_shaped(s) {
                    f.write_str(s)
                } else {
                    f.write_str("'")?;
                    for c in s.chars() {
                        match c {
                            '\'' => f.write_str("\\'")?,
                            '\\' => f.write_str("\\\\")?,
                            '\n' => f.write_str("\\n")?,
                            c => write!(f, "{c}")?,
                        }
                    }
                    f.write_str("'")
                }
            }
            Term::Var(v) => f.write_str(v),
            Term::Compound(functor, args) => {
                write!(f, "{functor}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

/// A predicate applied to arguments. `closure` marks a `q+` path atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: String,
    pub closure: bool,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            pred: pred.into(),
            closure: false,
            args,
        }
    }

    pub fn key(&self) -> PredKey {
        PredKey::new(self.pred.clone(), self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        self.args.iter().for_each(|t| t.collect_vars(out));
    }

    /// Ordering used for rendering: predicate name, arity, then arguments
    /// under the term order.
    pub fn total_cmp(&self, other: &Atom) -> Ordering {
        self.pred
            .cmp(&other.pred)
            .then(self.args.len().cmp(&other.args.len()))
            .then_with(|| {
                self.args
                    .iter()
                    .zip(&other.args)
                    .map(|(a, b)| a.total_cmp(b))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if self.closure {
            f.write_str("+")?;
        }
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_list(f, &self.args)?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord.is_eq(),
            CmpOp::Ne => ord.is_ne(),
            CmpOp::Lt => ord.is_lt(),
            CmpOp::Le => ord.is_le(),
            CmpOp::Gt => ord.is_gt(),
            CmpOp::Ge => ord.is_ge(),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Count,
    Sum,
    Min,
    Max,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Sum => "sum",
            AggFunc::Min => "min",
            AggFunc::Max => "max",
        }
    }

    pub(crate) fn from_name(s: &str) -> Option<AggFunc> {
        Some(match s {
            "count" => AggFunc::Count,
            "sum" => AggFunc::Sum,
            "min" => AggFunc::Min,
            "max" => AggFunc::Max,
            _ => return None,
        })
    }
}

/// `result = func { local : body }`. The body holds only positive atoms and
/// comparisons; variables other than `local` are bound by the enclosing rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Aggregate {
    pub result: String,
    pub func: AggFunc,
    pub local: String,
    pub body: Vec<Literal>,
}

impl Aggregate {
    /// Inner-body variables that must come from the enclosing rule.
    pub fn outer_vars(&self) -> Vec<&str> {
        let mut vars = Vec::new();
        for lit in &self.body {
            lit.collect_vars(&mut vars);
        }
        vars.retain(|v| *v != self.local);
        vars
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp(Term, CmpOp, Term),
    Agg(Aggregate),
}

impl Literal {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            _ => None,
        }
    }

    /// All variables mentioned, including those inside aggregate bodies.
    pub fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.collect_vars(out),
            Literal::Cmp(l, _, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Literal::Agg(agg) => {
                if !out.contains(&agg.result.as_str()) {
                    out.push(&agg.result);
                }
                if !out.contains(&agg.local.as_str()) {
                    out.push(&agg.local);
                }
                agg.body.iter().for_each(|l| l.collect_vars(out));
            }
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Cmp(l, op, r) => write!(f, "{l} {} {r}", op.symbol()),
            Literal::Agg(agg) => {
                write!(f, "{} = {} {{ {} : ", agg.result, agg.func.name(), agg.local)?;
                write_body(f, &agg.body)?;
                f.write_str(" }")
            }
        }
    }
}

fn write_body(f: &mut fmt::Formatter<'_>, body: &[Literal]) -> fmt::Result {
    for (i, lit) in body.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{lit}")?;
    }
    Ok(())
}

/// `head :- body.` Equality ignores the source position.
#[derive(Debug, Clone, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
    pub pos: Pos,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Literal>) -> Self {
        Rule {
            head,
            body,
            pos: Pos::default(),
        }
    }

    /// Predicates referenced anywhere in the body, with aggregate bodies.
    pub fn body_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().flat_map(|lit| -> Box<dyn Iterator<Item = &Atom>> {
            match lit {
                Literal::Pos(a) | Literal::Neg(a) => Box::new(std::iter::once(a)),
                Literal::Agg(agg) => Box::new(agg.body.iter().filter_map(Literal::atom)),
                Literal::Cmp(..) => Box::new(std::iter::empty()),
            }
        })
    }

    pub fn has_negation(&self) -> bool {
        self.body.iter().any(|l| matches!(l, Literal::Neg(_)))
    }

    pub fn has_aggregate(&self) -> bool {
        self.body.iter().any(|l| matches!(l, Literal::Agg(_)))
    }

    /// Whether any compound term in the rule contains a variable.
    pub fn has_function_symbols(&self) -> bool {
        let nonground_compound = |t: &Term| t.has_compound() && !t.is_ground();
        let atom_has = |a: &Atom| a.args.iter().any(nonground_compound);
        atom_has(&self.head)
            || self.body.iter().any(|l| match l {
                Literal::Pos(a) | Literal::Neg(a) => atom_has(a),
                Literal::Cmp(l, _, r) => nonground_compound(l) || nonground_compound(r),
                Literal::Agg(agg) => agg.body.iter().any(|l| match l {
                    Literal::Pos(a) => atom_has(a),
                    Literal::Cmp(l, _, r) => nonground_compound(l) || nonground_compound(r),
                    _ => false,
                }),
            })
    }
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.body == other.body
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            write_body(f, &self.body)?;
        }
        f.write_str(".")
    }
}

/// `?- body.` Equality ignores the source position.
#[derive(Debug, Clone, Eq)]
pub struct Query {
    pub body: Vec<Literal>,
    pub pos: Pos,
}

impl Query {
    pub fn new(body: Vec<Literal>) -> Self {
        Query {
            body,
            pos: Pos::default(),
        }
    }

    /// Answer variables in order of first appearance. Variables local to an
    /// aggregate body are excluded; the aggregate result is included.
    pub fn vars(&self) -> Vec<&str> {
        answer_vars(&self.body)
    }
}

impl PartialEq for Query {
    fn eq(&self, other: &Self) -> bool {
        self.body == other.body
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("?- ")?;
        write_body(f, &self.body)?;
        f.write_str(".")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    /// Ground facts, in source order; duplicates are allowed here and
    /// collapse when loaded into a store.
    pub facts: Vec<Atom>,
    pub queries: Vec<Query>,
}

impl Program {
    /// Every predicate mentioned anywhere, including queries.
    pub fn predicates(&self) -> BTreeSet<PredKey> {
        let mut out = BTreeSet::new();
        for fact in &self.facts {
            out.insert(fact.key());
        }
        for rule in &self.rules {
            out.insert(rule.head.key());
            out.extend(rule.body_atoms().map(Atom::key));
        }
        for q in &self.queries {
            for lit in &q.body {
                match lit {
                    Literal::Pos(a) | Literal::Neg(a) => {
                        out.insert(a.key());
                    }
                    Literal::Agg(agg) => out.extend(agg.body.iter().filter_map(Literal::atom).map(Atom::key)),
                    Literal::Cmp(..) => {}
                }
            }
        }
        out
    }

    /// Predicates mentioned by rules and facts (queries excluded).
    pub fn defined_or_used(&self) -> BTreeSet<PredKey> {
        let mut out = BTreeSet::new();
        for fact in &self.facts {
            out.insert(fact.key());
        }
        for rule in &self.rules {
            out.insert(rule.head.key());
            out.extend(rule.body_atoms().map(Atom::key));
        }
        out
    }

    pub fn has_aggregates(&self) -> bool {
        self.rules.iter().any(Rule::has_aggregate)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in &self.facts {
            writeln!(f, "{fact}.")?;
        }
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        for q in &self.queries {
            writeln!(f, "{q}")?;
        }
        Ok(())
    }
}

pub(crate) fn answer_vars(body: &[Literal]) -> Vec<&str> {
    let mut out = Vec::new();
    for lit in body {
        match lit {
            Literal::Agg(agg) => {
                if !out.contains(&agg.result.as_str()) {
                    out.push(agg.result.as_str());
                }
            }
            other => other.collect_vars(&mut out),
        }
    }
    out
}

/// Parses, desugars, and safety-checks in one step.
pub fn load(source: &str) -> crate::Result<Program> {
    let program = parse(source)?;
    let program = desugar_paths(program)?;
    validate_safety(program)
}
