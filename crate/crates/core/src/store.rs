//! Interned ground terms and indexed relations.
//!
//! Every ground term is interned to a [`TermId`]; relations are sets of
//! `TermId` tuples kept in insertion order so that the rows added since the
//! last [`Relation::advance_iteration`] form a contiguous delta. Indexes are
//! keyed by a [`BindingPattern`] and built the first time a pattern is
//! requested.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::syntax::{Atom, PredKey, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interned representation of a ground term. Symbols and quoted strings
/// share the `Text` namespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Text(Box<str>),
    Compound(Box<str>, Box<[TermId]>),
}

pub const DEFAULT_MAX_TERM_DEPTH: u32 = 16;

#[derive(Debug, Clone)]
pub struct Interner {
    values: Vec<Value>,
    depths: Vec<u32>,
    ids: HashMap<Value, TermId>,
    max_depth: u32,
}

impl Default for Interner {
    fn default() -> Self {
        Interner::new(DEFAULT_MAX_TERM_DEPTH)
    }
}

impl Interner {
    pub fn new(max_depth: u32) -> Self {
        Interner {
            values: Vec::new(),
            depths: Vec::new(),
            ids: HashMap::new(),
            max_depth,
        }
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Interns a ground term. Fails when the term is deeper than the
    /// configured maximum, or contains a variable.
    pub fn intern(&mut self, term: &Term) -> Result<TermId> {
        let value = match term {
            Term::Int(i) => Value::Int(*i),
            Term::Sym(s) | Term::Str(s) => Value::Text(s.as_str().into()),
            Term::Var(v) => return Err(Error::Unsupported(format!("cannot store non-ground term containing {v}"))),
            Term::Compound(f, args) => {
                let children = args.iter().map(|a| self.intern(a)).collect::<Result<Vec<_>>>()?;
                Value::Compound(f.as_str().into(), children.into())
            }
        };
        self.intern_value(value)
    }

    pub fn intern_value(&mut self, value: Value) -> Result<TermId> {
        if let Some(&id) = self.ids.get(&value) {
            return Ok(id);
        }
        let depth = match &value {
            Value::Compound(_, args) => 1 + args.iter().map(|a| self.depth(*a)).max().unwrap_or(0),
            _ => 1,
        };
        if depth > self.max_depth {
            return Err(Error::TermDepth {
                depth,
                max: self.max_depth,
                rule: None,
            });
        }
        let id = TermId(u32::try_from(self.values.len()).expect("term table overflow"));
        self.values.push(value.clone());
        self.depths.push(depth);
        self.ids.insert(value, id);
        Ok(id)
    }

    pub fn int(&mut self, i: i64) -> TermId {
        self.intern_value(Value::Int(i)).expect("constants have depth 1")
    }

    pub fn find_value(&self, value: &Value) -> Option<TermId> {
        self.ids.get(value).copied()
    }

    /// Looks up a ground term without interning it.
    pub fn find(&self, term: &Term) -> Option<TermId> {
        let value = match term {
            Term::Int(i) => Value::Int(*i),
            Term::Sym(s) | Term::Str(s) => Value::Text(s.as_str().into()),
            Term::Var(_) => return None,
            Term::Compound(f, args) => {
                let children = args.iter().map(|a| self.find(a)).collect::<Option<Vec<_>>>()?;
                Value::Compound(f.as_str().into(), children.into())
            }
        };
        self.find_value(&value)
    }

    pub fn value(&self, id: TermId) -> &Value {
        &self.values[id.index()]
    }

    pub fn depth(&self, id: TermId) -> u32 {
        self.depths[id.index()]
    }

    pub fn as_int(&self, id: TermId) -> Option<i64> {
        match self.value(id) {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Total order: integers by value, then text, then compounds by functor
    /// and arguments.
    pub fn compare(&self, a: TermId, b: TermId) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        match (self.value(a), self.value(b)) {
            (Value::Int(x), Value::Int(y)) => x.cmp(y),
            (Value::Int(_), _) => Ordering::Less,
            (_, Value::Int(_)) => Ordering::Greater,
            (Value::Text(x), Value::Text(y)) => x.cmp(y),
            (Value::Text(_), _) => Ordering::Less,
            (_, Value::Text(_)) => Ordering::Greater,
            (Value::Compound(f, xs), Value::Compound(g, ys)) => f.cmp(g).then_with(|| self.compare_tuples(xs, ys)),
        }
    }

    pub fn compare_tuples(&self, xs: &[TermId], ys: &[TermId]) -> Ordering {
        for (x, y) in xs.iter().zip(ys) {
            match self.compare(*x, *y) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        xs.len().cmp(&ys.len())
    }

    pub fn to_term(&self, id: TermId) -> Term {
        match self.value(id) {
            Value::Int(i) => Term::Int(*i),
            Value::Text(s) => Term::text(s.to_string()),
            Value::Compound(f, args) => Term::Compound(f.to_string(), args.iter().map(|a| self.to_term(*a)).collect()),
        }
    }

    pub fn to_atom(&self, pred: &PredKey, tuple: &[TermId]) -> Atom {
        Atom::new(pred.name.clone(), tuple.iter().map(|t| self.to_term(*t)).collect())
    }
}

/// Set of bound argument positions, bit `i` for column `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct BindingPattern(u64);

impl BindingPattern {
    pub const FREE: BindingPattern = BindingPattern(0);

    pub fn from_positions(positions: impl IntoIterator<Item = usize>) -> Self {
        BindingPattern(positions.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn all(arity: usize) -> Self {
        BindingPattern::from_positions(0..arity)
    }

    pub fn is_bound(self, column: usize) -> bool {
        self.0 & (1 << column) != 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_free(self) -> bool {
        self.0 == 0
    }

    pub fn positions(self, arity: usize) -> impl Iterator<Item = usize> {
        (0..arity).filter(move |&i| self.is_bound(i))
    }

    pub fn project(self, tuple: &[TermId]) -> Box<[TermId]> {
        self.positions(tuple.len()).map(|i| tuple[i]).collect()
    }
}

impl fmt::Display for BindingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

#[derive(Debug, Clone, Default)]
struct Index {
    map: HashMap<Box<[TermId]>, Vec<u32>>,
}

/// A deduplicated set of tuples with delta tracking and lazy indexes.
///
/// Rows are `[0, stable_end)` stable, `[stable_end, delta_end)` the current
/// delta, and `[delta_end, len)` pending until the next advance.
#[derive(Debug, Clone)]
pub struct Relation {
    key: PredKey,
    rows: Vec<TermId>,
    members: HashMap<Box<[TermId]>, u32>,
    stable_end: usize,
    delta_end: usize,
    indexes: HashMap<BindingPattern, Index>,
}

impl Relation {
    pub fn new(key: PredKey) -> Self {
        Relation {
            key,
            rows: Vec::new(),
            members: HashMap::new(),
            stable_end: 0,
            delta_end: 0,
            indexes: HashMap::new(),
        }
    }

    pub fn key(&self) -> &PredKey {
        &self.key
    }

    pub fn arity(&self) -> usize {
        self.key.arity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn row(&self, i: u32) -> &[TermId] {
        let a = self.arity();
        let start = i as usize * a;
        &self.rows[start..start + a]
    }

    pub fn contains(&self, tuple: &[TermId]) -> bool {
        self.members.contains_key(tuple)
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[TermId]> {
        (0..self.len() as u32).map(move |i| self.row(i))
    }

    pub fn delta(&self) -> impl Iterator<Item = &[TermId]> {
        self.delta_rows().map(move |i| self.row(i))
    }

    pub fn delta_len(&self) -> usize {
        self.delta_end - self.stable_end
    }

    fn delta_rows(&self) -> Range<u32> {
        self.stable_end as u32..self.delta_end as u32
    }

    /// Rows selected by `sel`.
    pub fn rows(&self, sel: RowSel) -> Range<u32> {
        match sel {
            RowSel::All => 0..self.len() as u32,
            RowSel::Stable => 0..self.stable_end as u32,
            RowSel::Delta => self.delta_rows(),
        }
    }

    /// Adds a tuple; returns whether it was new. New tuples stay pending
    /// until the next [`advance_iteration`](Self::advance_iteration).
    pub fn insert(&mut self, tuple: &[TermId]) -> bool {
        assert_eq!(tuple.len(), self.arity(), "arity mismatch inserting into {}", self.key);
        if self.members.contains_key(tuple) {
            return false;
        }
        let row = self.members.len() as u32;
        self.members.insert(tuple.into(), row);
        self.rows.extend_from_slice(tuple);
        for (pattern, index) in self.indexes.iter_mut() {
            index.map.entry(pattern.project(tuple)).or_default().push(row);
        }
        true
    }

    /// Pending rows become the delta; the previous delta joins the stable
    /// part.
    pub fn advance_iteration(&mut self) {
        self.stable_end = self.delta_end;
        self.delta_end = self.len();
    }

    pub fn has_index(&self, pattern: BindingPattern) -> bool {
        pattern.is_free() || pattern == BindingPattern::all(self.arity()) || self.indexes.contains_key(&pattern)
    }

    pub fn ensure_index(&mut self, pattern: BindingPattern) {
        if self.has_index(pattern) {
            return;
        }
        let mut index = Index::default();
        for i in 0..self.len() as u32 {
            index.map.entry(pattern.project(self.row(i))).or_default().push(i);
        }
        self.indexes.insert(pattern, index);
    }

    /// Tuples (or delta tuples) whose bound columns equal `key`, building
    /// the index for `pattern` if needed.
    pub fn lookup(&mut self, pattern: BindingPattern, key: &[TermId], use_delta: bool) -> Vec<&[TermId]> {
        self.ensure_index(pattern);
        let rows: Vec<u32> = self.probe(pattern, key, use_delta).collect();
        rows.into_iter().map(|i| self.row(i)).collect()
    }

    /// Row ids matching `key` under `pattern`. The index for `pattern` must
    /// already exist (see [`ensure_index`](Self::ensure_index)).
    pub fn probe(&self, pattern: BindingPattern, key: &[TermId], use_delta: bool) -> Probe<'_> {
        self.probe_rows(pattern, key, if use_delta { RowSel::Delta } else { RowSel::All })
    }

    pub fn probe_rows(&self, pattern: BindingPattern, key: &[TermId], sel: RowSel) -> Probe<'_> {
        debug_assert_eq!(key.len(), pattern.count());
        let range = self.rows(sel);
        if pattern.is_free() {
            return Probe::Range(range);
        }
        if pattern.count() == self.arity() {
            return match self.members.get(key) {
                Some(&row) if range.contains(&row) => Probe::One(Some(row)),
                _ => Probe::One(None),
            };
        }
        let index = self
            .indexes
            .get(&pattern)
            .unwrap_or_else(|| panic!("no index {pattern} on {}", self.key));
        match index.map.get(key) {
            None => Probe::One(None),
            Some(rows) => {
                let lo = rows.partition_point(|&r| r < range.start);
                let hi = rows.partition_point(|&r| r < range.end);
                Probe::Rows(rows[lo..hi].iter())
            }
        }
    }

    /// Total number of row references across all built indexes, per index.
    pub fn index_sizes(&self) -> Vec<(BindingPattern, usize)> {
        let mut out: Vec<_> = self
            .indexes
            .iter()
            .map(|(p, idx)| (*p, idx.map.values().map(Vec::len).sum()))
            .collect();
        out.sort();
        out
    }
}

/// Which rows of a relation a probe sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowSel {
    All,
    /// Rows that were already present before the current delta.
    Stable,
    Delta,
}

/// Iterator over matching row ids.
pub enum Probe<'a> {
    Range(Range<u32>),
    Rows(std::slice::Iter<'a, u32>),
    One(Option<u32>),
}

impl Iterator for Probe<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        match self {
            Probe::Range(r) => r.next(),
            Probe::Rows(it) => it.next().copied(),
            Probe::One(o) => o.take(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredId(u32);

impl PredId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// All relations of one evaluation run plus their term table.
#[derive(Debug, Clone, Default)]
pub struct Store {
    pub terms: Interner,
    relations: Vec<Relation>,
    by_key: HashMap<PredKey, PredId>,
}

impl Store {
    pub fn new(max_term_depth: u32) -> Self {
        Store {
            terms: Interner::new(max_term_depth),
            relations: Vec::new(),
            by_key: HashMap::new(),
        }
    }

    /// Registers a predicate if needed and returns its id.
    pub fn pred(&mut self, key: &PredKey) -> PredId {
        if let Some(&id) = self.by_key.get(key) {
            return id;
        }
        let id = PredId(self.relations.len() as u32);
        self.relations.push(Relation::new(key.clone()));
        self.by_key.insert(key.clone(), id);
        id
    }

    pub fn pred_id(&self, key: &PredKey) -> Option<PredId> {
        self.by_key.get(key).copied()
    }

    pub fn relation(&self, id: PredId) -> &Relation {
        &self.relations[id.index()]
    }

    pub fn relation_mut(&mut self, id: PredId) -> &mut Relation {
        &mut self.relations[id.index()]
    }

    pub fn relation_by_key(&self, key: &PredKey) -> Option<&Relation> {
        self.pred_id(key).map(|id| self.relation(id))
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    /// Split borrow for evaluation: terms may grow while relations are read.
    pub fn parts(&mut self) -> (&mut Interner, &[Relation]) {
        (&mut self.terms, &self.relations)
    }

    pub fn insert_atom(&mut self, atom: &Atom) -> Result<bool> {
        let id = self.pred(&atom.key());
        let tuple = atom.args.iter().map(|t| self.terms.intern(t)).collect::<Result<Vec<_>>>()?;
        Ok(self.relation_mut(id).insert(&tuple))
    }

    /// Tuples of one relation sorted by the term order.
    pub fn sorted_tuples(&self, id: PredId) -> Vec<&[TermId]> {
        let mut rows: Vec<_> = self.relation(id).tuples().collect();
        rows.sort_by(|a, b| self.terms.compare_tuples(a, b));
        rows
    }

    /// Every stored fact as an atom, sorted by predicate then term order.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut ids: Vec<PredId> = (0..self.relations.len() as u32).map(PredId).collect();
        ids.sort_by(|a, b| self.relation(*a).key().cmp(self.relation(*b).key()));
        let mut out = Vec::new();
        for id in ids {
            let key = self.relation(id).key();
            for tuple in self.sorted_tuples(id) {
                out.push(self.terms.to_atom(key, tuple));
            }
        }
        out
    }

    pub fn contains_atom(&self, atom: &Atom) -> bool {
        let Some(rel) = self.relation_by_key(&atom.key()) else {
            return false;
        };
        let Some(tuple) = atom.args.iter().map(|t| self.terms.find(t)).collect::<Option<Vec<_>>>() else {
            return false;
        };
        rel.contains(&tuple)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(s: &str) -> Term {
        Term::sym(s)
    }

    #[test]
    fn interning_is_idempotent() {
        let mut t = Interner::default();
        let a = t.intern(&sym("amy")).unwrap();
        assert_eq!(t.intern(&sym("amy")).unwrap(), a);
        assert_eq!(t.intern(&Term::Str("amy".into())).unwrap(), a, "strings and symbols share a namespace");
        assert_ne!(t.intern(&Term::Int(1)).unwrap(), a);
    }

    #[test]
    fn depth_recorded() {
        let mut t = Interner::default();
        let succ = Term::Compound("succ".into(), vec![Term::Int(1)]);
        let id = t.intern(&succ).unwrap();
        assert_eq!(t.depth(id), 2);
        let cert = crate::syntax::parse("x(cert('Amy', birth('2000-02-28','Rome'))).").unwrap().facts[0].args[0].clone();
        let id = t.intern(&cert).unwrap();
        assert_eq!(t.depth(id), 3);
        assert_eq!(t.to_term(id), cert);
    }

    #[test]
    fn depth_bound() {
        let mut t = Interner::new(2);
        let mut term = Term::Int(0);
        term = Term::Compound("s".into(), vec![term]);
        assert!(t.intern(&term).is_ok());
        term = Term::Compound("s".into(), vec![term]);
        assert!(matches!(t.intern(&term), Err(Error::TermDepth { depth: 3, max: 2, .. })));
    }

    fn ids(t: &mut Interner, names: &[&str]) -> Vec<TermId> {
        names.iter().map(|n| t.intern(&sym(n)).unwrap()).collect()
    }

    #[test]
    fn insert_is_set_semantics() {
        let mut t = Interner::default();
        let mut r = Relation::new(PredKey::new("is_father", 2));
        let dan_bob = ids(&mut t, &["dan", "bob"]);
        let bob_amy = ids(&mut t, &["bob", "amy"]);
        assert!(r.insert(&dan_bob));
        assert!(!r.insert(&dan_bob));
        assert!(r.insert(&bob_amy));
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn lookup_by_first_column() {
        let mut t = Interner::default();
        let mut r = Relation::new(PredKey::new("is_parent", 2));
        r.insert(&ids(&mut t, &["bob", "amy"]));
        r.insert(&ids(&mut t, &["bob", "ann"]));
        r.insert(&ids(&mut t, &["eve", "amy"]));
        let bob = ids(&mut t, &["bob"]);
        let p = BindingPattern::from_positions([0]);
        let hits = r.lookup(p, &bob, false);
        assert_eq!(hits.len(), 2);
        let all = BindingPattern::all(2);
        assert_eq!(r.lookup(all, &ids(&mut t, &["eve", "amy"]), false).len(), 1);
        // index kept current after later inserts
        r.insert(&ids(&mut t, &["bob", "cal"]));
        assert_eq!(r.lookup(p, &bob, false).len(), 3);
    }

    #[test]
    fn lookup_on_empty() {
        let mut t = Interner::default();
        let mut r = Relation::new(PredKey::new("e", 2));
        let k = ids(&mut t, &["x"]);
        assert!(r.lookup(BindingPattern::from_positions([1]), &k, false).is_empty());
    }

    #[test]
    fn delta_tracking() {
        let mut t = Interner::default();
        let mut r = Relation::new(PredKey::new("p", 1));
        let a = ids(&mut t, &["a"]);
        let b = ids(&mut t, &["b"]);
        r.insert(&a);
        r.advance_iteration();
        assert_eq!(r.delta().collect::<Vec<_>>(), vec![&a[..]]);
        r.insert(&b);
        r.advance_iteration();
        assert_eq!(r.delta().collect::<Vec<_>>(), vec![&b[..]]);
        assert_eq!(r.len(), 2);
        r.advance_iteration();
        assert_eq!(r.delta_len(), 0);
        let p = BindingPattern::all(1);
        assert!(r.lookup(p, &a, true).is_empty());
        assert_eq!(r.lookup(p, &a, false).len(), 1);
    }

    #[test]
    fn delta_lookup_through_index() {
        let mut t = Interner::default();
        let mut r = Relation::new(PredKey::new("e", 2));
        let p = BindingPattern::from_positions([0]);
        r.ensure_index(p);
        r.insert(&ids(&mut t, &["a", "b"]));
        r.advance_iteration();
        r.insert(&ids(&mut t, &["a", "c"]));
        r.advance_iteration();
        let a = ids(&mut t, &["a"]);
        let delta = r.lookup(p, &a, true);
        assert_eq!(delta, vec![&ids(&mut t, &["a", "c"])[..]]);
    }

    proptest! {
        #[test]
        fn lookup_matches_scan(
            tuples in prop::collection::vec(prop::collection::vec(0i64..4, 3), 0..40),
            mask in 0u64..8,
            key in prop::collection::vec(0i64..4, 3),
            advance_at in 0usize..40,
        ) {
            let mut t = Interner::default();
            let mut r = Relation::new(PredKey::new("r", 3));
            let pattern = BindingPattern(mask);
            // build one index up front and one lazily
            r.ensure_index(BindingPattern::from_positions([1]));
            for (i, tup) in tuples.iter().enumerate() {
                if i == advance_at { r.advance_iteration(); }
                let tup: Vec<_> = tup.iter().map(|v| t.int(*v)).collect();
                r.insert(&tup);
            }
            r.advance_iteration();
            let key: Vec<TermId> = pattern.positions(3).map(|i| t.int(key[i])).collect();
            let matches = |row: &[TermId]| pattern.positions(3).zip(&key).all(|(i, k)| row[i] == *k);
            let mut expect: Vec<Vec<TermId>> = r.tuples().filter(|row| matches(row)).map(<[_]>::to_vec).collect();
            let mut expect_delta: Vec<Vec<TermId>> = r.delta().filter(|row| matches(row)).map(<[_]>::to_vec).collect();
            let mut got: Vec<Vec<TermId>> = r.lookup(pattern, &key, false).into_iter().map(<[_]>::to_vec).collect();
            let mut got_delta: Vec<Vec<TermId>> = r.lookup(pattern, &key, true).into_iter().map(<[_]>::to_vec).collect();
            expect.sort(); got.sort(); expect_delta.sort(); got_delta.sort();
            prop_assert_eq!(got, expect);
            prop_assert_eq!(got_delta, expect_delta);
            for (_, size) in r.index_sizes() {
                prop_assert_eq!(size, r.len());
            }
        }

        #[test]
        fn term_order_is_total(xs in prop::collection::vec(arb_term(), 3)) {
            let mut t = Interner::default();
            let ids: Vec<TermId> = xs.iter().map(|x| t.intern(x).unwrap()).collect();
            let (a, b, c) = (ids[0], ids[1], ids[2]);
            prop_assert_eq!(t.compare(a, b), t.compare(b, a).reverse());
            prop_assert_eq!(t.compare(a, b).is_eq(), a == b);
            if t.compare(a, b).is_le() && t.compare(b, c).is_le() {
                prop_assert!(t.compare(a, c).is_le());
            }
            // agrees with the order on source terms
            prop_assert_eq!(t.compare(a, b), xs[0].total_cmp(&xs[1]));
        }
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            (-3i64..3).prop_map(Term::Int),
            prop::sample::select(vec!["a", "b", "Zed", "a b"]).prop_map(Term::text),
        ];
        leaf.prop_recursive(2, 8, 2, |inner| {
            (prop::sample::select(vec!["f", "g"]), prop::collection::vec(inner, 1..3))
                .prop_map(|(f, args)| Term::Compound(f.to_string(), args))
        })
    }
}
