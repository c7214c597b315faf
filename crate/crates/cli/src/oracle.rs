//! Independent reference computations for corpus fixtures. None of these
//! touch the engine beyond reading facts out of a parsed program.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use trilogic_core::syntax::{Atom, Program, Term};
use trilogic_core::wfs::GroundProgram;

/// Whether `ground` is an instance of `pattern`, binding repeated
/// variables consistently.
pub fn matches(pattern: &Atom, ground: &Atom) -> bool {
    if pattern.pred != ground.pred || pattern.args.len() != ground.args.len() {
        return false;
    }
    let mut env: BTreeMap<&str, &Term> = BTreeMap::new();
    pattern.args.iter().zip(&ground.args).all(|(p, g)| match p {
        Term::Var(v) => *env.entry(v.as_str()).or_insert(g) == g,
        other => other == g,
    })
}

fn facts<'a>(program: &'a Program, pred: &'a str) -> impl Iterator<Item = &'a [Term]> + 'a {
    program.facts.iter().filter(move |f| f.pred == pred).map(|f| f.args.as_slice())
}

fn pairs(program: &Program, pred: &str) -> Vec<(Term, Term)> {
    facts(program, pred).map(|a| (a[0].clone(), a[1].clone())).collect()
}

fn select(atoms: impl IntoIterator<Item = Atom>, pattern: &Atom) -> BTreeSet<String> {
    atoms.into_iter().filter(|a| matches(pattern, a)).map(|a| a.to_string()).collect()
}

/// Transitive closure of the binary `edge` facts by search from every node,
/// reported as `closure(X,Y)` atoms that match `query`.
pub fn reachability(program: &Program, edge: &str, closure: &str, query: &Atom) -> BTreeSet<String> {
    let mut succ: HashMap<Term, Vec<Term>> = HashMap::new();
    for (a, b) in pairs(program, edge) {
        succ.entry(a).or_default().push(b);
    }
    let mut out = Vec::new();
    for start in succ.keys() {
        let mut seen = HashSet::new();
        let mut stack = vec![start.clone()];
        while let Some(n) = stack.pop() {
            for m in succ.get(&n).into_iter().flatten() {
                if seen.insert(m.clone()) {
                    stack.push(m.clone());
                }
            }
        }
        out.extend(seen.into_iter().map(|y| Atom::new(closure, vec![start.clone(), y])));
    }
    select(out, query)
}

/// `check_access(S,Op,Obj)` by nested loops over sessions, their activated
/// roles, user assignments and permission assignments.
pub fn rbac_check_access(program: &Program, query: &Atom) -> BTreeSet<String> {
    let mut out = Vec::new();
    for su in facts(program, "session_user") {
        for sr in facts(program, "session_role") {
            for ua in facts(program, "ua") {
                for pa in facts(program, "pa") {
                    if su[0] == sr[0] && ua[0] == su[1] && ua[1] == sr[1] && pa[0] == sr[1] {
                        out.push(Atom::new("check_access", vec![su[0].clone(), pa[1].clone(), pa[2].clone()]));
                    }
                }
            }
        }
    }
    select(out, query)
}

/// Points-to sets by applying the four statement kinds to the current sets
/// until nothing changes.
pub fn andersen(program: &Program, query: &Atom) -> BTreeSet<String> {
    let mut pts: HashMap<Term, HashSet<Term>> = HashMap::new();
    for (p, a) in pairs(program, "addr") {
        pts.entry(p).or_default().insert(a);
    }
    let copy = pairs(program, "copy");
    let load = pairs(program, "load");
    let store = pairs(program, "store");
    let none = HashSet::new();
    loop {
        let of = |v: &Term| pts.get(v).unwrap_or(&none);
        let mut new = Vec::new();
        for (p, q) in &copy {
            new.extend(of(q).iter().map(|a| (p.clone(), a.clone())));
        }
        for (p, q) in &load {
            for r in of(q) {
                new.extend(of(r).iter().map(|a| (p.clone(), a.clone())));
            }
        }
        for (p, q) in &store {
            for r in of(p) {
                new.extend(of(q).iter().map(|a| (r.clone(), a.clone())));
            }
        }
        let mut changed = false;
        for (p, a) in new {
            changed |= pts.entry(p).or_default().insert(a);
        }
        if !changed {
            break;
        }
    }
    let atoms = pts.into_iter().flat_map(|(p, set)| set.into_iter().map(move |a| Atom::new("pts", vec![p.clone(), a])));
    select(atoms, query)
}

/// Every placement of `n` non-attacking queens as its `q(Row,Col)` atoms,
/// 1-based, found by extending permutations row by row.
pub fn queens(n: usize) -> BTreeSet<BTreeSet<String>> {
    fn extend(n: usize, cols: &mut Vec<usize>, out: &mut BTreeSet<BTreeSet<String>>) {
        let row = cols.len();
        if row == n {
            out.insert(cols.iter().enumerate().map(|(r, c)| format!("q({},{})", r + 1, c + 1)).collect());
            return;
        }
        for c in 0..n {
            let free = cols.iter().enumerate().all(|(r, &pc)| pc != c && row - r != c.abs_diff(pc));
            if free {
                cols.push(c);
                extend(n, cols, out);
                cols.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    extend(n, &mut Vec::new(), &mut out);
    out
}

/// Stable models by checking every subset of the ground atoms against the
/// least model of its reduct.
pub fn stable_enumeration(g: &GroundProgram) -> BTreeSet<BTreeSet<String>> {
    let n = g.atom_count();
    assert!(n <= 20, "{n} ground atoms is too many to enumerate");
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        let inside = |a: usize| mask & (1 << a) != 0;
        let mut least = vec![false; n];
        let mut changed = true;
        while changed {
            changed = false;
            for r in g.rules() {
                let applies = !least[r.head] && r.neg.iter().all(|&a| !inside(a)) && r.pos.iter().all(|&a| least[a]);
                if applies {
                    least[r.head] = true;
                    changed = true;
                }
            }
        }
        if (0..n).all(|a| least[a] == inside(a)) {
            out.insert((0..n).filter(|&a| inside(a)).map(|a| g.atoms()[a].to_string()).collect());
        }
    }
    out
}
