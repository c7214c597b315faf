//! Program generators for benchmarks and fixtures.

use std::fmt::Write;

/// The plain n-queens encoding: one guess per cell, a constraint per kind
/// of attack, and `f :- bad, not f.` to kill every guess that breaks one.
///
/// `diff(A,B,D)` holds for `A > B` with `D = A - B`, since rules have no
/// arithmetic.
pub fn queens(n: u32) -> String {
    let mut s = String::new();
    for i in 1..=n {
        writeln!(s, "row({i}). col({i}).").unwrap();
    }
    for a in 1..=n {
        for b in 1..a {
            writeln!(s, "diff({a},{b},{}).", a - b).unwrap();
        }
    }
    s.push_str(
        "q(R,C) :- row(R), col(C), not nq(R,C).
nq(R,C) :- row(R), col(C), not q(R,C).
hasq(R) :- q(R,C).
bad :- q(R,C1), q(R,C2), C1 < C2.
bad :- q(R1,C), q(R2,C), R1 < R2.
bad :- q(R1,C1), q(R2,C2), R1 < R2, diff(R2,R1,D), diff(C2,C1,D).
bad :- q(R1,C1), q(R2,C2), R1 < R2, diff(R2,R1,D), diff(C1,C2,D).
bad :- row(R), not hasq(R).
f :- bad, not f.
",
    );
    s
}

const ANCESTOR: &str = "ancestor(X,Y) :- parent(X,Y).
ancestor(X,Y) :- parent(X,Z), ancestor(Z,Y).
";

/// Ancestor over the path `n0 -> n1 -> .. -> n{len-1}`.
pub fn ancestor_chain(len: usize) -> String {
    let mut s = String::new();
    for i in 1..len {
        writeln!(s, "parent(n{}, n{i}).", i - 1).unwrap();
    }
    s.push_str(ANCESTOR);
    s
}

/// Ancestor over a cycle of `len` nodes.
pub fn ancestor_cycle(len: usize) -> String {
    let mut s = String::new();
    for i in 0..len {
        writeln!(s, "parent(n{i}, n{}).", (i + 1) % len).unwrap();
    }
    s.push_str(ANCESTOR);
    s
}

/// Ancestor over a complete binary tree with `nodes` nodes in heap order.
pub fn ancestor_tree(nodes: usize) -> String {
    let mut s = String::new();
    for i in 1..nodes {
        writeln!(s, "parent(n{}, n{i}).", (i - 1) / 2).unwrap();
    }
    s.push_str(ANCESTOR);
    s
}

/// Rules for inclusion-based points-to analysis over `addr` (`p = &a`),
/// `copy` (`p = q`), `load` (`p = *q`) and `store` (`*p = q`) facts.
pub const ANDERSEN_RULES: &str = "pts(P,A) :- addr(P,A).
pts(P,A) :- copy(P,Q), pts(Q,A).
pts(P,A) :- load(P,Q), pts(Q,R), pts(R,A).
pts(R,A) :- store(P,Q), pts(P,R), pts(Q,A).
";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::load;

    #[test]
    fn generated_programs_load() {
        for src in [queens(4), ancestor_chain(5), ancestor_cycle(3), ancestor_tree(7)] {
            load(&src).unwrap();
        }
        load(ANDERSEN_RULES).unwrap();
    }

    #[test]
    fn chain_shape() {
        let p = load(&ancestor_chain(4)).unwrap();
        assert_eq!(p.facts.len(), 3);
        assert_eq!(p.facts[2].to_string(), "parent(n2,n3)");
    }

    fn permutation_count(n: usize) -> usize {
        fn place(row: usize, n: usize, cols: &mut Vec<usize>) -> usize {
            if row == n {
                return 1;
            }
            let mut total = 0;
            for c in 0..n {
                if cols.iter().enumerate().all(|(r, &pc)| pc != c && row - r != c.abs_diff(pc)) {
                    cols.push(c);
                    total += place(row + 1, n, cols);
                    cols.pop();
                }
            }
            total
        }
        place(0, n, &mut Vec::new())
    }

    #[test]
    fn queens_models_match_permutations() {
        use crate::fixpoint::EvalConfig;
        use crate::stable::{solve, SolveConfig};
        for n in 4..=8 {
            let g = crate::wfs::ground(&load(&queens(n)).unwrap(), &EvalConfig::default()).unwrap();
            let sol = solve(&g, None, SolveConfig::default());
            assert_eq!(sol.models.len(), permutation_count(n as usize));
        }
    }

    #[test]
    fn backjumping_keeps_queens_models() {
        use crate::fixpoint::EvalConfig;
        use crate::stable::{solve, SolveConfig};
        let mut jumps = 0;
        for n in 5..=7 {
            let g = crate::wfs::ground(&load(&queens(n)).unwrap(), &EvalConfig::default()).unwrap();
            let on = solve(&g, None, SolveConfig { backjumping: true });
            let off = solve(&g, None, SolveConfig { backjumping: false });
            assert_eq!(on.models, off.models);
            assert!(on.stats.decisions <= off.stats.decisions);
            assert_eq!(off.stats.backjumps, 0);
            jumps += on.stats.backjumps;
        }
        assert!(jumps > 0);
    }
}
