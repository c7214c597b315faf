use super::{Atom, Literal, Pos, Program, Rule, Term};
use crate::error::{Error, Result};

/// Replaces every `q+(S,T)` with `q__plus(S,T)` and adds, once per closed
/// predicate, the right-recursive closure rules
///
/// ```text
/// q__plus(X,Y) :- q(X,Y).
/// q__plus(X,Y) :- q(X,Z), q__plus(Z,Y).
/// ```
///
/// Programs without path atoms come back unchanged, so applying this twice is
/// the same as applying it once.
pub fn desugar_paths(mut program: Program) -> Result<Program> {
    let mut closed: Vec<(String, Pos)> = Vec::new();
    let mut any = false;
    visit_atoms(&mut program, &mut |atom, _| any |= atom.closure);
    if !any {
        return Ok(program);
    }
    for key in program.predicates() {
        if key.name.contains("__") {
            return Err(Error::ReservedName(key.name));
        }
    }

    let mut failure = None;
    visit_atoms(&mut program, &mut |atom, pos| {
        if !atom.closure || failure.is_some() {
            return;
        }
        if atom.args.len() != 2 {
            failure = Some(Error::PathArity {
                at: pos,
                pred: atom.pred.clone(),
                arity: atom.args.len(),
            });
            return;
        }
        if !closed.iter().any(|(p, _)| *p == atom.pred) {
            closed.push((atom.pred.clone(), pos));
        }
        atom.pred = closure_name(&atom.pred);
        atom.closure = false;
    });
    if let Some(e) = failure {
        return Err(e);
    }

    for (base, pos) in closed {
        program.rules.extend(closure_rules(&base, pos));
    }
    Ok(program)
}

/// Expands path atoms in a query posed against an already desugared
/// program, adding closure rules the program does not have yet.
pub fn desugar_query(program: &Program, query: &[Literal]) -> Result<(Program, Vec<Literal>)> {
    let mut program = program.clone();
    let mut query = query.to_vec();
    let mut failure = None;
    let mut bases: Vec<String> = Vec::new();
    let mut visit = |atom: &mut Atom| {
        if !atom.closure {
            return;
        }
        if atom.args.len() != 2 {
            failure.get_or_insert(Error::PathArity {
                at: Pos::default(),
                pred: atom.pred.clone(),
                arity: atom.args.len(),
            });
            return;
        }
        if !bases.contains(&atom.pred) {
            bases.push(atom.pred.clone());
        }
        atom.pred = closure_name(&atom.pred);
        atom.closure = false;
    };
    for lit in &mut query {
        match lit {
            Literal::Pos(a) | Literal::Neg(a) => visit(a),
            Literal::Agg(agg) => agg.body.iter_mut().for_each(|l| {
                if let Literal::Pos(a) = l {
                    visit(a)
                }
            }),
            Literal::Cmp(..) => {}
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    for base in bases {
        let plus = closure_name(&base);
        if program.rules.iter().any(|r| r.head.pred == plus && r.head.args.len() == 2) {
            continue;
        }
        program.rules.extend(closure_rules(&base, Pos::default()));
    }
    Ok((program, query))
}

fn closure_rules(base: &str, pos: Pos) -> [Rule; 2] {
    let plus = closure_name(base);
    let (x, y, z) = (Term::var("X"), Term::var("Y"), Term::var("Z"));
    [
        Rule {
            head: Atom::new(plus.clone(), vec![x.clone(), y.clone()]),
            body: vec![Literal::Pos(Atom::new(base, vec![x.clone(), y.clone()]))],
            pos,
        },
        Rule {
            head: Atom::new(plus.clone(), vec![x.clone(), y.clone()]),
            body: vec![
                Literal::Pos(Atom::new(base, vec![x, z.clone()])),
                Literal::Pos(Atom::new(plus, vec![z, y])),
            ],
            pos,
        },
    ]
}

pub(crate) fn closure_name(base: &str) -> String {
    format!("{base}__plus")
}

fn visit_atoms(program: &mut Program, f: &mut dyn FnMut(&mut Atom, Pos)) {
    fn body(lits: &mut [Literal], pos: Pos, f: &mut dyn FnMut(&mut Atom, Pos)) {
        for lit in lits {
            match lit {
                Literal::Pos(a) | Literal::Neg(a) => f(a, pos),
                Literal::Agg(agg) => body(&mut agg.body, pos, f),
                Literal::Cmp(..) => {}
            }
        }
    }
    for rule in &mut program.rules {
        body(&mut rule.body, rule.pos, f);
    }
    for q in &mut program.queries {
        body(&mut q.body, q.pos, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    #[test]
    fn closure_expands_to_two_rules() {
        let p = desugar_paths(parse("is_ancestor(X,Y) :- is_parent+(X,Y).").unwrap()).unwrap();
        let expected = parse(
            "is_ancestor(X,Y) :- is_parent__plus(X,Y).
             is_parent__plus(X,Y) :- is_parent(X,Y).
             is_parent__plus(X,Y) :- is_parent(X,Z), is_parent__plus(Z,Y).",
        )
        .unwrap();
        assert_eq!(p, expected);
    }

    #[test]
    fn generated_once_per_predicate() {
        let p = desugar_paths(parse("a(X,Y) :- e+(X,Y). b(X) :- e+(X,X). ?- e+(x,Y).").unwrap()).unwrap();
        assert_eq!(p.rules.len(), 4);
        assert_eq!(p.queries[0].body[0].atom().unwrap().pred, "e__plus");
    }

    #[test]
    fn identity_without_paths() {
        let src = parse("p(X) :- q(X). q(1).").unwrap();
        assert_eq!(desugar_paths(src.clone()).unwrap(), src);
    }

    #[test]
    fn idempotent() {
        let once = desugar_paths(parse("anc(X,Y) :- par+(X,Y).").unwrap()).unwrap();
        let twice = desugar_paths(once.clone()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn ternary_rejected() {
        let err = desugar_paths(parse("p(X) :- link+(X,Y,Z).").unwrap()).unwrap_err();
        assert!(matches!(err, Error::PathArity { arity: 3, .. }));
    }

    #[test]
    fn reserved_infix_rejected() {
        let err = desugar_paths(parse("p(X,Y) :- e+(X,Y). e__plus(a,b).").unwrap()).unwrap_err();
        assert_eq!(err, Error::ReservedName("e__plus".into()));
    }
}
