use super::{Atom, Literal, Pos, Program, Rule};
use crate::error::{Error, Result};

/// Checks range restriction on every rule and query.
///
/// A variable is bound when it occurs in a positive body atom or is the
/// result of an aggregate. Head variables, variables under negation, and
/// comparison variables must be bound. Inside an aggregate the collected
/// variable must occur in a positive inner atom and every other inner
/// variable must occur in a positive atom of the enclosing body.
pub fn validate_safety(program: Program) -> Result<Program> {
    for rule in &program.rules {
        check_body(&rule.body, Some(&rule.head), rule.pos, &|| rule.to_string())?;
    }
    for q in &program.queries {
        check_body(&q.body, None, q.pos, &|| q.to_string())?;
    }
    Ok(program)
}

/// Validates a single rule; used for rules synthesized by the engine.
pub(crate) fn check_rule(rule: &Rule) -> Result<()> {
    check_body(&rule.body, Some(&rule.head), rule.pos, &|| rule.to_string())
}

fn check_body(body: &[Literal], head: Option<&Atom>, pos: Pos, text: &dyn Fn() -> String) -> Result<()> {
    let mut positive: Vec<&str> = Vec::new();
    for lit in body {
        if let Literal::Pos(a) = lit {
            a.collect_vars(&mut positive);
        }
    }
    let mut bound = positive.clone();
    for lit in body {
        if let Literal::Agg(agg) = lit {
            bound.push(&agg.result);
        }
    }
    let unsafe_var = |var: &str| Error::Unsafe {
        at: pos,
        rule: text(),
        var: var.to_string(),
    };
    let require = |vars: Vec<&str>, within: &[&str]| -> Result<()> {
        match vars.into_iter().find(|v| !within.contains(v)) {
            Some(v) => Err(unsafe_var(v)),
            None => Ok(()),
        }
    };

    if let Some(head) = head {
        require(head.vars(), &bound)?;
    }
    for lit in body {
        match lit {
            Literal::Pos(_) => {}
            Literal::Neg(a) => require(a.vars(), &bound)?,
            Literal::Cmp(..) => require(lit.vars(), &bound)?,
            Literal::Agg(agg) => {
                let mut inner_positive = Vec::new();
                for l in &agg.body {
                    if let Literal::Pos(a) = l {
                        a.collect_vars(&mut inner_positive);
                    }
                }
                if !inner_positive.contains(&agg.local.as_str()) {
                    return Err(unsafe_var(&agg.local));
                }
                require(agg.outer_vars(), &positive)?;
            }
        }
    }
    // Queries have no head: every variable is an answer column.
    if head.is_none() {
        require(super::answer_vars(body), &bound)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn check(src: &str) -> Result<Program> {
        validate_safety(parse(src).unwrap())
    }

    fn offending(src: &str) -> String {
        match check(src).unwrap_err() {
            Error::Unsafe { var, .. } => var,
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn negation_after_binding_is_safe() {
        assert!(check("is_mother(X,Y) :- is_parent(X,Y), not male(X).").is_ok());
    }

    #[test]
    fn unbound_head_variable() {
        assert_eq!(offending("p(X,Y) :- q(X)."), "Y");
    }

    #[test]
    fn variable_only_under_negation() {
        assert_eq!(offending("p(X) :- q(X), not r(Y)."), "Y");
    }

    #[test]
    fn comparisons_need_bound_variables() {
        assert_eq!(offending("p(X) :- q(X), X < Y."), "Y");
        assert!(check("p(X) :- q(X), X < 3.").is_ok());
    }

    #[test]
    fn nonground_fact_is_unsafe() {
        assert_eq!(offending("p(X)."), "X");
    }

    #[test]
    fn aggregates() {
        assert!(check("n(P,N) :- person(P), N = count { C : parent(P,C) }.").is_ok());
        assert!(check("n(N) :- N = count { C : parent(bob,C) }.").is_ok());
        // collected variable must be produced by the inner body
        assert_eq!(offending("n(P,N) :- person(P), N = count { C : parent(P,D) }."), "C");
        // grouping variables come from the outer body
        assert_eq!(offending("n(N) :- N = count { C : parent(P,C) }."), "P");
    }

    #[test]
    fn query_variables_must_be_bound() {
        assert!(check("?- p(X), X > 1.").is_ok());
        assert_eq!(offending("?- p(X), not q(Y)."), "Y");
    }

    #[test]
    fn function_terms_bind_their_variables() {
        assert!(check("is_positive(succ(N)) :- is_positive(N).").is_ok());
        assert!(check("p(N) :- q(succ(N)).").is_ok());
    }
}
