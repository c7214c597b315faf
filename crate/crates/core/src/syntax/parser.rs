use super::lexer::{tokenize, Tok};
use super::{AggFunc, Aggregate, Atom, Literal, Pos, Program, Query, Rule, Term};
use crate::error::{Error, Result};

/// Parses a whole program. Statements are classified as ground facts, rules
/// (including non-ground bodiless heads, which safety later rejects), and
/// `?-` queries.
pub fn parse(source: &str) -> Result<Program> {
    let mut p = Parser::new(source)?;
    let mut program = Program::default();
    while p.peek() != &Tok::Eof {
        if p.eat(&Tok::Query) {
            let pos = p.last_pos();
            let body = p.body()?;
            p.expect(&Tok::Dot, "`,` or `.`")?;
            program.queries.push(Query { body, pos });
            continue;
        }
        let pos = p.pos();
        let head = p.atom()?;
        if head.closure {
            return Err(Error::Syntax {
                at: pos,
                expected: "a head atom without `+`".into(),
                found: format!("`{head}`"),
            });
        }
        if p.eat(&Tok::If) {
            let body = p.body()?;
            p.expect(&Tok::Dot, "`,` or `.`")?;
            program.rules.push(Rule { head, body, pos });
        } else {
            p.expect(&Tok::Dot, "`:-` or `.`")?;
            if head.is_ground() {
                program.facts.push(head);
            } else {
                program.rules.push(Rule {
                    head,
                    body: Vec::new(),
                    pos,
                });
            }
        }
    }
    Ok(program)
}

/// Parses a query body such as `is_ancestor(a,X)` or `?- p(X), q(X).`; the
/// `?-` prefix and trailing `.` are optional.
pub fn parse_literals(source: &str) -> Result<Vec<Literal>> {
    let mut p = Parser::new(source)?;
    p.eat(&Tok::Query);
    let body = p.body()?;
    p.eat(&Tok::Dot);
    p.expect(&Tok::Eof, "`,` or end of query")?;
    Ok(body)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn new(source: &str) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(source)?,
            i: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let j = (self.i + ahead).min(self.toks.len() - 1);
        &self.toks[j].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn last_pos(&self) -> Pos {
        self.toks[self.i.saturating_sub(1)].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Syntax {
            at: self.pos(),
            expected: expected.to_string(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, t: &Tok, expected: &str) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.error(expected)
        }
    }

    fn body(&mut self) -> Result<Vec<Literal>> {
        let mut lits = vec![self.literal()?];
        while self.eat(&Tok::Comma) {
            lits.push(self.literal()?);
        }
        Ok(lits)
    }

    fn literal(&mut self) -> Result<Literal> {
        match (self.peek(), self.peek_at(1)) {
            (Tok::Sym(s), Tok::Sym(_)) if s == "not" => {
                self.advance();
                let atom = self.atom()?;
                return Ok(Literal::Neg(atom));
            }
            (Tok::Var(_), Tok::Cmp(super::CmpOp::Eq)) => {
                if let (Tok::Sym(f), Tok::LBrace) = (self.peek_at(2), self.peek_at(3)) {
                    if let Some(func) = AggFunc::from_name(f) {
                        return self.aggregate(func);
                    }
                }
            }
            _ => {}
        }
        if let Tok::Sym(_) = self.peek() {
            let start = self.pos();
            let atom = self.atom()?;
            if let Tok::Cmp(op) = *self.peek() {
                if atom.closure {
                    return Err(Error::Syntax {
                        at: start,
                        expected: "a term".into(),
                        found: format!("path atom `{atom}`"),
                    });
                }
                self.advance();
                let left = if atom.args.is_empty() {
                    Term::Sym(atom.pred)
                } else {
                    Term::Compound(atom.pred, atom.args)
                };
                let right = self.term()?;
                return Ok(Literal::Cmp(left, op, right));
            }
            return Ok(Literal::Pos(atom));
        }
        let left = self.term()?;
        let Tok::Cmp(op) = *self.peek() else {
            return self.error("a comparison operator");
        };
        self.advance();
        let right = self.term()?;
        Ok(Literal::Cmp(left, op, right))
    }

    fn aggregate(&mut self, func: AggFunc) -> Result<Literal> {
        let Tok::Var(result) = self.advance() else {
            unreachable!("checked by lookahead")
        };
        self.advance(); // `=`
        self.advance(); // function name
        self.advance(); // `{`
        let Tok::Var(local) = self.peek().clone() else {
            return self.error("the aggregated variable");
        };
        self.advance();
        self.expect(&Tok::Colon, "`:`")?;
        let mut body = Vec::new();
        loop {
            let at = self.pos();
            let lit = self.literal()?;
            if matches!(lit, Literal::Neg(_) | Literal::Agg(_)) {
                return Err(Error::Syntax {
                    at,
                    expected: "a positive atom or comparison inside an aggregate".into(),
                    found: format!("`{lit}`"),
                });
            }
            body.push(lit);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RBrace, "`,` or `}`")?;
        Ok(Literal::Agg(Aggregate {
            result,
            func,
            local,
            body,
        }))
    }

    fn atom(&mut self) -> Result<Atom> {
        let Tok::Sym(pred) = self.peek().clone() else {
            return self.error("a predicate name");
        };
        self.advance();
        let closure = self.eat(&Tok::Plus);
        let args = if self.eat(&Tok::LParen) {
            self.args()?
        } else {
            Vec::new()
        };
        Ok(Atom {
            pred,
            closure,
            args,
        })
    }

    fn args(&mut self) -> Result<Vec<Term>> {
        let mut args = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            args.push(self.term()?);
        }
        self.expect(&Tok::RParen, "`,` or `)`")?;
        Ok(args)
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(Term::Int(i))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Term::Str(s))
            }
            Tok::Var(v) => {
                self.advance();
                Ok(Term::Var(v))
            }
            Tok::Sym(s) => {
                self.advance();
                if self.eat(&Tok::LParen) {
                    Ok(Term::Compound(s, self.args()?))
                } else {
                    Ok(Term::Sym(s))
                }
            }
            _ => self.error("a term"),
        }
    }
}
