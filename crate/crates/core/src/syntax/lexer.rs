use super::{is_symbol_shaped, CmpOp, Pos};
use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Tok {
    Sym(String),
    Var(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Colon,
    If,
    Query,
    Plus,
    Cmp(CmpOp),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Sym(s) => write!(f, "symbol `{s}`"),
            Tok::Var(s) => write!(f, "variable `{s}`"),
            Tok::Int(i) => write!(f, "integer `{i}`"),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::If => f.write_str("`:-`"),
            Tok::Query => f.write_str("`?-`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Cmp(op) => write!(f, "`{}`", op.symbol()),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

pub(super) fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>> {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        i: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let pos = lx.pos();
        let Some(c) = lx.peek(0) else {
            out.push((Tok::Eof, pos));
            return Ok(out);
        };
        let tok = match c {
            '(' => lx.single(Tok::LParen),
            ')' => lx.single(Tok::RParen),
            '{' => lx.single(Tok::LBrace),
            '}' => lx.single(Tok::RBrace),
            ',' => lx.single(Tok::Comma),
            '.' => lx.single(Tok::Dot),
            '+' => lx.single(Tok::Plus),
            '=' => lx.single(Tok::Cmp(CmpOp::Eq)),
            ':' if lx.peek(1) == Some('-') => lx.double(Tok::If),
            ':' => lx.single(Tok::Colon),
            '?' if lx.peek(1) == Some('-') => lx.double(Tok::Query),
            '!' if lx.peek(1) == Some('=') => lx.double(Tok::Cmp(CmpOp::Ne)),
            '<' if lx.peek(1) == Some('=') => lx.double(Tok::Cmp(CmpOp::Le)),
            '<' => lx.single(Tok::Cmp(CmpOp::Lt)),
            '>' if lx.peek(1) == Some('=') => lx.double(Tok::Cmp(CmpOp::Ge)),
            '>' => lx.single(Tok::Cmp(CmpOp::Gt)),
            '\'' | '"' => lx.string(c, pos)?,
            '-' if lx.peek(1).is_some_and(|d| d.is_ascii_digit()) => {
                lx.bump();
                lx.integer(true, pos)?
            }
            d if d.is_ascii_digit() => lx.integer(false, pos)?,
            a if a.is_ascii_alphabetic() || a == '_' => {
                let word = lx.word();
                if a.is_ascii_uppercase() || a == '_' {
                    Tok::Var(word)
                } else {
                    Tok::Sym(word)
                }
            }
            other => {
                return Err(Error::Syntax {
                    at: pos,
                    expected: "a term, literal, or punctuation".into(),
                    found: format!("character `{other}`"),
                })
            }
        };
        out.push((tok, pos));
    }
}

struct Lexer {
    chars: Vec<char>,
    i: usize,
    line: u32,
    column: u32,
}

impl Lexer {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.i + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn single(&mut self, t: Tok) -> Tok {
        self.bump();
        t
    }

    fn double(&mut self, t: Tok) -> Tok {
        self.bump();
        self.bump();
        t
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek(0) {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while self.peek(0).is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0).filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
            s.push(c);
            self.bump();
        }
        s
    }

    fn integer(&mut self, negative: bool, start: Pos) -> Result<Tok> {
        let mut digits = String::new();
        if negative {
            digits.push('-');
        }
        while let Some(c) = self.peek(0).filter(char::is_ascii_digit) {
            digits.push(c);
            self.bump();
        }
        digits.parse().map(Tok::Int).map_err(|_| Error::Syntax {
            at: start,
            expected: "an integer within 64 bits".into(),
            found: digits,
        })
    }

    fn string(&mut self, quote: char, start: Pos) -> Result<Tok> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(Error::Syntax {
                        at: start,
                        expected: format!("closing {quote}"),
                        found: "end of input".into(),
                    })
                }
                Some(c) if c == quote => break,
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some(c) => s.push(c),
                    None => continue,
                },
                Some(c) => s.push(c),
            }
        }
        // 'amy' and amy denote the same constant.
        Ok(if is_symbol_shaped(&s) {
            Tok::Sym(s)
        } else {
            Tok::Str(s)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn punctuation_and_comments() {
        assert_eq!(
            toks("p(X) :- q. % trailing\n?- r != -3."),
            vec![
                Tok::Sym("p".into()),
                Tok::LParen,
                Tok::Var("X".into()),
                Tok::RParen,
                Tok::If,
                Tok::Sym("q".into()),
                Tok::Dot,
                Tok::Query,
                Tok::Sym("r".into()),
                Tok::Cmp(CmpOp::Ne),
                Tok::Int(-3),
                Tok::Dot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn quoted_identifiers_become_symbols() {
        assert_eq!(toks("'amy'")[0], Tok::Sym("amy".into()));
        assert_eq!(toks("'Amy'")[0], Tok::Str("Amy".into()));
        assert_eq!(toks("\"it's\"")[0], Tok::Str("it's".into()));
    }

    #[test]
    fn positions_are_tracked() {
        let t = tokenize("a.\n  b.").unwrap();
        assert_eq!(t[2].1, Pos { line: 2, column: 3 });
    }

    #[test]
    fn unterminated_string() {
        assert!(matches!(tokenize("p('abc"), Err(Error::Syntax { .. })));
    }
}
