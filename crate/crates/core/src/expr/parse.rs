//! Recursive-descent parser for equation files.
//!
//! ```text
//! file   := { decl | equation }
//! decl   := "var" IDENT "in" "[" bound "," bound "]" ";"
//! bound  := ["+" | "-"] (NUMBER | "inf")
//! equation := expr "=" expr ";"
//! expr   := term { ("+" | "-") term }
//! term   := power { ("*" | "/") power }
//! power  := unary { "^" ["+" | "-"] INTEGER }
//! unary  := "-" unary | atom
//! atom   := NUMBER | IDENT | IDENT "(" expr { "," expr } ")" | "(" expr ")"
//! ```

use std::fmt;

use super::literal::{literal_ceil, literal_floor, literal_parts, LiteralError};
use super::{Constant, EquationSystem, Expr, SystemError, VarDecl};
use crate::interval::Op;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("equation lacks \"=\"")]
    MissingEquals,
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("non-integer exponent")]
    NonIntegerExponent,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("{0}")]
    Literal(#[from] LiteralError),
    #[error("{0}")]
    System(#[from] SystemError),
}

/// A diagnostic with a 1-based source position.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.kind)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(s) | Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            Tok::Num(chars[start..i].iter().collect())
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if "+-*/^()[],;=".contains(c) {
            i += 1;
            Tok::Sym(c)
        } else {
            return Err(ParseError {
                line,
                col,
                kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")),
            });
        };
        col += i - start;
        out.push(Token { tok, line: l0, col: c0 });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    vars: Vec<VarDecl>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, kind: ParseErrorKind) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError { line: t.line, col: t.col, kind }
    }

    fn err_at(t: &Token, kind: ParseErrorKind) -> ParseError {
        ParseError { line: t.line, col: t.col, kind }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.err_here(ParseErrorKind::Syntax(format!("expected {wanted}, found {}", self.peek())))
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn file(&mut self) -> PResult<Vec<(Expr, Token)>> {
        let mut eqs = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Eof => return Ok(eqs),
                Tok::Ident(kw) if kw == "var" && matches!(self.peek_at(1), Tok::Ident(_)) => self.decl()?,
                _ => {
                    let start = self.toks[self.pos].clone();
                    let e = self.equation()?;
                    eqs.push((e, start));
                }
            }
        }
    }

    fn decl(&mut self) -> PResult<()> {
        self.next();
        let name_tok = self.next();
        let Tok::Ident(name) = name_tok.tok.clone() else {
            unreachable!("checked by caller")
        };
        if self.vars.iter().any(|v| v.name == name) {
            return Err(Self::err_at(&name_tok, SystemError::Duplicate(name).into()));
        }
        match self.peek() {
            Tok::Ident(k) if k == "in" => {
                self.next();
            }
            _ => return Err(self.unexpected("`in`")),
        }
        self.expect('[')?;
        let lo = self.bound(false)?;
        self.expect(',')?;
        let hi = self.bound(true)?;
        self.expect(']')?;
        self.expect(';')?;
        if !(lo <= hi) || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Self::err_at(&name_tok, SystemError::EmptyDomain(name).into()));
        }
        self.vars.push(VarDecl { name, lo, hi });
        Ok(())
    }

    /// A declared bound, rounded outward to binary64.
    fn bound(&mut self, upper: bool) -> PResult<f64> {
        let neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        let t = self.next();
        let mag = match &t.tok {
            Tok::Ident(s) if s == "inf" => f64::INFINITY,
            Tok::Num(s) => {
                // outward: a negated lower bound needs the ceiling of the magnitude
                let r = if upper != neg { literal_ceil(s) } else { literal_floor(s) };
                r.map_err(|e| Self::err_at(&t, e.into()))?
            }
            other => {
                return Err(Self::err_at(
                    &t,
                    ParseErrorKind::Syntax(format!("expected a number or `inf`, found {other}")),
                ))
            }
        };
        Ok(if neg { -mag } else { mag })
    }

    fn equation(&mut self) -> PResult<Expr> {
        let lhs = self.expr()?;
        if !self.eat('=') {
            return Err(match self.peek() {
                Tok::Sym(';') | Tok::Eof => self.err_here(ParseErrorKind::MissingEquals),
                _ => self.unexpected("an operator or `=`"),
            });
        }
        let rhs = self.expr()?;
        self.expect(';')?;
        Ok(match rhs {
            Expr::Const(c) if c.is_exact() && c.value() == 0.0 => lhs,
            rhs => Expr::binary(Op::Sub, lhs, rhs),
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => Op::Add,
                Tok::Sym('-') => Op::Sub,
                _ => return Ok(e),
            };
            self.next();
            e = Expr::binary(op, e, self.term()?);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.power()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => Op::Mul,
                Tok::Sym('/') => Op::Div,
                _ => return Ok(e),
            };
            self.next();
            e = Expr::binary(op, e, self.power()?);
        }
    }

    fn power(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        while self.eat('^') {
            let at = self.toks[self.pos].clone();
            let neg = if self.eat('-') {
                true
            } else {
                self.eat('+');
                false
            };
            let t = self.next();
            let Tok::Num(s) = &t.tok else {
                return Err(Self::err_at(&at, ParseErrorKind::NonIntegerExponent));
            };
            if !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Self::err_at(&at, ParseErrorKind::NonIntegerExponent));
            }
            let k: i32 = s
                .parse()
                .ok()
                .filter(|k: &i32| *k <= 1 << 20)
                .ok_or_else(|| Self::err_at(&t, ParseErrorKind::Syntax(format!("exponent `{s}` is too large"))))?;
            e = Expr::unary(Op::Pow(if neg { -k } else { k }), e);
        }
        Ok(e)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat('-') {
            return Ok(Expr::unary(Op::Neg, self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let t = self.next();
        match &t.tok {
            Tok::Num(s) => {
                let (v, o) = literal_parts(s).map_err(|e| Self::err_at(&t, e.into()))?;
                Ok(Expr::Const(Constant::from_parts(v, o.is_eq())))
            }
            Tok::Ident(name) if *self.peek() == Tok::Sym('(') => {
                let op = Op::from_function_name(name)
                    .ok_or_else(|| Self::err_at(&t, ParseErrorKind::UnknownFunction(name.clone())))?;
                self.next();
                let mut args = vec![self.expr()?];
                while self.eat(',') {
                    args.push(self.expr()?);
                }
                self.expect(')')?;
                if args.len() != op.arity() {
                    return Err(Self::err_at(
                        &t,
                        ParseErrorKind::Syntax(format!(
                            "`{name}` takes {} argument(s), got {}",
                            op.arity(),
                            args.len()
                        )),
                    ));
                }
                Ok(Expr::Apply(op, args))
            }
            Tok::Ident(name) => match self.vars.iter().position(|v| v.name == *name) {
                Some(i) => Ok(Expr::Var(i)),
                None => Err(Self::err_at(&t, ParseErrorKind::Undeclared(name.clone()))),
            },
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            other => Err(Self::err_at(
                &t,
                ParseErrorKind::Syntax(format!("expected an operand, found {other}")),
            )),
        }
    }
}

/// Parses an equation file into a validated system.
pub fn parse(src: &str) -> Result<EquationSystem, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0, vars: Vec::new() };
    let eqs = p.file()?;
    let end = p.toks.last().expect("eof token").clone();
    let (exprs, starts): (Vec<Expr>, Vec<Token>) = eqs.into_iter().unzip();
    EquationSystem::new(p.vars, exprs).map_err(|e| {
        let at = match &e {
            SystemError::Undeclared(j, _) => starts.get(*j).unwrap_or(&end),
            _ => &end,
        };
        Parser::err_at(at, e.into())
    })
}
