//! Expression trees, equation systems, and natural interval evaluation.

mod literal;
mod parse;

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::interval::{extend, round, Grid, Interval, IntervalBox, Op};

pub use literal::{exact_decimal, literal_ceil, literal_floor, literal_value, LiteralError};
pub use parse::{parse, ParseError, ParseErrorKind};

/// A numeric literal. Inexact literals (e.g. `0.1`) are enclosed by the two
/// binary64 neighbours of their nearest value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant {
    value: f64,
    exact: bool,
}

impl Constant {
    /// A constant known to be exactly `value`.
    pub fn exact(value: f64) -> Self {
        Constant { value, exact: true }
    }

    pub(crate) fn from_parts(value: f64, exact: bool) -> Self {
        Constant { value, exact }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Smallest grid interval containing the literal's real value.
    pub fn enclosure(&self, grid: &Grid) -> Interval {
        if self.exact {
            Interval::outward(grid, self.value, self.value)
        } else {
            Interval::outward(grid, round::down(self.value), round::up(self.value))
        }
    }

    /// A literal that re-parses to the same constant.
    fn literal(&self) -> String {
        if self.exact {
            return exact_decimal(self.value);
        }
        let s = format!("{}", self.value);
        if literal_value(&s).map(|(_, exact)| exact).unwrap_or(false) {
            // nudge far below half an ulp so the literal stays inexact
            if s.contains('.') {
                format!("{}0000000000000000000001", s)
            } else {
                format!("{}.0000000000000000000001", s)
            }
        } else {
            s
        }
    }
}

/// Expression tree over the admissible operations.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Constant),
    /// Index into the owning system's variable declarations.
    Var(usize),
    Apply(Op, Vec<Expr>),
}

impl Expr {
    /// Exact constant; negative values become `neg(|v|)` so the tree matches
    /// what the parser would produce for the printed form.
    pub fn constant(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Apply(Op::Neg, vec![Expr::Const(Constant::exact(-v))])
        } else {
            Expr::Const(Constant::exact(v))
        }
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn apply(op: Op, children: Vec<Expr>) -> Expr {
        assert_eq!(children.len(), op.arity(), "arity mismatch for {op}");
        Expr::Apply(op, children)
    }

    pub fn binary(op: Op, a: Expr, b: Expr) -> Expr {
        Expr::apply(op, vec![a, b])
    }

    pub fn unary(op: Op, a: Expr) -> Expr {
        Expr::apply(op, vec![a])
    }

    /// Number of operation (non-leaf) nodes.
    pub fn op_count(&self) -> usize {
        match self {
            Expr::Apply(_, ch) => 1 + ch.iter().map(Expr::op_count).sum::<usize>(),
            _ => 0,
        }
    }

    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Var(i) => {
                out.insert(*i);
            }
            Expr::Apply(_, ch) => ch.iter().for_each(|c| c.collect_vars(out)),
            Expr::Const(_) => {}
        }
    }

    /// Natural interval extension: `extend` applied bottom-up at every node.
    pub fn eval_interval(&self, grid: &Grid, env: &[Interval]) -> Interval {
        match self {
            Expr::Const(c) => c.enclosure(grid),
            Expr::Var(i) => env[*i],
            Expr::Apply(op, ch) => {
                let args: Vec<Interval> = ch.iter().map(|c| c.eval_interval(grid, env)).collect();
                if args.iter().any(Interval::is_empty) {
                    return Interval::EMPTY;
                }
                extend(grid, *op, &args)
            }
        }
    }

    /// Real evaluation at a point; `None` outside the domain.
    pub fn eval_real(&self, point: &[f64]) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(c.value),
            Expr::Var(i) => Some(point[*i]),
            Expr::Apply(op, ch) => {
                let args: Option<Vec<f64>> = ch.iter().map(|c| c.eval_real(point)).collect();
                op.apply_real(&args?)
            }
        }
    }

    /// Fully parenthesized text using `names` for variables.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut s = String::new();
        self.write_text(names, &mut s);
        s
    }

    fn write_text(&self, names: &[String], out: &mut String) {
        match self {
            Expr::Const(c) => out.push_str(&c.literal()),
            Expr::Var(i) => out.push_str(&names[*i]),
            Expr::Apply(op, ch) => match op {
                Op::Neg => {
                    out.push_str("(-");
                    ch[0].write_text(names, out);
                    out.push(')');
                }
                Op::Pow(k) => {
                    out.push('(');
                    ch[0].write_text(names, out);
                    let _ = write!(out, "^{})", k);
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    out.push('(');
                    ch[0].write_text(names, out);
                    let _ = write!(out, " {} ", op);
                    ch[1].write_text(names, out);
                    out.push(')');
                }
                _ => {
                    out.push_str(op.function_name().expect("named function"));
                    out.push('(');
                    for (k, c) in ch.iter().enumerate() {
                        if k > 0 {
                            out.push_str(", ");
                        }
                        c.write_text(names, out);
                    }
                    out.push(')');
                }
            },
        }
    }
}

/// A declared variable with its initial domain. The bounds are binary64
/// enclosure bounds of the written literals (already moved outward when the
/// literal is not exactly representable).
#[derive(Clone, Debug, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

/// Variables with initial intervals and equations `E = 0`, each stored as `E`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationSystem {
    vars: Vec<VarDecl>,
    equations: Vec<Expr>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SystemError {
    #[error("variable `{0}` is declared but does not occur in any equation")]
    Unused(String),
    #[error("equation {0} refers to undeclared variable index {1}")]
    Undeclared(usize, usize),
    #[error("variable `{0}` is declared twice")]
    Duplicate(String),
    #[error("variable `{0}` has an empty initial domain")]
    EmptyDomain(String),
}

impl EquationSystem {
    pub fn new(vars: Vec<VarDecl>, equations: Vec<Expr>) -> Result<Self, SystemError> {
        let mut used = vec![false; vars.len()];
        for (k, v) in vars.iter().enumerate() {
            if vars[..k].iter().any(|w| w.name == v.name) {
                return Err(SystemError::Duplicate(v.name.clone()));
            }
            if !(v.lo <= v.hi) || v.lo == f64::INFINITY || v.hi == f64::NEG_INFINITY {
                return Err(SystemError::EmptyDomain(v.name.clone()));
            }
        }
        for (j, e) in equations.iter().enumerate() {
            for i in e.variables() {
                if i >= vars.len() {
                    return Err(SystemError::Undeclared(j, i));
                }
                used[i] = true;
            }
        }
        if let Some(k) = used.iter().position(|u| !u) {
            return Err(SystemError::Unused(vars[k].name.clone()));
        }
        Ok(EquationSystem { vars, equations })
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn equations(&self) -> &[Expr] {
        &self.equations
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    /// Declared domains rounded outward onto `grid`.
    pub fn initial_box(&self, grid: &Grid) -> IntervalBox {
        IntervalBox::new(self.vars.iter().map(|v| Interval::outward(grid, v.lo, v.hi)).collect())
    }

    /// Replaces every initial domain by `[lo, hi]`.
    pub fn with_uniform_box(&self, lo: f64, hi: f64) -> EquationSystem {
        let mut out = self.clone();
        for v in &mut out.vars {
            v.lo = lo;
            v.hi = hi;
        }
        out
    }

    /// Canonical printed form; `parse` of this text yields an equal system.
    pub fn to_text(&self) -> String {
        let names = self.names();
        let mut s = String::new();
        for v in &self.vars {
            let _ = writeln!(s, "var {} in [{}, {}];", v.name, bound_literal(v.lo), bound_literal(v.hi));
        }
        for e in &self.equations {
            let _ = writeln!(s, "{} = 0;", e.to_text(&names));
        }
        s
    }
}

fn bound_literal(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == f64::INFINITY {
        "+inf".into()
    } else if x < 0.0 {
        format!("-{}", exact_decimal(-x))
    } else {
        exact_decimal(x)
    }
}

impl fmt::Display for EquationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
