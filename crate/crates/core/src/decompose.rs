//! Decomposition of equation systems into primitive constraints.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::expr::{Constant, EquationSystem, Expr};
use crate::interval::{fmt_bound, Grid, Interval, IntervalBox, Op};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// A variable of the equation system.
    Primary,
    /// The value of one non-leaf node.
    Auxiliary,
    /// A literal, held on a dedicated variable with a point (or one-ulp) domain.
    Constant,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarKind::Primary => "primary",
            VarKind::Auxiliary => "auxiliary",
            VarKind::Constant => "constant",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Atom {
    /// `output = op(inputs)`.
    Functional { op: Op, output: usize, inputs: Vec<usize> },
    /// `v = 0`.
    Relational(usize),
}

impl Atom {
    pub fn is_functional(&self) -> bool {
        matches!(self, Atom::Functional { .. })
    }

    /// Every variable index mentioned, output first, with repeats.
    pub fn variables(&self) -> Vec<usize> {
        match self {
            Atom::Functional { output, inputs, .. } => {
                let mut v = vec![*output];
                v.extend(inputs);
                v
            }
            Atom::Relational(v) => vec![*v],
        }
    }
}

/// The constraint system associated with an equation system.
///
/// Variables are ordered primaries first (declaration order), then constants
/// and auxiliaries in creation order. Functional atoms come first, in
/// post-order of the equations, so their index order is a topological order;
/// one relational atom per equation follows.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    grid: Grid,
    vars: Vec<Variable>,
    atoms: Vec<Atom>,
    initial: IntervalBox,
    scopes: Vec<Vec<usize>>,
    watch: Vec<Vec<usize>>,
    roots: Vec<usize>,
    eq_atoms: Vec<std::ops::Range<usize>>,
    n_functional: usize,
    n_primary: usize,
    equations: Vec<Expr>,
}

struct Builder<'a> {
    grid: Grid,
    vars: Vec<Variable>,
    domains: Vec<Interval>,
    atoms: Vec<Atom>,
    consts: HashMap<(u64, bool), usize>,
    taken: &'a [String],
    aux_count: usize,
}

impl Builder<'_> {
    fn fresh_name(&self, base: String) -> String {
        let mut name = base;
        while self.taken.contains(&name) {
            name.push('\'');
        }
        name
    }

    fn constant(&mut self, c: Constant) -> usize {
        let key = (c.value().to_bits(), c.is_exact());
        if let Some(&i) = self.consts.get(&key) {
            return i;
        }
        let label = if c.is_exact() {
            format!("c{}", c.value())
        } else {
            format!("c~{}", c.value())
        };
        let name = self.fresh_name(label);
        self.vars.push(Variable { name, kind: VarKind::Constant });
        self.domains.push(c.enclosure(&self.grid));
        let i = self.vars.len() - 1;
        self.consts.insert(key, i);
        i
    }

    fn node(&mut self, e: &Expr) -> usize {
        match e {
            Expr::Var(i) => *i,
            Expr::Const(c) => self.constant(*c),
            Expr::Apply(op, ch) => {
                let (op, inputs) = match op {
                    Op::Neg => {
                        let zero = self.constant(Constant::exact(0.0));
                        (Op::Sub, vec![zero, self.node(&ch[0])])
                    }
                    _ => (*op, ch.iter().map(|c| self.node(c)).collect()),
                };
                self.aux_count += 1;
                let name = self.fresh_name(format!("v{}", self.aux_count));
                self.vars.push(Variable { name, kind: VarKind::Auxiliary });
                self.domains.push(Interval::ENTIRE);
                let output = self.vars.len() - 1;
                self.atoms.push(Atom::Functional { op, output, inputs });
                output
            }
        }
    }
}

/// Builds the associated constraint system with its initial box on `grid`.
pub fn decompose(es: &EquationSystem, grid: &Grid) -> ConstraintSystem {
    let names = es.names();
    let mut b = Builder {
        grid: *grid,
        vars: names.iter().map(|n| Variable { name: n.clone(), kind: VarKind::Primary }).collect(),
        domains: es.initial_box(grid).components().to_vec(),
        atoms: Vec::new(),
        consts: HashMap::new(),
        taken: &names,
        aux_count: 0,
    };
    let mut eq_atoms = Vec::new();
    let mut roots = Vec::new();
    for e in es.equations() {
        let start = b.atoms.len();
        roots.push(b.node(e));
        eq_atoms.push(start..b.atoms.len());
    }
    let n_functional = b.atoms.len();
    b.atoms.extend(roots.iter().map(|&r| Atom::Relational(r)));

    let n = b.vars.len();
    let scopes: Vec<Vec<usize>> = b
        .atoms
        .iter()
        .map(|a| {
            let mut v = a.variables();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let mut watch = vec![Vec::new(); n];
    for (k, s) in scopes.iter().enumerate() {
        for &v in s {
            watch[v].push(k);
        }
    }
    ConstraintSystem {
        grid: *grid,
        vars: b.vars,
        atoms: b.atoms,
        initial: IntervalBox::new(b.domains),
        scopes,
        watch,
        roots,
        eq_atoms,
        n_functional,
        n_primary: names.len(),
        equations: es.equations().to_vec(),
    }
}

impl ConstraintSystem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    /// Number of primary variables; they occupy indices `0..n_primary()`.
    pub fn n_primary(&self) -> usize {
        self.n_primary
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, k: usize) -> &Atom {
        &self.atoms[k]
    }

    pub fn initial_box(&self) -> &IntervalBox {
        &self.initial
    }

    /// Distinct variable indices of atom `k`.
    pub fn scope(&self, k: usize) -> &[usize] {
        &self.scopes[k]
    }

    /// Atoms mentioning variable `v`.
    pub fn watchers(&self, v: usize) -> &[usize] {
        &self.watch[v]
    }

    /// Root variable of each equation.
    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// Functional atoms of equation `j`, a contiguous topologically ordered
    /// range.
    pub fn equation_atoms(&self, j: usize) -> std::ops::Range<usize> {
        self.eq_atoms[j].clone()
    }

    /// Functional atom indices in topological (child-before-parent) order.
    pub fn functional_order(&self) -> std::ops::Range<usize> {
        0..self.n_functional
    }

    pub fn relational_atoms(&self) -> std::ops::Range<usize> {
        self.n_functional..self.atoms.len()
    }

    /// The source equations, over primary indices.
    pub fn equations(&self) -> &[Expr] {
        &self.equations
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Extends a box over the primary variables with the initial domains of
    /// the constants and auxiliaries.
    pub fn extend_box(&self, primary: &IntervalBox) -> IntervalBox {
        assert_eq!(primary.len(), self.n_primary, "primary box arity");
        let mut b = self.initial.clone();
        for i in 0..self.n_primary {
            b.set(i, primary.get(i));
        }
        b
    }

    /// Resets every auxiliary variable to `[-inf, +inf]`.
    pub fn reset_auxiliaries(&self, b: &mut IntervalBox) {
        for (i, v) in self.vars.iter().enumerate() {
            if v.kind == VarKind::Auxiliary {
                b.set(i, Interval::ENTIRE);
            }
        }
    }

    pub fn atom_text(&self, k: usize) -> String {
        let name = |i: usize| self.vars[i].name.as_str();
        match &self.atoms[k] {
            Atom::Relational(v) => format!("{} = 0", name(*v)),
            Atom::Functional { op, output, inputs } => {
                let out = name(*output);
                match op {
                    Op::Add | Op::Sub | Op::Mul | Op::Div => {
                        format!("{out} = {} {op} {}", name(inputs[0]), name(inputs[1]))
                    }
                    Op::Pow(k) => format!("{out} = {}^{k}", name(inputs[0])),
                    Op::Neg => format!("{out} = -{}", name(inputs[0])),
                    _ => {
                        let args: Vec<&str> = inputs.iter().map(|&i| name(i)).collect();
                        format!("{out} = {}({})", op.function_name().unwrap_or("?"), args.join(", "))
                    }
                }
            }
        }
    }

    /// Deterministic listing of variables, atoms and the initial box.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "grid {}", self.grid);
        let _ = writeln!(s, "variables {}", self.vars.len());
        for (i, v) in self.vars.iter().enumerate() {
            let _ = writeln!(s, "  {i} {} {} {}", v.name, v.kind, self.initial[i].to_text(&self.grid));
        }
        let _ = writeln!(s, "atoms {}", self.atoms.len());
        for k in 0..self.atoms.len() {
            let _ = writeln!(s, "  {k} {}", self.atom_text(k));
        }
        s
    }

    /// `name=interval` pairs of the primary variables.
    pub fn primary_text(&self, b: &IntervalBox) -> String {
        if b.is_empty() {
            return "empty".into();
        }
        (0..self.n_primary)
            .map(|i| format!("{}={}", self.vars[i].name, b[i].to_text(&self.grid)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn bound_text(&self, x: f64) -> String {
        fmt_bound(x, &self.grid)
    }
}
