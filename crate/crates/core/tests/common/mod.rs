//! Shared corpus and independent oracles for the integration tests and the
//! acceptance harness. The oracles use only interval evaluation of source
//! trees, single-atom contractors, and plain `f64` arithmetic.
#![allow(dead_code)]

use boxprobe::contract::contract_atom;
use boxprobe::decompose::{decompose, ConstraintSystem};
use boxprobe::expr::{parse, EquationSystem};
use boxprobe::interval::{Grid, Interval, IntervalBox};

// ---------------------------------------------------------------- oracles

/// Every canonical interval inside `d`, left to right: `[p, succ p]` for
/// consecutive grid elements (including the infinite ends), or `d` itself when
/// it is already canonical.
pub fn canonical_pieces(grid: &Grid, d: Interval) -> Vec<Interval> {
    let Some((lo, hi)) = d.bounds() else {
        return Vec::new();
    };
    if d.is_canonical(grid) {
        return vec![d];
    }
    let mut out = Vec::new();
    let mut p = lo;
    while p < hi {
        let q = grid.succ(p);
        out.push(Interval::new(p, q.min(hi)));
        p = q;
    }
    out
}

/// `bx[i]` narrowed to the hull of the canonical pieces that pass `test`.
fn narrow_by(grid: &Grid, bx: &IntervalBox, i: usize, mut test: impl FnMut(Interval) -> bool) -> Interval {
    let pass: Vec<Interval> = canonical_pieces(grid, bx[i]).into_iter().filter(|&p| test(p)).collect();
    match (pass.first(), pass.last()) {
        (Some(l), Some(r)) => l.hull(r),
        _ => Interval::EMPTY,
    }
}

/// Functional operator for equation `j` and coordinate `i` by exhaustive
/// enumeration: the pseudo-zero test is interval evaluation of the source
/// tree.
pub fn oracle_cw_functional(es: &EquationSystem, grid: &Grid, j: usize, bx: &IntervalBox, i: usize) -> Interval {
    let eq = &es.equations()[j];
    narrow_by(grid, bx, i, |p| {
        let mut env = bx.components().to_vec();
        env[i] = p;
        eq.eval_interval(grid, &env).contains(0.0)
    })
}

/// Greatest common fixpoint below `b` by repeated round-robin sweeps of
/// every atom contractor until a sweep changes nothing.
pub fn oracle_fixpoint(cs: &ConstraintSystem, b: &IntervalBox) -> IntervalBox {
    let mut cur = b.clone();
    let mut changed = Vec::new();
    loop {
        if cur.is_empty() {
            cur.make_empty();
            return cur;
        }
        let before = cur.clone();
        for atom in cs.atoms() {
            changed.clear();
            contract_atom(cs.grid(), atom, &mut cur, &mut changed);
            if cur.is_empty() {
                cur.make_empty();
                return cur;
            }
        }
        if cur.bits_eq(&before) {
            return cur;
        }
    }
}

/// Whether the probe `x_i in p` from the primary box `bx` fails under full
/// propagation; auxiliaries start unconstrained.
pub fn oracle_probe_fails(cs: &ConstraintSystem, bx: &IntervalBox, i: usize, p: Interval) -> bool {
    let mut full = cs.extend_box(bx);
    full.set(i, full[i].intersect(&p));
    oracle_fixpoint(cs, &full).is_empty()
}

/// Relational operator for coordinate `i` by exhaustive enumeration.
pub fn oracle_cw_relational(cs: &ConstraintSystem, bx: &IntervalBox, i: usize) -> Interval {
    narrow_by(cs.grid(), bx, i, |p| !oracle_probe_fails(cs, bx, i, p))
}

/// Chaotic iteration of the oracle functional operators to their common
/// fixpoint.
pub fn oracle_functional_bc(es: &EquationSystem, grid: &Grid, bx: &IntervalBox) -> IntervalBox {
    let mut b = bx.clone();
    loop {
        let before = b.clone();
        for (j, eq) in es.equations().iter().enumerate() {
            for i in eq.variables() {
                let v = oracle_cw_functional(es, grid, j, &b, i);
                if v.is_empty() {
                    b.make_empty();
                    return b;
                }
                b.set(i, v);
            }
        }
        if b.bits_eq(&before) {
            return b;
        }
    }
}

/// Chaotic iteration of the oracle relational operators.
pub fn oracle_relational_bc(cs: &ConstraintSystem, bx: &IntervalBox) -> IntervalBox {
    let mut b = bx.clone();
    loop {
        let before = b.clone();
        for i in 0..cs.n_primary() {
            let v = oracle_cw_relational(cs, &b, i);
            if v.is_empty() {
                b.make_empty();
                return b;
            }
            b.set(i, v);
        }
        if b.bits_eq(&before) {
            return b;
        }
    }
}

/// Point Newton iteration with a central-difference Jacobian. Returns the
/// iterate once every residual is below `tol`.
pub fn newton(es: &EquationSystem, start: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = es.dim();
    assert_eq!(es.equations().len(), n, "square system");
    let f = |x: &[f64]| -> Option<Vec<f64>> { es.equations().iter().map(|e| e.eval_real(x)).collect() };
    let mut x = start.to_vec();
    for _ in 0..100 {
        let fx = f(&x)?;
        if fx.iter().all(|r| r.abs() < tol) {
            return Some(x);
        }
        let mut jac = vec![vec![0.0; n + 1]; n];
        for c in 0..n {
            let h = 1e-7 * x[c].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            let (fp, fm) = (f(&xp)?, f(&xm)?);
            for r in 0..n {
                jac[r][c] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        for r in 0..n {
            jac[r][n] = -fx[r];
        }
        let dx = gauss(jac)?;
        for c in 0..n {
            x[c] += dx[c];
        }
    }
    None
}

/// Solves an augmented `n x (n+1)` system by elimination with partial
/// pivoting.
fn gauss(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).max_by(|&r, &s| a[r][c].abs().total_cmp(&a[s][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        for r in c + 1..n {
            let m = a[r][c] / a[c][c];
            for k in c..=n {
                a[r][k] -= m * a[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    Some(x)
}

/// Whether `x` lies in `iv` after widening each finite bound by `ulps`.
pub fn contains_within(iv: Interval, x: f64, ulps: u32) -> bool {
    let Some((mut lo, mut hi)) = iv.bounds() else {
        return false;
    };
    for _ in 0..ulps {
        lo = lo.next_down();
        hi = hi.next_up();
    }
    lo <= x && x <= hi
}

// ----------------------------------------------------------------- corpus

/// Single-expression systems: `(declarations, expression)`.
pub const EXPRESSIONS: &[(&str, &str)] = &[
    ("var x in [-3, 3];", "x + x"),
    ("var x in [0, 10];", "x*x - 4"),
    ("var x in [-3, 3];", "x^2 - 2"),
    ("var x in [-2, 2];", "x^3 - x"),
    ("var x in [-1, 1];", "x*(2 + 5*x^2) + 1"),
    ("var x in [-3, 3];", "x - x"),
    ("var x in [-3, 3];", "x / x - 1"),
    ("var x in [-2, 3];", "x*x*x - 2*x + 1"),
    ("var x in [-4, 4];", "(x - 1)*(x + 2)"),
    ("var x in [-3, 3];", "x^4 - 3*x^2 + 1"),
    ("var x in [-4, 4];", "sin(x) - 0.5"),
    ("var x in [-2, 2];", "cos(x) - x"),
    ("var x in [-3, 3];", "exp(x) - 2"),
    ("var x in [0.5, 4];", "log(x) - 0.5"),
    ("var x in [-3, 3];", "exp(sin(x)) - 1.5"),
    ("var x in [-2, 2];", "sin(x)^2 + cos(x)^2 - 1"),
    ("var x in [-1, 1];", "tan(x) - 1"),
    ("var x in [-3, 3];", "abs(x) - 1"),
    ("var x in [-3, 3]; var y in [-2, 2];", "max(x, y) - 0.5"),
    ("var x in [-3, 3]; var y in [-2, 2];", "x*y - 1"),
    ("var x in [-3, 3]; var y in [-2, 2];", "x + y - 1"),
    ("var x in [-3, 3]; var y in [-2, 2];", "x^2 + y^2 - 4"),
    ("var x in [-3, 3]; var y in [-2, 2];", "x / y - 2"),
    ("var x in [-2, 3];", "exp(-x) - x"),
    ("var x in [-3, 3];", "log(x*x + 1) - 1"),
    ("var x in [-3, 3];", "-x^2 + 3"),
    ("var x in [-3, 3]; var y in [-2, 2];", "x - y*y"),
    ("var x in [-3, 3]; var y in [-2, 2];", "(x + y)*(x - y)"),
    ("var z in [0.5, 4];", "1/z - 0.25"),
    ("var x in [-3, 3]; var y in [-2, 2];", "sin(x*y) - 0.3"),
    ("var z in [0.5, 4];", "z^-2 - 1"),
    ("var x in [-3, 3];", "max(x, x) - 1"),
    ("var x in [-3, 3]; var y in [-2, 2];", "abs(x - y) - 0.5"),
    ("var x in [-3, 3]; var y in [-2, 2];", "exp(x)*exp(y) - 3"),
    ("var x in [-3, 3]; var y in [-2, 2];", "cos(2*x) + sin(y)"),
    ("var x in [-3, 3];", "0.1*x - 0.3"),
    ("var x in [-3, 3];", "x*(x - 1)*(x - 2)"),
    ("var x in [-3, 3]; var y in [-2, 2]; var z in [0.5, 4];", "x*y*z - 1"),
];

pub fn expression_system(k: usize) -> EquationSystem {
    let (decls, e) = EXPRESSIONS[k];
    parse(&format!("{decls}\n{e} = 0;")).unwrap_or_else(|err| panic!("corpus expression {k}: {err}"))
}

/// Systems of at most three variables.
pub const SYSTEMS: &[&str] = &[
    "var x in [0, 10];\nx*x - 4 = 0;",
    "var x in [-1, 1]; var y in [-1, 1];\nx + y = 0;\nx - y = 0;",
    "var x in [-3, 3]; var y in [-3, 3];\nx^2 + y^2 = 4;\nx - y = 0;",
    "var x in [-2, 4]; var y in [-1, 5];\nx*y = 1;\nx + y = 3;",
    "var x in [-3, 3]; var y in [-5, 5];\nx^2 - y = 0;\ny - 2 = 0;",
    "var x in [-3, 3]; var y in [-3, 3]; var z in [-3, 3];\nx + y + z = 1;\nx - y = 0;\nz - x*x = 0;",
    "var x in [-2, 2]; var y in [-2, 2];\nsin(x) - y = 0;\nx - y = 0;",
    "var x in [-3, 3]; var y in [0, 5];\nexp(x) - y = 0;\ny - 2 = 0;",
    "var x in [-2, 2]; var y in [-2, 2]; var z in [-2, 2];\nx^2 + y^2 + z^2 = 3;\nx = y;\ny = z;",
    "var x in [-3, 3]; var y in [-3, 3];\nabs(x) - y = 0;\nx + y - 1 = 0;",
    "var x in [-2, 2];\nx^3 - x = 0;",
    "var x in [-3, 3]; var y in [-3, 3];\nmax(x, y) - 1 = 0;\nx + y = 0;",
    "var x1 in [-1, 1]; var x2 in [-1, 1];\nx1*(2 + 5*x1^2) + 1 - x2*(1 + x2) = 0;\nx2*(2 + 5*x2^2) + 1 - x1*(1 + x1) = 0;",
    "var x in [-3, 3];\nx + x = 1;",
    "var x in [-4, 4]; var y in [-4, 4];\nx*y - x = 0;\ny - 2 = 0;",
];

pub fn system(k: usize) -> EquationSystem {
    parse(SYSTEMS[k]).unwrap_or_else(|err| panic!("corpus system {k}: {err}"))
}

/// Every corpus system followed by every single-expression system.
pub fn all_systems() -> Vec<EquationSystem> {
    (0..SYSTEMS.len()).map(system).chain((0..EXPRESSIONS.len()).map(expression_system)).collect()
}

pub fn primary(cs: &ConstraintSystem) -> IntervalBox {
    cs.initial_box().truncated(cs.n_primary())
}

pub fn build(es: &EquationSystem, grid: Grid) -> ConstraintSystem {
    decompose(es, &grid)
}
