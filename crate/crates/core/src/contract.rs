//! Per-atom contraction operators.
//!
//! For `x0 = f(x1, .., xk)` the output is narrowed by forward evaluation and
//! each input by the hull of its preimage, repeated until nothing changes.
//! An atom whose inputs repeat a variable (`x * x`, `x - x`, ...) is
//! evaluated forward with the natural extension, exactly as interval
//! evaluation of the source expression would, and narrowed backward through
//! the relation it actually denotes (`x^2`, `0`, ...).

use crate::decompose::Atom;
use crate::interval::{
    cos_preimage, div_pieces, extend, pow_preimage, sin_preimage, tan_preimage, Grid, Interval, IntervalBox,
    Op,
};

/// Safety cap on forward/backward rounds within one activation.
const MAX_ROUNDS: usize = 64;

/// Result of one contractor activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Revised {
    /// The atom's variables are at a local fixpoint.
    Stable,
    /// The round cap was reached before the local fixpoint.
    Partial,
    /// Some interval became empty.
    Failed,
}

/// Applies the contractor of `atom` to `b` in place.
///
/// Indices of variables whose interval changed are appended to `changed`
/// (each at most once). On failure the empty interval is stored in `b`.
pub fn contract_atom(grid: &Grid, atom: &Atom, b: &mut IntervalBox, changed: &mut Vec<usize>) -> Revised {
    match atom {
        Atom::Relational(v) => {
            let cur = b[*v];
            let new = cur.intersect(&Interval::point(0.0));
            if new != cur {
                b.set(*v, new);
                changed.push(*v);
            }
            if new.is_empty() {
                Revised::Failed
            } else {
                Revised::Stable
            }
        }
        Atom::Functional { op, output, inputs } => {
            let n = inputs.len() + 1;
            let mut buf = [Interval::EMPTY; 3];
            buf[0] = b[*output];
            for (slot, &i) in buf[1..n].iter_mut().zip(inputs) {
                *slot = b[i];
            }
            let vals = &mut buf[..n];
            if vals.iter().any(Interval::is_empty) {
                return Revised::Failed;
            }
            let repeated = inputs.len() == 2 && inputs[0] == inputs[1];
            let status = revise(grid, *op, repeated, vals);
            let mut store = |i: usize, v: Interval| {
                if b[i] != v {
                    b.set(i, v);
                    if !changed.contains(&i) {
                        changed.push(i);
                    }
                }
            };
            if status == Revised::Failed {
                // record the failure on the output variable
                store(*output, Interval::EMPTY);
                return status;
            }
            store(*output, vals[0]);
            for (k, &i) in inputs.iter().enumerate() {
                store(i, vals[k + 1]);
            }
            status
        }
    }
}

/// Narrows `vals = [out, in1, ..]` to a local fixpoint.
fn revise(grid: &Grid, op: Op, repeated: bool, vals: &mut [Interval]) -> Revised {
    for _ in 0..MAX_ROUNDS {
        let mut before = [Interval::EMPTY; 3];
        before[..vals.len()].copy_from_slice(vals);
        let fwd = extend(grid, op, &vals[1..]);
        vals[0] = vals[0].intersect(&fwd);
        if vals[0].is_empty() {
            return Revised::Failed;
        }
        if repeated {
            let x = backward_repeated(grid, op, vals[0], vals[1]);
            vals[1] = x;
            vals[2] = x;
        } else {
            backward(grid, op, vals);
        }
        if vals[1..].iter().any(Interval::is_empty) {
            return Revised::Failed;
        }
        if *vals == before[..vals.len()] {
            return Revised::Stable;
        }
    }
    Revised::Partial
}

/// Narrows `x` to `{x : x * d in num for some d in den}`.
fn hull_of_pieces(grid: &Grid, x: Interval, num: Interval, den: Interval) -> Interval {
    if num.contains(0.0) && den.contains(0.0) {
        return x;
    }
    let (p, q) = div_pieces(grid, num, den);
    p.intersect(&x).hull(&q.intersect(&x))
}

/// Backward step for distinct input variables.
fn backward(grid: &Grid, op: Op, vals: &mut [Interval]) {
    let z = vals[0];
    match op {
        Op::Add => {
            vals[1] = vals[1].intersect(&extend(grid, Op::Sub, &[z, vals[2]]));
            vals[2] = vals[2].intersect(&extend(grid, Op::Sub, &[z, vals[1]]));
        }
        Op::Sub => {
            vals[1] = vals[1].intersect(&extend(grid, Op::Add, &[z, vals[2]]));
            vals[2] = vals[2].intersect(&extend(grid, Op::Sub, &[vals[1], z]));
        }
        Op::Mul => {
            vals[1] = hull_of_pieces(grid, vals[1], z, vals[2]);
            vals[2] = hull_of_pieces(grid, vals[2], z, vals[1]);
        }
        Op::Div => {
            // z = x / y with y != 0, so x = z * y and y = x / z
            let y = vals[2];
            let y_nonzero = !(y.lo() == 0.0 && y.hi() == 0.0);
            vals[1] = if y_nonzero {
                vals[1].intersect(&extend(grid, Op::Mul, &[z, y]))
            } else {
                Interval::EMPTY
            };
            vals[2] = hull_of_pieces(grid, vals[2], vals[1], z);
            if vals[2].lo() == 0.0 && vals[2].hi() == 0.0 {
                vals[2] = Interval::EMPTY;
            }
        }
        Op::Max => {
            let (x, y) = (vals[1], vals[2]);
            vals[1] = max_input(x, y, z);
            vals[2] = max_input(y, vals[1], z);
        }
        Op::Abs => {
            let x = vals[1];
            let pos = z.intersect(&Interval::new(0.0, f64::INFINITY));
            let neg = extend(grid, Op::Neg, &[pos]);
            vals[1] = x.intersect(&pos).hull(&x.intersect(&neg));
        }
        Op::Neg => {
            vals[1] = vals[1].intersect(&extend(grid, Op::Neg, &[z]));
        }
        Op::Pow(k) => vals[1] = pow_preimage(grid, k, z, vals[1]),
        Op::Exp => {
            let pos = z.intersect(&Interval::new(0.0, f64::INFINITY));
            vals[1] = vals[1].intersect(&extend(grid, Op::Log, &[pos]));
        }
        Op::Log => vals[1] = vals[1].intersect(&extend(grid, Op::Exp, &[z])),
        Op::Sin => vals[1] = sin_preimage(grid, z, vals[1]),
        Op::Cos => vals[1] = cos_preimage(grid, z, vals[1]),
        Op::Tan => vals[1] = tan_preimage(grid, z, vals[1]),
    }
}

/// Hull of `{ x in X | max(x, y) in Z for some y in Y }`.
fn max_input(x: Interval, y: Interval, z: Interval) -> Interval {
    // x is the maximum: x in Z and x >= some y
    let own = x.intersect(&z).intersect(&Interval::new(y.lo(), f64::INFINITY));
    // y is the maximum: y in Z and x <= y
    let yz = y.intersect(&z);
    let other = if yz.is_empty() {
        Interval::EMPTY
    } else {
        x.intersect(&Interval::new(f64::NEG_INFINITY, yz.hi()))
    };
    own.hull(&other)
}

/// Backward step for `z = op(x, x)`.
fn backward_repeated(grid: &Grid, op: Op, z: Interval, x: Interval) -> Interval {
    match op {
        Op::Add => x.intersect(&extend(grid, Op::Div, &[z, Interval::point(2.0)])),
        Op::Mul => pow_preimage(grid, 2, z, x),
        Op::Sub => {
            if z.contains(0.0) {
                x
            } else {
                Interval::EMPTY
            }
        }
        Op::Div => {
            let nonzero = !(x.lo() == 0.0 && x.hi() == 0.0);
            if z.contains(1.0) && nonzero {
                x
            } else {
                Interval::EMPTY
            }
        }
        Op::Max => x.intersect(&z),
        _ => x,
    }
}
