//! Outward-rounded interval extensions of the admissible operations.

use std::fmt;

use super::round::{self, widen};
use super::trig;
use super::{Grid, Interval};

/// The admissible operations. `Neg` only appears in expressions; it is
/// evaluated (and decomposed) as `0 - x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Max,
    Abs,
    Pow(i32),
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Neg,
}

impl Op {
    pub fn arity(&self) -> usize {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Max => 2,
            _ => 1,
        }
    }

    /// Function-call name in the equation grammar, if the op is written as one.
    pub fn function_name(&self) -> Option<&'static str> {
        Some(match self {
            Op::Max => "max",
            Op::Abs => "abs",
            Op::Exp => "exp",
            Op::Log => "log",
            Op::Sin => "sin",
            Op::Cos => "cos",
            Op::Tan => "tan",
            _ => return None,
        })
    }

    pub fn from_function_name(name: &str) -> Option<Op> {
        Some(match name {
            "max" => Op::Max,
            "abs" => Op::Abs,
            "exp" => Op::Exp,
            "log" => Op::Log,
            "sin" => Op::Sin,
            "cos" => Op::Cos,
            "tan" => Op::Tan,
            _ => return None,
        })
    }

    /// Real-valued evaluation; `None` outside the domain.
    pub fn apply_real(&self, args: &[f64]) -> Option<f64> {
        let v = match *self {
            Op::Add => args[0] + args[1],
            Op::Sub => args[0] - args[1],
            Op::Mul => args[0] * args[1],
            Op::Div => {
                if args[1] == 0.0 {
                    return None;
                }
                args[0] / args[1]
            }
            Op::Max => args[0].max(args[1]),
            Op::Abs => args[0].abs(),
            Op::Pow(k) => {
                if k < 0 && args[0] == 0.0 {
                    return None;
                }
                args[0].powi(k)
            }
            Op::Exp => args[0].exp(),
            Op::Log => {
                if args[0] <= 0.0 {
                    return None;
                }
                args[0].ln()
            }
            Op::Sin => args[0].sin(),
            Op::Cos => args[0].cos(),
            Op::Tan => args[0].tan(),
            Op::Neg => -args[0],
        };
        Some(v)
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Add => write!(f, "+"),
            Op::Sub => write!(f, "-"),
            Op::Mul => write!(f, "*"),
            Op::Div => write!(f, "/"),
            Op::Pow(k) => write!(f, "^{}", k),
            Op::Neg => write!(f, "neg"),
            other => write!(f, "{}", other.function_name().unwrap_or("?")),
        }
    }
}

/// Smallest grid interval containing `{ f(x1..xk) | xi in args[i] }`.
///
/// EMPTY when any argument is EMPTY or no argument tuple lies in the domain.
pub fn extend(grid: &Grid, op: Op, args: &[Interval]) -> Interval {
    debug_assert_eq!(args.len(), op.arity());
    let mut bounds = [(0.0, 0.0); 2];
    for (slot, a) in bounds.iter_mut().zip(args) {
        match a.bounds() {
            Some(b) => *slot = b,
            None => return Interval::EMPTY,
        }
    }
    let (lo, hi) = match op {
        Op::Add => {
            let ((a, b), (c, d)) = (bounds[0], bounds[1]);
            (round::add_down(a, c), round::add_up(b, d))
        }
        Op::Sub => sub_raw(bounds[0], bounds[1]),
        Op::Neg => sub_raw((0.0, 0.0), bounds[0]),
        Op::Mul => mul_raw(bounds[0], bounds[1]),
        Op::Div => match div_raw(bounds[0], bounds[1]) {
            Some(r) => r,
            None => return Interval::EMPTY,
        },
        Op::Max => {
            let ((a, b), (c, d)) = (bounds[0], bounds[1]);
            (a.max(c), b.max(d))
        }
        Op::Abs => abs_raw(bounds[0]),
        Op::Pow(k) => match pow_raw(bounds[0], k) {
            Some(r) => r,
            None => return Interval::EMPTY,
        },
        Op::Exp => exp_raw(bounds[0]),
        Op::Log => match log_raw(bounds[0]) {
            Some(r) => r,
            None => return Interval::EMPTY,
        },
        Op::Sin => trig::sin_range(bounds[0]),
        Op::Cos => trig::cos_range(bounds[0]),
        Op::Tan => trig::tan_range(bounds[0]),
    };
    Interval::outward(grid, lo, hi)
}

fn sub_raw((a, b): (f64, f64), (c, d): (f64, f64)) -> (f64, f64) {
    (round::sub_down(a, d), round::sub_up(b, c))
}

pub(crate) fn mul_raw((a, b): (f64, f64), (c, d): (f64, f64)) -> (f64, f64) {
    let lo = [
        round::mul_down(a, c),
        round::mul_down(a, d),
        round::mul_down(b, c),
        round::mul_down(b, d),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    let hi = [
        round::mul_up(a, c),
        round::mul_up(a, d),
        round::mul_up(b, c),
        round::mul_up(b, d),
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Quotient hull with the divisor's zero excluded; `None` when the divisor
/// is exactly `[0, 0]`.
fn div_raw(x: (f64, f64), y: (f64, f64)) -> Option<(f64, f64)> {
    let (p1, p2) = div_pieces_raw(x, y)?;
    Some(match (p1, p2) {
        (Some(p), None) | (None, Some(p)) => p,
        (Some(p), Some(q)) => (p.0.min(q.0), p.1.max(q.1)),
        (None, None) => return None,
    })
}

type Piece = Option<(f64, f64)>;

/// Extended division `{ a / b | a in x, b in y, b != 0 }` as at most two
/// connected pieces. `None` when `y = [0, 0]`.
fn div_pieces_raw((a, b): (f64, f64), (c, d): (f64, f64)) -> Option<(Piece, Piece)> {
    use round::{div_down as dd, div_up as du};
    const NEG: f64 = f64::NEG_INFINITY;
    const POS: f64 = f64::INFINITY;
    if c == 0.0 && d == 0.0 {
        return None;
    }
    if c > 0.0 {
        return Some((
            Some(if a >= 0.0 {
                (dd(a, d), du(b, c))
            } else if b <= 0.0 {
                (dd(a, c), du(b, d))
            } else {
                (dd(a, c), du(b, c))
            }),
            None,
        ));
    }
    if d < 0.0 {
        return Some((
            Some(if a >= 0.0 {
                (dd(b, d), du(a, c))
            } else if b <= 0.0 {
                (dd(b, c), du(a, d))
            } else {
                (dd(b, d), du(a, d))
            }),
            None,
        ));
    }
    // zero lies in the divisor
    if a == 0.0 && b == 0.0 {
        return Some((Some((0.0, 0.0)), None));
    }
    if a <= 0.0 && b >= 0.0 {
        return Some((Some((NEG, POS)), None));
    }
    Some(if a > 0.0 {
        match (c == 0.0, d == 0.0) {
            (true, _) => (Some((dd(a, d), POS)), None),
            (_, true) => (Some((NEG, du(a, c))), None),
            _ => (Some((NEG, du(a, c))), Some((dd(a, d), POS))),
        }
    } else {
        match (c == 0.0, d == 0.0) {
            (true, _) => (Some((NEG, du(b, d))), None),
            (_, true) => (Some((dd(b, c), POS)), None),
            _ => (Some((NEG, du(b, d))), Some((dd(b, c), POS))),
        }
    })
}

/// Extended quotient `x / y` as up to two grid intervals; both EMPTY when
/// no quotient exists.
pub(crate) fn div_pieces(grid: &Grid, x: Interval, y: Interval) -> (Interval, Interval) {
    let (Some(xb), Some(yb)) = (x.bounds(), y.bounds()) else {
        return (Interval::EMPTY, Interval::EMPTY);
    };
    match div_pieces_raw(xb, yb) {
        None => (Interval::EMPTY, Interval::EMPTY),
        Some((p, q)) => {
            let conv = |piece: Piece| piece.map_or(Interval::EMPTY, |(l, h)| Interval::outward(grid, l, h));
            (conv(p), conv(q))
        }
    }
}

fn abs_raw((a, b): (f64, f64)) -> (f64, f64) {
    if a >= 0.0 {
        (a, b)
    } else if b <= 0.0 {
        (-b, -a)
    } else {
        (0.0, (-a).max(b))
    }
}

fn pow_nonneg_raw(a: f64, b: f64, k: u32) -> (f64, f64) {
    (round::powi_nonneg_down(a, k), round::powi_nonneg_up(b, k))
}

fn pow_raw((a, b): (f64, f64), k: i32) -> Option<(f64, f64)> {
    if k == 0 {
        return Some((1.0, 1.0));
    }
    let n = k.unsigned_abs();
    let pos = if a >= 0.0 {
        pow_nonneg_raw(a, b, n)
    } else if b <= 0.0 {
        let (l, h) = pow_nonneg_raw(-b, -a, n);
        if n % 2 == 0 {
            (l, h)
        } else {
            (-h, -l)
        }
    } else if n % 2 == 0 {
        (0.0, round::powi_nonneg_up((-a).max(b), n))
    } else {
        (-round::powi_nonneg_up(-a, n), round::powi_nonneg_up(b, n))
    };
    if k > 0 {
        Some(pos)
    } else {
        div_raw((1.0, 1.0), pos)
    }
}

/// Preimage of `y` under `x -> x^k` intersected with `x`, as a hull.
pub(crate) fn pow_preimage(grid: &Grid, k: i32, y: Interval, x: Interval) -> Interval {
    if y.is_empty() || x.is_empty() {
        return Interval::EMPTY;
    }
    if k == 0 {
        return if y.contains(1.0) { x } else { Interval::EMPTY };
    }
    // reduce negative exponents to positive ones: x^k = 1 / x^|k|
    let (p1, p2) = if k < 0 {
        div_pieces(grid, Interval::point(1.0), y)
    } else {
        (y, Interval::EMPTY)
    };
    let n = k.unsigned_abs();
    let mut out = Interval::EMPTY;
    for piece in [p1, p2] {
        let Some((lo, hi)) = piece.bounds() else { continue };
        if n % 2 == 1 {
            let r_lo = signed_root(lo, n, false);
            let r_hi = signed_root(hi, n, true);
            out = out.hull(&Interval::outward(grid, r_lo, r_hi).intersect(&x));
        } else {
            if hi < 0.0 {
                continue;
            }
            let lo = lo.max(0.0);
            let r_lo = round::root_down(lo, n);
            let r_hi = if hi.is_infinite() { f64::INFINITY } else { round::root_up(hi, n) };
            let pos = Interval::outward(grid, r_lo, r_hi);
            let neg = Interval::outward(grid, -r_hi, -r_lo);
            out = out.hull(&pos.intersect(&x)).hull(&neg.intersect(&x));
        }
    }
    if k < 0 {
        // x = 0 never satisfies a negative power
        if out.lo() == 0.0 && out.hi() == 0.0 {
            return Interval::EMPTY;
        }
    }
    out
}

/// Odd real root with directed rounding, sign-aware.
fn signed_root(v: f64, n: u32, toward_up: bool) -> f64 {
    if v.is_infinite() {
        return v;
    }
    if v >= 0.0 {
        if toward_up {
            round::root_up(v, n)
        } else {
            round::root_down(v, n)
        }
    } else if toward_up {
        -round::root_down(-v, n)
    } else {
        -round::root_up(-v, n)
    }
}

fn exp_raw((a, b): (f64, f64)) -> (f64, f64) {
    let lo = if a == f64::NEG_INFINITY {
        0.0
    } else {
        widen(a.exp(), a == 0.0).0.max(0.0)
    };
    let hi = if b == f64::INFINITY {
        f64::INFINITY
    } else {
        widen(b.exp(), b == 0.0).1
    };
    (lo, hi)
}

fn log_raw((a, b): (f64, f64)) -> Option<(f64, f64)> {
    if b <= 0.0 {
        return None;
    }
    let lo = if a <= 0.0 {
        f64::NEG_INFINITY
    } else if a == f64::INFINITY {
        f64::MAX
    } else {
        widen(a.ln(), a == 1.0).0
    };
    let hi = if b == f64::INFINITY {
        f64::INFINITY
    } else {
        widen(b.ln(), b == 1.0).1
    };
    Some((lo, hi))
}
