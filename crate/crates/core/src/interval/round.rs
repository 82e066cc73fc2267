//! Directed rounding of binary64 operations.
//!
//! Every function returns a bound that is guaranteed to lie on the stated side
//! of the exact real result. Basic operations use error-free transformations
//! (TwoSum, fused multiply-add residuals) so that exact results stay exact;
//! only inexact results move by one ulp.

/// Below this magnitude the fma residual may itself be rounded, so results
/// are widened unconditionally.
const TINY: f64 = 1e-290;

#[inline]
pub(crate) fn down(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x.next_down()
    }
}

#[inline]
pub(crate) fn up(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x.next_up()
    }
}

/// Map an overflowed lower bound back to the largest finite value.
#[inline]
fn finish_down(r: f64, operands_finite: bool) -> f64 {
    if r == f64::INFINITY && operands_finite {
        f64::MAX
    } else {
        r
    }
}

#[inline]
fn finish_up(r: f64, operands_finite: bool) -> f64 {
    if r == f64::NEG_INFINITY && operands_finite {
        f64::MIN
    } else {
        r
    }
}

/// Sign of `(a + b) - fl(a + b)`.
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return finish_down(s, a.is_finite() && b.is_finite());
    }
    if two_sum_err(a, b, s) < 0.0 {
        down(s)
    } else {
        s
    }
}

pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return finish_up(s, a.is_finite() && b.is_finite());
    }
    if two_sum_err(a, b, s) > 0.0 {
        up(s)
    } else {
        s
    }
}

pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

/// Product with the interval convention `0 * inf = 0`.
fn mul_raw(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

pub fn mul_down(a: f64, b: f64) -> f64 {
    let p = mul_raw(a, b);
    if p == 0.0 && (a == 0.0 || b == 0.0) {
        return 0.0;
    }
    if !p.is_finite() {
        return finish_down(p, a.is_finite() && b.is_finite());
    }
    if p.abs() < TINY {
        return down(p);
    }
    if a.mul_add(b, -p) < 0.0 {
        down(p)
    } else {
        p
    }
}

pub fn mul_up(a: f64, b: f64) -> f64 {
    let p = mul_raw(a, b);
    if p == 0.0 && (a == 0.0 || b == 0.0) {
        return 0.0;
    }
    if !p.is_finite() {
        return finish_up(p, a.is_finite() && b.is_finite());
    }
    if p.abs() < TINY {
        return up(p);
    }
    if a.mul_add(b, -p) > 0.0 {
        up(p)
    } else {
        p
    }
}

/// Quotient for `b != 0`; callers never divide infinity by infinity.
fn div_dir(a: f64, b: f64, toward_up: bool) -> f64 {
    debug_assert!(b != 0.0);
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if b.is_infinite() {
        // finite / inf is zero exactly
        return 0.0;
    }
    if !q.is_finite() {
        let finite = a.is_finite();
        return if toward_up {
            finish_up(q, finite)
        } else {
            finish_down(q, finite)
        };
    }
    if q.abs() < TINY || b.abs() < TINY {
        return if toward_up { up(q) } else { down(q) };
    }
    // exact residual: a - q*b
    let r = (-q).mul_add(b, a);
    let err_sign = r * b.signum();
    if toward_up {
        if err_sign > 0.0 {
            up(q)
        } else {
            q
        }
    } else if err_sign < 0.0 {
        down(q)
    } else {
        q
    }
}

pub fn div_down(a: f64, b: f64) -> f64 {
    div_dir(a, b, false)
}

pub fn div_up(a: f64, b: f64) -> f64 {
    div_dir(a, b, true)
}

pub fn sqrt_down(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::MAX;
    }
    let s = x.sqrt();
    if x < TINY {
        return down(s).max(0.0);
    }
    if (-s).mul_add(s, x) < 0.0 {
        down(s)
    } else {
        s
    }
}

pub fn sqrt_up(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let s = x.sqrt();
    if x < TINY {
        return up(s);
    }
    if (-s).mul_add(s, x) > 0.0 {
        up(s)
    } else {
        s
    }
}

/// Lower bound of `a^k` for `a >= 0`.
pub fn powi_nonneg_down(a: f64, k: u32) -> f64 {
    debug_assert!(a >= 0.0);
    let mut acc = 1.0;
    for _ in 0..k {
        acc = mul_down(acc, a);
    }
    acc.max(0.0)
}

/// Upper bound of `a^k` for `a >= 0`.
pub fn powi_nonneg_up(a: f64, k: u32) -> f64 {
    debug_assert!(a >= 0.0);
    let mut acc = 1.0;
    for _ in 0..k {
        acc = mul_up(acc, a);
    }
    acc
}

/// Lower bound of the real `k`-th root of `x >= 0`.
pub fn root_down(x: f64, k: u32) -> f64 {
    debug_assert!(k >= 1);
    if x <= 0.0 {
        return 0.0;
    }
    match k {
        1 => return x,
        2 => return sqrt_down(x),
        _ => {}
    }
    if x.is_infinite() {
        return f64::MAX;
    }
    let mut r = x.powf(1.0 / k as f64);
    if !r.is_finite() {
        r = f64::MAX;
    }
    // shrink geometrically until r^k provably does not exceed x
    let mut rel = f64::EPSILON;
    let mut steps = 0;
    while r > 0.0 && powi_nonneg_up(r, k) > x {
        // single ulps first so exact roots are found, then geometric
        r = if steps < 8 {
            r.next_down()
        } else {
            rel *= 2.0;
            (r * (1.0 - rel)).min(r.next_down())
        }
        .max(0.0);
        steps += 1;
    }
    r
}

/// Upper bound of the real `k`-th root of `x >= 0`.
pub fn root_up(x: f64, k: u32) -> f64 {
    debug_assert!(k >= 1);
    if x <= 0.0 {
        return 0.0;
    }
    match k {
        1 => return x,
        2 => return sqrt_up(x),
        _ => {}
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let mut r = x.powf(1.0 / k as f64);
    if r == 0.0 {
        r = f64::MIN_POSITIVE;
    }
    let mut rel = f64::EPSILON;
    let mut steps = 0;
    while r.is_finite() && powi_nonneg_down(r, k) < x {
        r = if steps < 8 {
            r.next_up()
        } else {
            rel *= 2.0;
            (r * (1.0 + rel)).max(r.next_up())
        };
        steps += 1;
    }
    r
}

/// Enclosure of a libm result: exact at the listed points, otherwise one ulp
/// of widening on each side.
pub(crate) fn widen(v: f64, exact: bool) -> (f64, f64) {
    if exact {
        (v, v)
    } else if v.is_infinite() {
        (v, v)
    } else {
        (down(v), up(v))
    }
}
