//! Ranges and preimage hulls of the trigonometric functions.
//!
//! Branch points such as `pi/2 + 2k*pi` are only known approximately in
//! binary64, so every location test carries a relative safety margin. A
//! margin can only make a range wider or a preimage larger, never drop a
//! true value.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::round::{down, up, widen};
use super::{Grid, Interval};

/// Beyond this magnitude argument positions within a period are unreliable
/// and the functions fall back to their trivial enclosures.
const ARG_LIMIT: f64 = 1e12;

/// Maximum number of periods scanned when narrowing a preimage.
const MAX_PERIODS: f64 = 1e6;

fn margin(v: f64) -> f64 {
    8.0 * f64::EPSILON * (v.abs() + 1.0)
}

/// Whether some `base + k * period` lies in `[a, b]` (widened by margins).
fn hits(a: f64, b: f64, base: f64, period: f64) -> bool {
    let lo = a - margin(a);
    let hi = b + margin(b);
    let k = ((lo - base) / period).ceil();
    base + k * period <= hi || base + (k - 1.0) * period >= lo
}

fn sin_point(x: f64) -> (f64, f64) {
    widen(x.sin(), x == 0.0)
}

fn cos_point(x: f64) -> (f64, f64) {
    widen(x.cos(), x == 0.0)
}

pub(crate) fn sin_range((a, b): (f64, f64)) -> (f64, f64) {
    if !(a.is_finite() && b.is_finite()) || a.abs() > ARG_LIMIT || b.abs() > ARG_LIMIT || b - a >= TAU {
        return (-1.0, 1.0);
    }
    let (sa, sb) = (sin_point(a), sin_point(b));
    let mut lo = sa.0.min(sb.0);
    let mut hi = sa.1.max(sb.1);
    if hits(a, b, FRAC_PI_2, TAU) {
        hi = 1.0;
    }
    if hits(a, b, -FRAC_PI_2, TAU) {
        lo = -1.0;
    }
    (lo.max(-1.0), hi.min(1.0))
}

pub(crate) fn cos_range((a, b): (f64, f64)) -> (f64, f64) {
    if !(a.is_finite() && b.is_finite()) || a.abs() > ARG_LIMIT || b.abs() > ARG_LIMIT || b - a >= TAU {
        return (-1.0, 1.0);
    }
    let (ca, cb) = (cos_point(a), cos_point(b));
    let mut lo = ca.0.min(cb.0);
    let mut hi = ca.1.max(cb.1);
    if hits(a, b, 0.0, TAU) {
        hi = 1.0;
    }
    if hits(a, b, PI, TAU) {
        lo = -1.0;
    }
    (lo.max(-1.0), hi.min(1.0))
}

/// A pole inside the argument yields the whole line (hull of both branches).
pub(crate) fn tan_range((a, b): (f64, f64)) -> (f64, f64) {
    const ALL: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);
    if !(a.is_finite() && b.is_finite()) || a.abs() > ARG_LIMIT || b.abs() > ARG_LIMIT || b - a >= PI {
        return ALL;
    }
    if hits(a, b, FRAC_PI_2, PI) {
        return ALL;
    }
    let ta = widen(a.tan(), a == 0.0).0;
    let tb = widen(b.tan(), b == 0.0).1;
    if ta > tb {
        return ALL;
    }
    (ta, tb)
}

/// Hull of `(union over k of branches + k * period) ∩ x`.
///
/// `branches` are given for one reference period as binary64 enclosures.
/// Returns `x` unchanged when it is unbounded, too far from the origin, or
/// spans too many periods.
fn periodic_hull(grid: &Grid, x: Interval, branches: &[(f64, f64)], period: f64) -> Interval {
    let Some((a, b)) = x.bounds() else {
        return Interval::EMPTY;
    };
    if branches.is_empty() {
        return Interval::EMPTY;
    }
    if !(a.is_finite() && b.is_finite())
        || a.abs() > ARG_LIMIT
        || b.abs() > ARG_LIMIT
        || (b - a) / period > MAX_PERIODS
    {
        return x;
    }
    let piece = |k: f64, (s, e): (f64, f64)| {
        let lo = s + k * period;
        let hi = e + k * period;
        (lo - margin(lo), hi + margin(hi))
    };
    let start = ((a - period) / period).floor() - 1.0;
    let end = ((b + period) / period).ceil() + 1.0;

    // branches of neighbouring periods may interleave, so the extreme piece
    // is searched in the first period with a hit and the one after it
    let meets = |k: f64| -> Vec<(f64, f64)> {
        branches.iter().map(|&br| piece(k, br)).filter(|&(lo, hi)| hi >= a && lo <= b).collect()
    };
    let mut lower = None;
    let mut k = start;
    while k <= end {
        let hit: Vec<(f64, f64)> = meets(k).into_iter().chain(meets(k + 1.0)).collect();
        if !meets(k).is_empty() {
            lower = hit.iter().map(|p| p.0.max(a)).reduce(f64::min);
            break;
        }
        k += 1.0;
    }
    let Some(lower) = lower else {
        return Interval::EMPTY;
    };
    let mut upper = lower;
    let mut k = end;
    while k >= start {
        if !meets(k).is_empty() {
            for (_, hi) in meets(k).into_iter().chain(meets(k - 1.0)) {
                upper = upper.max(hi.min(b));
            }
            break;
        }
        k -= 1.0;
    }
    Interval::outward(grid, lower, upper).intersect(&x)
}

fn clamp_unit(y: Interval) -> Option<(f64, f64)> {
    let (lo, hi) = y.intersect(&Interval::new(-1.0, 1.0)).bounds()?;
    Some((lo, hi))
}

/// Hull of `{ t in x | sin t in y }`.
pub(crate) fn sin_preimage(grid: &Grid, y: Interval, x: Interval) -> Interval {
    let Some((lo, hi)) = clamp_unit(y) else {
        return Interval::EMPTY;
    };
    let (alo, ahi) = (down(lo.asin()), up(hi.asin()));
    let b1 = (alo, ahi);
    let b2 = (down(PI - ahi), up(PI - alo));
    periodic_hull(grid, x, &[b1, b2], TAU)
}

/// Hull of `{ t in x | cos t in y }`.
pub(crate) fn cos_preimage(grid: &Grid, y: Interval, x: Interval) -> Interval {
    let Some((lo, hi)) = clamp_unit(y) else {
        return Interval::EMPTY;
    };
    // acos is decreasing
    let (alo, ahi) = (down(hi.acos()), up(lo.acos()));
    periodic_hull(grid, x, &[(alo, ahi), (-ahi, -alo)], TAU)
}

/// Hull of `{ t in x | tan t in y }`.
pub(crate) fn tan_preimage(grid: &Grid, y: Interval, x: Interval) -> Interval {
    let Some((lo, hi)) = y.bounds() else {
        return Interval::EMPTY;
    };
    let alo = if lo == f64::NEG_INFINITY { -FRAC_PI_2 } else { lo.atan() };
    let ahi = if hi == f64::INFINITY { FRAC_PI_2 } else { hi.atan() };
    periodic_hull(grid, x, &[(down(alo), up(ahi))], PI)
}
