//! Grid-parameterized intervals and boxes.
//!
//! An [`Interval`] is either the distinguished empty value or a closed
//! connected set of reals whose finite bounds lie on a [`Grid`]. Unbounded
//! sides use `-inf` / `+inf`. All arithmetic in [`arith`] rounds outward onto
//! the grid, so every result contains the exact image of its arguments.

mod arith;
mod grid;
pub(crate) mod round;
mod trig;

use std::fmt;

use thiserror::Error;

pub use arith::{extend, Op};
pub(crate) use arith::{div_pieces, pow_preimage};
pub use grid::{Grid, GridError, UniformGrid};
pub(crate) use grid::norm;
pub(crate) use trig::{cos_preimage, sin_preimage, tan_preimage};

#[derive(Debug, Error, PartialEq)]
pub enum IntervalError {
    #[error("interval is empty")]
    Empty,
    #[error("interval {0} is canonical and has no interior grid point")]
    Canonical(Interval),
}

/// A closed interval with grid bounds, or EMPTY.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval(Option<(f64, f64)>);

impl Interval {
    pub const EMPTY: Interval = Interval(None);
    pub const ENTIRE: Interval = Interval(Some((f64::NEG_INFINITY, f64::INFINITY)));

    /// Interval from bounds already on the grid. Returns EMPTY when
    /// `lo > hi` or when a bound excludes every real.
    pub fn new(lo: f64, hi: f64) -> Interval {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            Interval::EMPTY
        } else {
            Interval(Some((norm(lo), norm(hi))))
        }
    }

    pub fn point(x: f64) -> Interval {
        Interval::new(x, x)
    }

    /// Smallest grid interval containing the real interval `[lo, hi]`, where
    /// `lo` and `hi` are valid binary64 enclosure bounds.
    pub fn outward(grid: &Grid, lo: f64, hi: f64) -> Interval {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Interval::EMPTY;
        }
        Interval::new(grid.round_down(lo), grid.round_up(hi))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.0
    }

    /// Lower bound; `+inf` for EMPTY so that EMPTY never compares as "below".
    pub fn lo(&self) -> f64 {
        self.0.map_or(f64::INFINITY, |b| b.0)
    }

    /// Upper bound; `-inf` for EMPTY.
    pub fn hi(&self) -> f64 {
        self.0.map_or(f64::NEG_INFINITY, |b| b.1)
    }

    pub fn is_bounded(&self) -> bool {
        self.0.is_some_and(|(a, b)| a.is_finite() && b.is_finite())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.0.is_some_and(|(a, b)| a <= x && x <= b)
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// Set inclusion; EMPTY is a subset of everything.
    pub fn is_subset(&self, other: &Interval) -> bool {
        match (self.0, other.0) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((a, b)), Some((c, d))) => c <= a && b <= d,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        match (self.0, other.0) {
            (Some((a, b)), Some((c, d))) => Interval::new(a.max(c), b.min(d)),
            _ => Interval::EMPTY,
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        match (self.0, other.0) {
            (None, _) => *other,
            (_, None) => *self,
            (Some((a, b)), Some((c, d))) => Interval::new(a.min(c), b.max(d)),
        }
    }

    /// `hi - lo` rounded up; `+inf` when unbounded, `0` for EMPTY.
    pub fn width(&self) -> f64 {
        match self.0 {
            None => 0.0,
            Some((a, b)) => round::sub_up(b, a),
        }
    }

    /// Canonical: non-empty and containing no grid point strictly inside,
    /// i.e. `[a, a]` or `[a, succ(a)]` (including `[-inf, min]`, `[max, +inf]`).
    pub fn is_canonical(&self, grid: &Grid) -> bool {
        match self.0 {
            None => false,
            Some((a, b)) => (a == b && a.is_finite()) || grid.succ(a) == b,
        }
    }

    /// Grid point strictly inside the interval nearest to the arithmetic mean
    /// of the bounds, with infinite bounds clamped to the finite grid range.
    pub fn midpoint(&self, grid: &Grid) -> Result<f64, IntervalError> {
        let (a, b) = self.0.ok_or(IntervalError::Empty)?;
        if self.is_canonical(grid) {
            return Err(IntervalError::Canonical(*self));
        }
        let ca = a.max(grid.min_finite());
        let cb = b.min(grid.max_finite());
        let mean = ca * 0.5 + cb * 0.5;
        let mut m = grid.nearest(mean);
        if m <= a {
            m = grid.succ(a);
        }
        if m >= b {
            m = grid.pred(b);
        }
        debug_assert!(a < m && m < b);
        Ok(norm(m))
    }

    /// Splits at the midpoint into `[lo, m]` and `[m, hi]`.
    pub fn bisect(&self, grid: &Grid) -> Result<(Interval, Interval), IntervalError> {
        let m = self.midpoint(grid)?;
        Ok((Interval::new(self.lo(), m), Interval::new(m, self.hi())))
    }

    /// Textual form `[lo, hi]` / `empty`. Binary64 bounds use 17 significant
    /// digits; uniform-grid bounds are exact short decimals.
    pub fn to_text(&self, grid: &Grid) -> String {
        match self.0 {
            None => "empty".to_string(),
            Some((a, b)) => format!("[{}, {}]", fmt_bound(a, grid), fmt_bound(b, grid)),
        }
    }

    /// Bit-level equality (bounds compared by representation).
    pub fn bits_eq(&self, other: &Interval) -> bool {
        match (self.0, other.0) {
            (None, None) => true,
            (Some((a, b)), Some((c, d))) => a.to_bits() == c.to_bits() && b.to_bits() == d.to_bits(),
            _ => false,
        }
    }
}

/// Formats one bound in the interval serialization.
pub fn fmt_bound(x: f64, grid: &Grid) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x == f64::INFINITY {
        "+inf".to_string()
    } else {
        match grid {
            Grid::Binary64 => format!("{:.16e}", x),
            Grid::Uniform(_) => format!("{}", x),
        }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => write!(f, "empty"),
            Some((a, b)) => write!(f, "[{:?}, {:?}]", a, b),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => write!(f, "empty"),
            Some((a, b)) => write!(f, "[{}, {}]", a, b),
        }
    }
}

/// Cartesian product of intervals, one per variable index.
#[derive(Clone, PartialEq)]
pub struct IntervalBox(Vec<Interval>);

impl IntervalBox {
    pub fn new(components: Vec<Interval>) -> Self {
        IntervalBox(components)
    }

    pub fn entire(n: usize) -> Self {
        IntervalBox(vec![Interval::ENTIRE; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().any(Interval::is_empty)
    }

    pub fn get(&self, i: usize) -> Interval {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, iv: Interval) {
        self.0[i] = iv;
    }

    pub fn components(&self) -> &[Interval] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.0.iter()
    }

    /// Marks the box as failed by emptying every component.
    pub fn make_empty(&mut self) {
        for c in &mut self.0 {
            *c = Interval::EMPTY;
        }
    }

    /// Componentwise containment; every empty box is below every box.
    pub fn is_subset(&self, other: &IntervalBox) -> bool {
        self.is_empty() || self.0.iter().zip(&other.0).all(|(a, b)| a.is_subset(b))
    }

    pub fn intersect(&self, other: &IntervalBox) -> IntervalBox {
        IntervalBox(self.0.iter().zip(&other.0).map(|(a, b)| a.intersect(b)).collect())
    }

    pub fn hull(&self, other: &IntervalBox) -> IntervalBox {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        IntervalBox(self.0.iter().zip(&other.0).map(|(a, b)| a.hull(b)).collect())
    }

    /// Largest component width.
    pub fn max_width(&self) -> f64 {
        self.0.iter().map(Interval::width).fold(0.0, f64::max)
    }

    pub fn bits_eq(&self, other: &IntervalBox) -> bool {
        if self.is_empty() && other.is_empty() {
            return true;
        }
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.bits_eq(b))
    }

    /// Prefix of the first `n` components.
    pub fn truncated(&self, n: usize) -> IntervalBox {
        IntervalBox(self.0[..n].to_vec())
    }
}

impl std::ops::Index<usize> for IntervalBox {
    type Output = Interval;

    fn index(&self, i: usize) -> &Interval {
        &self.0[i]
    }
}

impl fmt::Debug for IntervalBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "empty");
        }
        f.debug_list().entries(&self.0).finish()
    }
}
