use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// The finite set of representable bounds, plus the two ideal elements.
///
/// `Binary64` is the hardware grid of finite `f64` values. `Uniform` is a
/// coarse grid `{k * step}` on `[min, max]`, small enough that definitions
/// phrased over "all canonical intervals" can be checked by enumeration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Grid {
    Binary64,
    Uniform(UniformGrid),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformGrid {
    step: f64,
    min: f64,
    max: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid step must be a positive power of two, got {0}")]
    Step(f64),
    #[error("grid range [{0}, {1}] must contain 0 and lie on multiples of the step")]
    Range(f64, f64),
    #[error("grid range is too large to enumerate ({0} points)")]
    TooLarge(f64),
    #[error("cannot parse grid `{0}`: expected `f64` or `test:STEP,LO,HI`")]
    Syntax(String),
}

impl UniformGrid {
    /// Builds the grid of multiples of `step` in `[min, max]`.
    ///
    /// The step must be a power of two so every grid point and every
    /// quotient by the step is exact in binary64.
    pub fn new(step: f64, min: f64, max: f64) -> Result<Self, GridError> {
        if !(step > 0.0) || !step.is_finite() || step.log2().fract() != 0.0 {
            return Err(GridError::Step(step));
        }
        if !(min <= 0.0 && max >= 0.0)
            || (min / step).fract() != 0.0
            || (max / step).fract() != 0.0
            || !min.is_finite()
            || !max.is_finite()
        {
            return Err(GridError::Range(min, max));
        }
        let points = (max - min) / step + 1.0;
        if points > 1e9 {
            return Err(GridError::TooLarge(points));
        }
        Ok(UniformGrid { step, min, max })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// All finite grid points in increasing order.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let n = ((self.max - self.min) / self.step) as i64;
        (0..=n).map(move |k| norm(self.min + k as f64 * self.step))
    }
}

/// Collapses `-0.0` so equal bounds have equal bits.
#[inline]
pub(crate) fn norm(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

impl Grid {
    /// Step-0.5 grid on `[-10, 10]`, the reference coarse grid.
    pub fn coarse() -> Grid {
        Grid::Uniform(UniformGrid::new(0.5, -10.0, 10.0).expect("valid grid"))
    }

    pub fn uniform(step: f64, min: f64, max: f64) -> Result<Grid, GridError> {
        UniformGrid::new(step, min, max).map(Grid::Uniform)
    }

    /// Largest finite grid element.
    pub fn max_finite(&self) -> f64 {
        match self {
            Grid::Binary64 => f64::MAX,
            Grid::Uniform(g) => g.max,
        }
    }

    /// Smallest finite grid element.
    pub fn min_finite(&self) -> f64 {
        match self {
            Grid::Binary64 => f64::MIN,
            Grid::Uniform(g) => g.min,
        }
    }

    /// Whether `x` is a grid element or an ideal element.
    pub fn contains(&self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        if x.is_infinite() {
            return true;
        }
        match self {
            Grid::Binary64 => true,
            Grid::Uniform(g) => x >= g.min && x <= g.max && (x / g.step).fract() == 0.0,
        }
    }

    /// Next grid element above `x`; `succ(+inf) = +inf`, `succ(-inf)` is the
    /// smallest finite element.
    pub fn succ(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return self.min_finite();
        }
        if x >= self.max_finite() {
            return f64::INFINITY;
        }
        match self {
            Grid::Binary64 => norm(x.next_up()),
            Grid::Uniform(g) => norm(x + g.step),
        }
    }

    /// Next grid element below `x`; `pred(-inf) = -inf`, `pred(+inf)` is the
    /// largest finite element.
    pub fn pred(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return self.max_finite();
        }
        if x <= self.min_finite() {
            return f64::NEG_INFINITY;
        }
        match self {
            Grid::Binary64 => norm(x.next_down()),
            Grid::Uniform(g) => norm(x - g.step),
        }
    }

    /// Greatest grid element (or `-inf`) not above `x`.
    ///
    /// `x` must already be a valid binary64 lower bound of the exact value;
    /// `+inf` maps to the largest finite element (a lower bound can only be
    /// infinite after overflow) and NaN maps to `-inf`.
    pub fn round_down(&self, x: f64) -> f64 {
        if x.is_nan() || x == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        if x == f64::INFINITY {
            return self.max_finite();
        }
        match self {
            Grid::Binary64 => norm(x),
            Grid::Uniform(g) => {
                if x < g.min {
                    f64::NEG_INFINITY
                } else if x >= g.max {
                    g.max
                } else {
                    norm((x / g.step).floor() * g.step)
                }
            }
        }
    }

    /// Least grid element (or `+inf`) not below `x`.
    pub fn round_up(&self, x: f64) -> f64 {
        if x.is_nan() || x == f64::INFINITY {
            return f64::INFINITY;
        }
        if x == f64::NEG_INFINITY {
            return self.min_finite();
        }
        match self {
            Grid::Binary64 => norm(x),
            Grid::Uniform(g) => {
                if x > g.max {
                    f64::INFINITY
                } else if x <= g.min {
                    g.min
                } else {
                    norm((x / g.step).ceil() * g.step)
                }
            }
        }
    }

    /// Grid element nearest to `x`, clamped to the finite range.
    pub(crate) fn nearest(&self, x: f64) -> f64 {
        match self {
            Grid::Binary64 => norm(x.clamp(f64::MIN, f64::MAX)),
            Grid::Uniform(g) => norm(((x / g.step).round() * g.step).clamp(g.min, g.max)),
        }
    }

    /// Number of grid steps between two grid elements `a <= b`, saturating.
    pub fn steps_between(&self, a: f64, b: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        if a.is_infinite() || b.is_infinite() {
            return f64::INFINITY;
        }
        match self {
            Grid::Binary64 => ordinal(b).wrapping_sub(ordinal(a)) as f64,
            Grid::Uniform(g) => (b - a) / g.step,
        }
    }
}

/// Monotone integer key of a finite f64.
fn ordinal(x: f64) -> i64 {
    let bits = norm(x).to_bits() as i64;
    if bits < 0 {
        i64::MIN - bits
    } else {
        bits
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::Binary64
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Binary64 => write!(f, "f64"),
            Grid::Uniform(g) => write!(f, "test:{},{},{}", g.step, g.min, g.max),
        }
    }
}

impl FromStr for Grid {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "f64" {
            return Ok(Grid::Binary64);
        }
        let rest = s
            .strip_prefix("test:")
            .ok_or_else(|| GridError::Syntax(s.to_string()))?;
        let parts: Vec<f64> = rest
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| GridError::Syntax(s.to_string()))?;
        match parts.as_slice() {
            [step, lo, hi] => Grid::uniform(*step, *lo, *hi),
            _ => Err(GridError::Syntax(s.to_string())),
        }
    }
}
