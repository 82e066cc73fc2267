//! Functional and relational box consistency.
//!
//! Both sides search for the leftmost (rightmost) canonical interval of a
//! coordinate that passes a test: interval evaluation containing 0 for the
//! functional side, a non-failed probe for the relational side. The search is
//! a depth-first bisection with an explicit stack. Every segment is tested
//! before it is split or returned, so a failed test prunes the whole
//! segment; this relies on the test being monotone under inclusion, which
//! holds for interval evaluation and for every probe policy.

use std::fmt;

use crate::decompose::{Atom, ConstraintSystem};
use crate::interval::{extend, Interval, IntervalBox};
use crate::propagate::{propagate, propagate_seeded, Cycles, PropagateOptions, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbePolicy {
    /// Propagate to the fair fixpoint.
    Full,
    /// One functional segment; failed iff some equation root excludes 0.
    FunctionalOnly,
    /// `k` two-phase cycles.
    Cycles(u32),
}

impl fmt::Display for ProbePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbePolicy::Full => write!(f, "full"),
            ProbePolicy::FunctionalOnly => write!(f, "func"),
            ProbePolicy::Cycles(k) => write!(f, "cycles:{k}"),
        }
    }
}

impl std::str::FromStr for ProbePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(ProbePolicy::Full),
            "func" | "functional" => Ok(ProbePolicy::FunctionalOnly),
            _ => {
                let k = s
                    .strip_prefix("cycles:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| format!("unknown probe policy `{s}` (expected full, func or cycles:K)"))?;
                if k == 0 {
                    return Err("cycle count must be at least 1".into());
                }
                Ok(ProbePolicy::Cycles(k))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyConfig {
    /// Stop bisecting at this width; `0` bisects to canonical intervals.
    pub eps: f64,
    /// When set, `eps` is replaced by `lambda` times the widest other
    /// primary coordinate.
    pub adaptive: Option<f64>,
    pub policy: ProbePolicy,
    pub propagation: PropagateOptions,
}

/// Default factor for the adaptive stopping width.
pub const DEFAULT_LAMBDA: f64 = 1.0 / 16.0;

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            eps: 0.0,
            adaptive: None,
            policy: ProbePolicy::Full,
            propagation: PropagateOptions::default(),
        }
    }
}

/// A bound constraint on one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbeConstraint {
    /// `x <= u`
    Upper(f64),
    /// `x >= l`
    Lower(f64),
    /// `l <= x <= u`
    Range(f64, f64),
}

impl ProbeConstraint {
    pub fn as_interval(&self) -> Interval {
        match *self {
            ProbeConstraint::Upper(u) => Interval::new(f64::NEG_INFINITY, u),
            ProbeConstraint::Lower(l) => Interval::new(l, f64::INFINITY),
            ProbeConstraint::Range(l, u) => Interval::new(l, u),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeResult {
    Failed,
    NonFailed,
}

impl fmt::Display for ProbeResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbeResult::Failed => "failed",
            ProbeResult::NonFailed => "non-failed",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConsistencyStats {
    pub probes: u64,
    /// Interval evaluations of single equations.
    pub evaluations: u64,
    pub activations: u64,
}

impl ConsistencyStats {
    pub fn add(&mut self, o: &ConsistencyStats) {
        self.probes += o.probes;
        self.evaluations += o.evaluations;
        self.activations += o.activations;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Leftmost or rightmost segment of `[a, b]` reached by bisection that
/// passes `test` and is canonical (or no wider than `eps`).
pub fn extreme_segment(
    cs: &ConstraintSystem,
    a: f64,
    b: f64,
    eps: f64,
    side: Side,
    mut test: impl FnMut(Interval) -> bool,
) -> Interval {
    let grid = cs.grid();
    let mut stack = vec![Interval::new(a, b)];
    while let Some(seg) = stack.pop() {
        if seg.is_empty() || !test(seg) {
            continue;
        }
        if seg.is_canonical(grid) || (eps > 0.0 && seg.width() <= eps) {
            return seg;
        }
        let Ok((l, r)) = seg.bisect(grid) else {
            return seg;
        };
        match side {
            Side::Left => {
                stack.push(r);
                stack.push(l);
            }
            Side::Right => {
                stack.push(l);
                stack.push(r);
            }
        }
    }
    Interval::EMPTY
}

/// Scratch evaluator of equations through the functional atoms.
pub struct Evaluator<'a> {
    cs: &'a ConstraintSystem,
    vals: Vec<Interval>,
}

impl<'a> Evaluator<'a> {
    pub fn new(cs: &'a ConstraintSystem) -> Self {
        Evaluator { cs, vals: cs.initial_box().components().to_vec() }
    }

    /// Natural interval value of equation `j` with primary variables taken
    /// from `primary`, with `x_i` replaced by `xi`.
    pub fn eval(&mut self, j: usize, primary: &IntervalBox, i: usize, xi: Interval) -> Interval {
        let cs = self.cs;
        for v in 0..cs.n_primary() {
            self.vals[v] = primary[v];
        }
        self.vals[i] = xi;
        let grid = cs.grid();
        for k in cs.equation_atoms(j) {
            if let Atom::Functional { op, output, inputs } = cs.atom(k) {
                let args = [self.vals[inputs[0]], inputs.get(1).map_or(Interval::EMPTY, |&v| self.vals[v])];
                self.vals[*output] = extend(grid, *op, &args[..inputs.len()]);
            }
        }
        self.vals[cs.roots()[j]]
    }
}

/// Runs box-consistency computations against one constraint system.
pub struct Consistency<'a> {
    cs: &'a ConstraintSystem,
    cfg: ConsistencyConfig,
    eval: Evaluator<'a>,
    pub stats: ConsistencyStats,
}

impl<'a> Consistency<'a> {
    pub fn new(cs: &'a ConstraintSystem, cfg: ConsistencyConfig) -> Self {
        Consistency { cs, cfg, eval: Evaluator::new(cs), stats: ConsistencyStats::default() }
    }

    pub fn system(&self) -> &ConstraintSystem {
        self.cs
    }

    fn eps_for(&self, b: &IntervalBox, i: usize) -> f64 {
        match self.cfg.adaptive {
            None => self.cfg.eps,
            Some(lambda) => {
                let w = (0..b.len()).filter(|&j| j != i).map(|j| b[j].width()).fold(0.0, f64::max);
                lambda * w
            }
        }
    }

    /// Whether `0` lies in the value of every equation in `eqs` with `x_i`
    /// replaced by `xi`.
    fn pseudo_zero_test(&mut self, eqs: &[usize], b: &IntervalBox, i: usize, xi: Interval) -> bool {
        eqs.iter().all(|&j| {
            self.stats.evaluations += 1;
            self.eval.eval(j, b, i, xi).contains(0.0)
        })
    }

    /// Leftmost or rightmost functional pseudo-zero of the equations `eqs`
    /// within `[a, b]`, with the other coordinates from the primary box `b`.
    pub fn zero1(&mut self, eqs: &[usize], bx: &IntervalBox, i: usize, lo: f64, hi: f64, side: Side) -> Interval {
        let eps = self.eps_for(bx, i);
        let cs = self.cs;
        extreme_segment(cs, lo, hi, eps, side, |seg| self.pseudo_zero_test(eqs, bx, i, seg))
    }

    /// Coordinate-wise functional box consistency of the equations `eqs`.
    /// Returns `false` when the coordinate became empty.
    pub fn cw_functional(&mut self, eqs: &[usize], bx: &mut IntervalBox, i: usize) -> bool {
        let Some((lo, hi)) = bx[i].bounds() else {
            return false;
        };
        let left = self.zero1(eqs, bx, i, lo, hi, Side::Left);
        if left.is_empty() {
            bx.set(i, Interval::EMPTY);
            return false;
        }
        let right = self.zero1(eqs, bx, i, left.lo(), hi, Side::Right);
        let new = bx[i].intersect(&left.hull(&right));
        bx.set(i, new);
        !new.is_empty()
    }

    /// Greatest common fixpoint below `bx` of the operators
    /// `(equation j, coordinate i)` for every variable `x_i` of equation `j`.
    pub fn functional_bc(&mut self, bx: &IntervalBox) -> IntervalBox {
        let mut b = bx.clone();
        if b.is_empty() {
            return b;
        }
        let cs = self.cs;
        let eq_vars: Vec<Vec<usize>> = cs.equations().iter().map(|e| e.variables().into_iter().collect()).collect();
        let mut ops: Vec<(usize, usize)> = Vec::new();
        for (j, vs) in eq_vars.iter().enumerate() {
            ops.extend(vs.iter().map(|&i| (j, i)));
        }
        let mut readers: Vec<Vec<usize>> = vec![Vec::new(); cs.n_primary()];
        for (k, &(j, _)) in ops.iter().enumerate() {
            for &v in &eq_vars[j] {
                readers[v].push(k);
            }
        }
        let mut queued = vec![true; ops.len()];
        let mut queue: std::collections::VecDeque<usize> = (0..ops.len()).collect();
        while let Some(k) = queue.pop_front() {
            queued[k] = false;
            let (j, i) = ops[k];
            let before = b[i];
            if !self.cw_functional(&[j], &mut b, i) {
                b.make_empty();
                return b;
            }
            if b[i] != before {
                for &r in &readers[i] {
                    if r != k && !queued[r] {
                        queued[r] = true;
                        queue.push_back(r);
                    }
                }
            }
        }
        b
    }

    /// Probes the system on the full box `b` (all variables of the system)
    /// with `c` on variable `var`. `b` itself is not modified.
    pub fn probe(&mut self, b: &IntervalBox, var: usize, c: ProbeConstraint) -> ProbeResult {
        self.stats.probes += 1;
        let cs = self.cs;
        let mut work = b.clone();
        work.set(var, work[var].intersect(&c.as_interval()));
        if work.is_empty() {
            return ProbeResult::Failed;
        }
        let failed = match self.cfg.policy {
            ProbePolicy::FunctionalOnly => {
                cs.reset_auxiliaries(&mut work);
                let p = propagate(cs, &work, Schedule::FunctionalSegment, self.cfg.propagation);
                self.stats.activations += p.stats.activations;
                p.result.is_empty() || cs.roots().iter().any(|&r| !p.result[r].contains(0.0))
            }
            ProbePolicy::Full => {
                let p = propagate(cs, &work, Schedule::Fair, self.cfg.propagation);
                self.stats.activations += p.stats.activations;
                p.result.is_empty()
            }
            ProbePolicy::Cycles(k) => {
                let p = propagate(cs, &work, Schedule::TwoPhase(Cycles::Finite(k)), self.cfg.propagation);
                self.stats.activations += p.stats.activations;
                p.result.is_empty()
            }
        };
        if failed {
            ProbeResult::Failed
        } else {
            ProbeResult::NonFailed
        }
    }

    /// Leftmost or rightmost canonical pseudo-solution for primary
    /// coordinate `i` within `[lo, hi]`; the other coordinates come from the
    /// primary box `bx`, auxiliaries start unconstrained.
    pub fn zero2(&mut self, bx: &IntervalBox, i: usize, lo: f64, hi: f64, side: Side) -> Interval {
        let eps = self.eps_for(bx, i);
        let full = self.cs.extend_box(bx);
        let cs = self.cs;
        if self.cfg.policy != ProbePolicy::Full {
            return extreme_segment(cs, lo, hi, eps, side, |seg| {
                self.probe(&full, i, ProbeConstraint::Range(seg.lo(), seg.hi())) == ProbeResult::NonFailed
            });
        }
        // Segments are tested parent first, so each probe restarts from the
        // fixpoint of the nearest non-failed enclosing segment.
        let opts = self.cfg.propagation;
        let base = propagate(cs, &full, Schedule::Fair, opts);
        self.stats.activations += base.stats.activations;
        let mut fixed: Vec<(Interval, IntervalBox)> = vec![(Interval::ENTIRE, base.result)];
        extreme_segment(cs, lo, hi, eps, side, |seg| {
            self.stats.probes += 1;
            while !seg.is_subset(&fixed.last().expect("root").0) {
                fixed.pop();
            }
            let mut work = fixed.last().expect("root").1.clone();
            if work.is_empty() {
                return false;
            }
            work.set(i, work[i].intersect(&seg));
            if work.is_empty() {
                return false;
            }
            let p = propagate_seeded(cs, &work, &[i], opts);
            self.stats.activations += p.stats.activations;
            if p.result.is_empty() {
                return false;
            }
            fixed.push((seg, p.result));
            true
        })
    }

    /// Coordinate-wise relational box consistency operator for primary
    /// coordinate `i`. Returns `false` when the coordinate became empty.
    pub fn cw_relational(&mut self, bx: &mut IntervalBox, i: usize) -> bool {
        let Some((lo, hi)) = bx[i].bounds() else {
            return false;
        };
        let left = self.zero2(bx, i, lo, hi, Side::Left);
        if left.is_empty() {
            bx.set(i, Interval::EMPTY);
            return false;
        }
        let right = self.zero2(bx, i, left.lo(), hi, Side::Right);
        let new = bx[i].intersect(&left.hull(&right));
        bx.set(i, new);
        !new.is_empty()
    }

    /// Greatest common fixpoint below the primary box `bx` of the
    /// coordinate-wise relational operators.
    pub fn relational_bc(&mut self, bx: &IntervalBox) -> IntervalBox {
        let mut b = bx.clone();
        if b.is_empty() {
            return b;
        }
        let n = b.len();
        let mut queued = vec![true; n];
        let mut queue: std::collections::VecDeque<usize> = (0..n).collect();
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            let before = b[i];
            if !self.cw_relational(&mut b, i) {
                b.make_empty();
                return b;
            }
            if b[i] != before {
                for r in 0..n {
                    if r != i && !queued[r] {
                        queued[r] = true;
                        queue.push_back(r);
                    }
                }
            }
        }
        b
    }
}
