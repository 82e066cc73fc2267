//! Branch-and-prune search.

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crate::boxcon::{Consistency, ConsistencyConfig, ConsistencyStats};
use crate::decompose::ConstraintSystem;
use crate::interval::IntervalBox;
use crate::propagate::{propagate, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PruneStrategy {
    /// Fair propagation over the decomposed system.
    Propagation,
    /// Functional box consistency.
    Functional,
    /// Relational box consistency with the configured probe policy.
    Relational,
}

impl fmt::Display for PruneStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PruneStrategy::Propagation => "prop",
            PruneStrategy::Functional => "fbc",
            PruneStrategy::Relational => "rbc",
        })
    }
}

impl std::str::FromStr for PruneStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prop" => Ok(PruneStrategy::Propagation),
            "fbc" => Ok(PruneStrategy::Functional),
            "rbc" => Ok(PruneStrategy::Relational),
            _ => Err(format!("unknown strategy `{s}` (expected prop, fbc or rbc)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branching {
    /// Widest splittable coordinate, lowest index on ties.
    WidestFirst,
    /// Coordinates in turn, skipping canonical ones.
    RoundRobin,
}

impl std::str::FromStr for Branching {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "widest" => Ok(Branching::WidestFirst),
            "round-robin" => Ok(Branching::RoundRobin),
            _ => Err(format!("unknown branching rule `{s}` (expected widest or round-robin)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Limits {
    pub max_boxes: Option<u64>,
    pub max_splits: Option<u64>,
    pub time: Option<Duration>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub strategy: PruneStrategy,
    pub consistency: ConsistencyConfig,
    /// Emit a box once every coordinate is at most this wide.
    pub delta: f64,
    pub branching: Branching,
    pub limits: Limits,
    /// Search the top of the tree with parallel workers.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            strategy: PruneStrategy::Functional,
            consistency: ConsistencyConfig::default(),
            delta: 1e-8,
            branching: Branching::WidestFirst,
            limits: Limits::default(),
            parallel: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxStatus {
    /// Every coordinate is at most `delta` wide.
    Converged,
    /// Wider than `delta` but no coordinate can be split further.
    Canonical,
    /// Not fully processed because a limit was reached.
    Limit,
}

impl fmt::Display for BoxStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoxStatus::Converged => "converged",
            BoxStatus::Canonical => "canonical",
            BoxStatus::Limit => "limit",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultBox {
    /// Box over the primary variables.
    pub bx: IntervalBox,
    pub status: BoxStatus,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub splits: u64,
    pub prunes: u64,
    pub probes: u64,
    pub evaluations: u64,
    pub activations: u64,
    pub millis: u64,
}

impl SolveStats {
    fn add(&mut self, o: &SolveStats) {
        self.splits += o.splits;
        self.prunes += o.prunes;
        self.probes += o.probes;
        self.evaluations += o.evaluations;
        self.activations += o.activations;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverResult {
    pub boxes: Vec<ResultBox>,
    pub stats: SolveStats,
}

impl SolverResult {
    pub fn hit_limit(&self) -> bool {
        self.boxes.iter().any(|b| b.status == BoxStatus::Limit)
    }
}

struct Budget {
    limits: Limits,
    start: Instant,
    splits: AtomicU64,
    boxes: AtomicU64,
    stopped: AtomicBool,
}

impl Budget {
    fn exceeded(&self) -> bool {
        if self.stopped.load(Ordering::Relaxed) {
            return true;
        }
        let l = &self.limits;
        let hit = l.max_splits.is_some_and(|m| self.splits.load(Ordering::Relaxed) >= m)
            || l.max_boxes.is_some_and(|m| self.boxes.load(Ordering::Relaxed) >= m)
            || l.time.is_some_and(|t| self.start.elapsed() >= t);
        if hit {
            self.stopped.store(true, Ordering::Relaxed);
        }
        hit
    }
}

/// Depth below which subtrees are handed to parallel workers.
const PARALLEL_DEPTH: usize = 12;

struct Node {
    bx: IntervalBox,
    next: usize,
}

enum Outcome {
    Discard,
    Emit(ResultBox),
    Split(Node, Node),
}

pub struct Solver<'a> {
    cs: &'a ConstraintSystem,
    cfg: SolverConfig,
}

impl<'a> Solver<'a> {
    pub fn new(cs: &'a ConstraintSystem, cfg: SolverConfig) -> Self {
        assert!(cfg.delta > 0.0, "delta must be positive");
        Solver { cs, cfg }
    }

    /// Prunes a primary box with the configured strategy.
    pub fn prune(&self, b: &IntervalBox, stats: &mut SolveStats) -> IntervalBox {
        stats.prunes += 1;
        match self.cfg.strategy {
            PruneStrategy::Propagation => {
                let full = self.cs.extend_box(b);
                let p = propagate(self.cs, &full, Schedule::Fair, self.cfg.consistency.propagation);
                stats.activations += p.stats.activations;
                let mut out = p.result.truncated(self.cs.n_primary());
                if p.result.is_empty() {
                    out.make_empty();
                }
                out
            }
            PruneStrategy::Functional | PruneStrategy::Relational => {
                let mut k = Consistency::new(self.cs, self.cfg.consistency);
                let out = if self.cfg.strategy == PruneStrategy::Functional {
                    k.functional_bc(b)
                } else {
                    k.relational_bc(b)
                };
                let ConsistencyStats { probes, evaluations, activations } = k.stats;
                stats.probes += probes;
                stats.evaluations += evaluations;
                stats.activations += activations;
                out
            }
        }
    }

    fn choose(&self, b: &IntervalBox, next: usize) -> Option<usize> {
        let grid = self.cs.grid();
        let n = b.len();
        let splittable = |i: usize| !b[i].is_canonical(grid);
        match self.cfg.branching {
            Branching::WidestFirst => {
                let mut best: Option<usize> = None;
                for i in (0..n).filter(|&i| splittable(i)) {
                    if best.map_or(true, |j| b[i].width() > b[j].width()) {
                        best = Some(i);
                    }
                }
                best
            }
            Branching::RoundRobin => (0..n).map(|k| (next + k) % n).find(|&i| splittable(i)),
        }
    }

    fn step(&self, node: Node, stats: &mut SolveStats, budget: &Budget) -> Outcome {
        let p = self.prune(&node.bx, stats);
        if p.is_empty() {
            return Outcome::Discard;
        }
        if p.iter().all(|iv| iv.width() <= self.cfg.delta) {
            budget.boxes.fetch_add(1, Ordering::Relaxed);
            return Outcome::Emit(ResultBox { bx: p, status: BoxStatus::Converged });
        }
        let Some(i) = self.choose(&p, node.next) else {
            budget.boxes.fetch_add(1, Ordering::Relaxed);
            return Outcome::Emit(ResultBox { bx: p, status: BoxStatus::Canonical });
        };
        let (l, r) = p[i].bisect(self.cs.grid()).expect("non-canonical coordinate");
        stats.splits += 1;
        budget.splits.fetch_add(1, Ordering::Relaxed);
        let mut lb = p.clone();
        lb.set(i, l);
        let mut rb = p;
        rb.set(i, r);
        let next = (i + 1) % lb.len();
        Outcome::Split(Node { bx: lb, next }, Node { bx: rb, next })
    }

    fn sequential(&self, root: Node, budget: &Budget) -> (Vec<ResultBox>, SolveStats) {
        let mut stats = SolveStats::default();
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            if budget.exceeded() {
                out.push(ResultBox { bx: node.bx, status: BoxStatus::Limit });
                continue;
            }
            match self.step(node, &mut stats, budget) {
                Outcome::Discard => {}
                Outcome::Emit(r) => out.push(r),
                Outcome::Split(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        (out, stats)
    }

    fn parallel(&self, node: Node, depth: usize, budget: &Budget) -> (Vec<ResultBox>, SolveStats) {
        if depth >= PARALLEL_DEPTH {
            return self.sequential(node, budget);
        }
        if budget.exceeded() {
            return (vec![ResultBox { bx: node.bx, status: BoxStatus::Limit }], SolveStats::default());
        }
        let mut stats = SolveStats::default();
        match self.step(node, &mut stats, budget) {
            Outcome::Discard => (Vec::new(), stats),
            Outcome::Emit(r) => (vec![r], stats),
            Outcome::Split(l, r) => {
                let ((mut lo, ls), (ro, rs)) =
                    rayon::join(|| self.parallel(l, depth + 1, budget), || self.parallel(r, depth + 1, budget));
                lo.extend(ro);
                stats.add(&ls);
                stats.add(&rs);
                (lo, stats)
            }
        }
    }

    /// Covers every solution in the primary box `b` by result boxes.
    pub fn solve_box(&self, b: &IntervalBox) -> SolverResult {
        let budget = Budget {
            limits: self.cfg.limits,
            start: Instant::now(),
            splits: AtomicU64::new(0),
            boxes: AtomicU64::new(0),
            stopped: AtomicBool::new(false),
        };
        let root = Node { bx: b.clone(), next: 0 };
        let (boxes, mut stats) = if b.is_empty() {
            (Vec::new(), SolveStats::default())
        } else if self.cfg.parallel {
            self.parallel(root, 0, &budget)
        } else {
            self.sequential(root, &budget)
        };
        stats.millis = budget.start.elapsed().as_millis() as u64;
        SolverResult { boxes, stats }
    }

    /// Solves from the system's initial box.
    pub fn solve(&self) -> SolverResult {
        self.solve_box(&self.cs.initial_box().truncated(self.cs.n_primary()))
    }
}

/// Branch-and-prune from the initial box of `cs`.
pub fn branch_and_prune(cs: &ConstraintSystem, cfg: SolverConfig) -> SolverResult {
    Solver::new(cs, cfg).solve()
}
