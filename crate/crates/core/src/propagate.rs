//! Propagation engine: fair chaotic iteration and structured schedules.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contract::{contract_atom, Revised};
use crate::decompose::ConstraintSystem;
use crate::interval::{Interval, IntervalBox};

/// Number of cycles of a two-phase iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cycles {
    Finite(u32),
    ToConvergence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// FIFO worklist seeded with every atom, requeueing watchers on change.
    Fair,
    /// Worklist iteration picking a uniformly random pending atom.
    Random(u64),
    /// Each functional atom once, children before parents.
    FunctionalSegment,
    /// Relational atoms, then functional atoms parents before children.
    InverseFunctionalSegment,
    /// Repeated functional plus inverse-functional segments.
    TwoPhase(Cycles),
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Fair => write!(f, "fair"),
            Schedule::Random(s) => write!(f, "random:{s}"),
            Schedule::FunctionalSegment => write!(f, "functional"),
            Schedule::InverseFunctionalSegment => write!(f, "inverse"),
            Schedule::TwoPhase(Cycles::Finite(k)) => write!(f, "two-phase:{k}"),
            Schedule::TwoPhase(Cycles::ToConvergence) => write!(f, "two-phase"),
        }
    }
}

impl std::str::FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("unknown schedule `{s}`");
        Ok(match s {
            "fair" => Schedule::Fair,
            "functional" => Schedule::FunctionalSegment,
            "inverse" => Schedule::InverseFunctionalSegment,
            "two-phase" => Schedule::TwoPhase(Cycles::ToConvergence),
            _ => {
                if let Some(seed) = s.strip_prefix("random:") {
                    Schedule::Random(seed.parse().map_err(|_| bad())?)
                } else if let Some(k) = s.strip_prefix("two-phase:") {
                    let k: u32 = k.parse().map_err(|_| bad())?;
                    if k == 0 {
                        return Err("cycle count must be at least 1".into());
                    }
                    Schedule::TwoPhase(Cycles::Finite(k))
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagateOptions {
    /// Reductions of fewer than `rho` grid steps on both bounds do not
    /// requeue watchers. `0` disables the threshold.
    pub rho: f64,
    /// Stop after this many activations (the box stays sound).
    pub max_activations: Option<u64>,
    /// Record every step.
    pub record: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions { rho: 0.0, max_activations: Some(10_000_000), record: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub atom: usize,
    /// Digest of the box before the activation.
    pub before: u64,
    pub changed: Vec<(usize, Interval)>,
}

/// Activation record of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub initial: IntervalBox,
    pub steps: Vec<Step>,
    pub terminal: IntervalBox,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PropagateStats {
    pub activations: u64,
    /// Activations that changed nothing.
    pub vacuous: u64,
    /// Whether `max_activations` stopped the run.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct Propagation {
    pub result: IntervalBox,
    pub stats: PropagateStats,
    pub trace: Option<Trace>,
}

/// FNV-1a over the bit patterns of the box.
pub fn digest(b: &IntervalBox) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for byte in x.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for iv in b.iter() {
        match iv.bounds() {
            None => feed(u64::MAX),
            Some((lo, hi)) => {
                feed(lo.to_bits());
                feed(hi.to_bits());
            }
        }
    }
    h
}

struct Run<'a> {
    cs: &'a ConstraintSystem,
    opts: PropagateOptions,
    stats: PropagateStats,
    steps: Option<Vec<Step>>,
    changed: Vec<usize>,
}

enum Act {
    Failed,
    /// Variables whose change is significant enough to requeue watchers.
    Ok { requeue_self: bool },
}

impl<'a> Run<'a> {
    fn new(cs: &'a ConstraintSystem, opts: PropagateOptions) -> Self {
        Run {
            cs,
            opts,
            stats: PropagateStats::default(),
            steps: opts.record.then(Vec::new),
            changed: Vec::new(),
        }
    }

    fn exhausted(&mut self) -> bool {
        if let Some(max) = self.opts.max_activations {
            if self.stats.activations >= max {
                self.stats.truncated = true;
                return true;
            }
        }
        false
    }

    /// Activates atom `k`; `self.changed` holds the significantly changed
    /// variables afterwards.
    fn activate(&mut self, k: usize, b: &mut IntervalBox) -> Act {
        self.stats.activations += 1;
        let before_digest = if self.steps.is_some() { digest(b) } else { 0 };
        let old: Vec<Interval> = if self.opts.rho > 0.0 {
            self.cs.scope(k).iter().map(|&v| b[v]).collect()
        } else {
            Vec::new()
        };
        self.changed.clear();
        let status = contract_atom(self.cs.grid(), self.cs.atom(k), b, &mut self.changed);
        if self.changed.is_empty() {
            self.stats.vacuous += 1;
        }
        if let Some(steps) = &mut self.steps {
            let mut ch: Vec<(usize, Interval)> = self.changed.iter().map(|&v| (v, b[v])).collect();
            ch.sort_by_key(|p| p.0);
            steps.push(Step { atom: k, before: before_digest, changed: ch });
        }
        if status == Revised::Failed {
            return Act::Failed;
        }
        if self.opts.rho > 0.0 {
            let grid = *self.cs.grid();
            let scope = self.cs.scope(k);
            let rho = self.opts.rho;
            self.changed.retain(|&v| {
                let o = old[scope.iter().position(|&s| s == v).expect("in scope")];
                let n = b[v];
                grid.steps_between(o.lo(), n.lo()) >= rho || grid.steps_between(n.hi(), o.hi()) >= rho
            });
        }
        Act::Ok { requeue_self: status == Revised::Partial }
    }

    fn finish(self, b: IntervalBox, initial: IntervalBox) -> Propagation {
        let trace = self.steps.map(|steps| Trace { initial, steps, terminal: b.clone() });
        Propagation { result: b, stats: self.stats, trace }
    }

    /// Worklist propagation starting from the atoms in `initial`.
    fn worklist(&mut self, b: &mut IntervalBox, seed: Option<u64>, initial: Vec<usize>) {
        let m = self.cs.atoms().len();
        let mut queued = vec![false; m];
        for &k in &initial {
            queued[k] = true;
        }
        let mut fifo: VecDeque<usize> = initial.iter().copied().collect();
        let mut pool: Vec<usize> = initial;
        let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
        loop {
            let next = match &mut rng {
                None => fifo.pop_front(),
                Some(r) => {
                    if pool.is_empty() {
                        None
                    } else {
                        let i = r.gen_range(0..pool.len());
                        Some(pool.swap_remove(i))
                    }
                }
            };
            let Some(k) = next else { return };
            if self.exhausted() {
                return;
            }
            queued[k] = false;
            match self.activate(k, b) {
                Act::Failed => return,
                Act::Ok { requeue_self } => {
                    let changed = std::mem::take(&mut self.changed);
                    for &v in &changed {
                        for &w in self.cs.watchers(v) {
                            if w != k && !queued[w] {
                                queued[w] = true;
                                match rng {
                                    None => fifo.push_back(w),
                                    Some(_) => pool.push(w),
                                }
                            }
                        }
                    }
                    if requeue_self && !queued[k] {
                        queued[k] = true;
                        match rng {
                            None => fifo.push_back(k),
                            Some(_) => pool.push(k),
                        }
                    }
                    self.changed = changed;
                }
            }
        }
    }

    /// Runs atoms in order once each. Returns `None` on failure, otherwise
    /// whether anything changed.
    fn sequence(&mut self, atoms: impl Iterator<Item = usize>, b: &mut IntervalBox) -> Option<bool> {
        let mut any = false;
        for k in atoms {
            if self.exhausted() {
                return Some(false);
            }
            match self.activate(k, b) {
                Act::Failed => return None,
                Act::Ok { requeue_self } => any |= !self.changed.is_empty() || requeue_self,
            }
        }
        Some(any)
    }

    fn functional(&mut self, b: &mut IntervalBox) -> Option<bool> {
        self.sequence(self.cs.functional_order(), b)
    }

    fn inverse(&mut self, b: &mut IntervalBox) -> Option<bool> {
        let rel = self.cs.relational_atoms();
        let back = self.cs.functional_order().rev();
        self.sequence(rel.chain(back), b)
    }
}

/// Propagates `b` (a box over all variables of `cs`) under `schedule`.
pub fn propagate(cs: &ConstraintSystem, b: &IntervalBox, schedule: Schedule, opts: PropagateOptions) -> Propagation {
    assert_eq!(b.len(), cs.n_vars(), "box arity");
    let mut run = Run::new(cs, opts);
    let mut cur = b.clone();
    if cur.is_empty() {
        return run.finish(cur, b.clone());
    }
    match schedule {
        Schedule::Fair => run.worklist(&mut cur, None, (0..cs.atoms().len()).collect()),
        Schedule::Random(seed) => run.worklist(&mut cur, Some(seed), (0..cs.atoms().len()).collect()),
        Schedule::FunctionalSegment => {
            run.functional(&mut cur);
        }
        Schedule::InverseFunctionalSegment => {
            run.inverse(&mut cur);
        }
        Schedule::TwoPhase(cycles) => {
            let mut done = 0u32;
            loop {
                let f = run.functional(&mut cur);
                let i = f.and_then(|_| run.inverse(&mut cur));
                done += 1;
                match (f, i) {
                    (Some(a), Some(c)) => {
                        let finished = match cycles {
                            Cycles::Finite(k) => done >= k,
                            Cycles::ToConvergence => !(a || c),
                        };
                        if finished || run.stats.truncated {
                            break;
                        }
                    }
                    _ => break,
                }
            }
        }
    }
    run.finish(cur, b.clone())
}

/// Greatest common fixpoint below `b` (FIFO fair schedule, default options).
pub fn fixpoint(cs: &ConstraintSystem, b: &IntervalBox) -> IntervalBox {
    propagate(cs, b, Schedule::Fair, PropagateOptions::default()).result
}

/// Fair FIFO propagation of `b` that starts with only the watchers of
/// `seeds` queued. When `b` is a common fixpoint except for the intervals of
/// `seeds`, the result equals the greatest common fixpoint below `b`.
pub fn propagate_seeded(cs: &ConstraintSystem, b: &IntervalBox, seeds: &[usize], opts: PropagateOptions) -> Propagation {
    assert_eq!(b.len(), cs.n_vars(), "box arity");
    let mut run = Run::new(cs, opts);
    let mut cur = b.clone();
    if !cur.is_empty() {
        let mut initial: Vec<usize> = seeds.iter().flat_map(|&v| cs.watchers(v).iter().copied()).collect();
        initial.sort_unstable();
        initial.dedup();
        run.worklist(&mut cur, None, initial);
    }
    run.finish(cur, b.clone())
}

/// One functional segment from `b`.
pub fn functional_segment(cs: &ConstraintSystem, b: &IntervalBox) -> IntervalBox {
    propagate(cs, b, Schedule::FunctionalSegment, PropagateOptions::default()).result
}

/// One inverse-functional segment from `b`.
pub fn inverse_functional_segment(cs: &ConstraintSystem, b: &IntervalBox) -> IntervalBox {
    propagate(cs, b, Schedule::InverseFunctionalSegment, PropagateOptions::default()).result
}

impl Trace {
    /// Re-executes the recorded atom sequence from the initial box and checks
    /// that every step changes the same variables to the same intervals.
    /// Returns the box sequence on success.
    pub fn replay(&self, cs: &ConstraintSystem) -> Result<Vec<IntervalBox>, usize> {
        let mut b = self.initial.clone();
        let mut boxes = vec![b.clone()];
        let mut changed = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            if digest(&b) != step.before {
                return Err(i);
            }
            changed.clear();
            contract_atom(cs.grid(), cs.atom(step.atom), &mut b, &mut changed);
            let mut got: Vec<(usize, Interval)> = changed.iter().map(|&v| (v, b[v])).collect();
            got.sort_by_key(|p| p.0);
            if got != step.changed {
                return Err(i);
            }
            boxes.push(b.clone());
        }
        if !boxes.last().expect("initial box").bits_eq(&self.terminal) {
            return Err(self.steps.len());
        }
        Ok(boxes)
    }

    /// One line per step plus the final box.
    pub fn to_text(&self, cs: &ConstraintSystem) -> String {
        let grid = cs.grid();
        let mut s = String::new();
        for (i, st) in self.steps.iter().enumerate() {
            let ch: Vec<String> = st
                .changed
                .iter()
                .map(|(v, iv)| format!("{}:{}", cs.vars()[*v].name, iv.to_text(grid)))
                .collect();
            let _ = writeln!(s, "step={} atom={} changed={}", i, st.atom, ch.join(","));
        }
        let fix = if self.terminal.is_empty() {
            "empty".to_string()
        } else {
            let parts: Vec<String> = cs
                .vars()
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{}:{}", v.name, self.terminal[i].to_text(grid)))
                .collect();
            parts.join(",")
        };
        let _ = writeln!(s, "fixpoint={fix}");
        s
    }
}
