//! Broyden Banded benchmark generator and harness.
//!
//! `f_i(x) = x_i (2 + 5 x_i^2) + 1 - sum_{j in J_i} x_j (1 + x_j)` with
//! `J_i = { j != i : max(1, i-5) <= j <= min(n, i+1) }`, over `[-1, 1]^n`.

use std::io;
use std::time::Duration;

use serde::Serialize;

use crate::decompose::decompose;
use crate::expr::{EquationSystem, Expr, VarDecl};
use crate::interval::{Grid, Op};
use crate::solve::{branch_and_prune, Limits, PruneStrategy, SolverConfig};

/// Index set `J_i` (1-based).
pub fn broyden_neighbours(n: usize, i: usize) -> Vec<usize> {
    let lo = i.saturating_sub(5).max(1);
    let hi = (i + 1).min(n);
    (lo..=hi).filter(|&j| j != i).collect()
}

/// The Broyden Banded system of dimension `n` over `[lo, hi]^n`.
pub fn broyden_banded_in(n: usize, lo: f64, hi: f64) -> EquationSystem {
    assert!(n >= 1, "dimension must be positive");
    let c = Expr::constant;
    let x = |i: usize| Expr::var(i - 1);
    let vars = (1..=n).map(|i| VarDecl { name: format!("x{i}"), lo, hi }).collect();
    let eqs = (1..=n)
        .map(|i| {
            let cubic = Expr::binary(
                Op::Mul,
                x(i),
                Expr::binary(Op::Add, c(2.0), Expr::binary(Op::Mul, c(5.0), Expr::unary(Op::Pow(2), x(i)))),
            );
            let lhs = Expr::binary(Op::Add, cubic, c(1.0));
            let terms = broyden_neighbours(n, i)
                .into_iter()
                .map(|j| Expr::binary(Op::Mul, x(j), Expr::binary(Op::Add, c(1.0), x(j))));
            match terms.reduce(|a, t| Expr::binary(Op::Add, a, t)) {
                Some(sum) => Expr::binary(Op::Sub, lhs, sum),
                None => lhs,
            }
        })
        .collect();
    EquationSystem::new(vars, eqs).expect("well-formed benchmark")
}

/// The Broyden Banded system of dimension `n` over `[-1, 1]^n`.
pub fn broyden_banded(n: usize) -> EquationSystem {
    broyden_banded_in(n, -1.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRecord {
    pub instance: String,
    pub n: usize,
    pub strategy: String,
    pub splits: u64,
    pub probes: u64,
    pub activations: u64,
    pub millis: u64,
    pub outcome: String,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    pub strategies: Vec<PruneStrategy>,
    /// Solver settings other than the strategy.
    pub solver: SolverConfig,
    pub domain: (f64, f64),
    pub grid: Grid,
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ns: (3..=12).collect(),
            strategies: vec![PruneStrategy::Propagation, PruneStrategy::Functional, PruneStrategy::Relational],
            solver: SolverConfig {
                delta: 1e-4,
                limits: Limits { max_splits: Some(1_000_000), time: Some(Duration::from_secs(600)), max_boxes: None },
                ..SolverConfig::default()
            },
            domain: (-1.0, 1.0),
            grid: Grid::Binary64,
            parallel: false,
        }
    }
}

fn run_one(cfg: &BenchConfig, n: usize, strategy: PruneStrategy) -> BenchRecord {
    let es = broyden_banded_in(n, cfg.domain.0, cfg.domain.1);
    let cs = decompose(&es, &cfg.grid);
    let r = branch_and_prune(&cs, SolverConfig { strategy, ..cfg.solver });
    BenchRecord {
        instance: format!("broyden-{n}"),
        n,
        strategy: strategy.to_string(),
        splits: r.stats.splits,
        probes: r.stats.probes,
        activations: r.stats.activations,
        millis: r.stats.millis,
        outcome: if r.hit_limit() { "limit" } else { "solved" }.into(),
    }
}

/// Runs every `(n, strategy)` pair, in that nesting order.
pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchRecord> {
    let jobs: Vec<(usize, PruneStrategy)> =
        cfg.ns.iter().flat_map(|&n| cfg.strategies.iter().map(move |&s| (n, s))).collect();
    if cfg.parallel {
        use rayon::prelude::*;
        jobs.par_iter().map(|&(n, s)| run_one(cfg, n, s)).collect()
    } else {
        jobs.iter().map(|&(n, s)| run_one(cfg, n, s)).collect()
    }
}

/// Writes records as CSV with a fixed header.
pub fn write_csv<W: io::Write>(records: &[BenchRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["instance", "n", "strategy", "splits", "probes", "activations", "millis", "outcome"])?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn index_sets() {
        assert!(broyden_neighbours(1, 1).is_empty());
        assert_eq!(broyden_neighbours(2, 1), [2]);
        assert_eq!(broyden_neighbours(2, 2), [1]);
        assert_eq!(broyden_neighbours(10, 8), [3, 4, 5, 6, 7, 9]);
        assert_eq!(broyden_neighbours(10, 10), [5, 6, 7, 8, 9]);
    }

    #[test]
    fn single_equation() {
        let es = broyden_banded(1);
        assert_eq!(es.to_text(), "var x1 in [-1, 1];\n((x1 * (2 + (5 * (x1^2)))) + 1) = 0;\n");
        let f = &es.equations()[0];
        assert!(f.eval_real(&[-1.0]).unwrap() < 0.0 && f.eval_real(&[0.0]).unwrap() > 0.0);
    }

    #[test]
    fn round_trips() {
        for n in [1, 2, 7] {
            let es = broyden_banded(n);
            assert_eq!(parse(&es.to_text()).unwrap(), es);
        }
    }

    #[test]
    fn csv_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "instance,n,strategy,splits,probes,activations,millis,outcome\n");
    }
}
