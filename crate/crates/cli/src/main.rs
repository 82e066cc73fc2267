mod constraint;
mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use boxprobe::bench::{run_bench, write_csv, BenchConfig};
use boxprobe::boxcon::{Consistency, ConsistencyConfig, ProbePolicy};
use boxprobe::decompose::{decompose, ConstraintSystem};
use boxprobe::expr::parse;
use boxprobe::interval::Grid;
use boxprobe::propagate::{digest, propagate, PropagateOptions, Schedule};
use boxprobe::solve::{Branching, Limits, PruneStrategy, SolveStats, Solver, SolverConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "boxprobe", version, about = "Interval solver for systems of nonlinear equations")]
struct Cli {
    /// Bound grid: `f64` or `test:STEP,LO,HI`.
    #[arg(long, global = true, default_value = "f64")]
    grid: Grid,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Out {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Print the decomposition of a system.
    Check { file: PathBuf },
    /// Prune the initial box once.
    Prune {
        file: PathBuf,
        #[command(flatten)]
        prune: PruneArgs,
    },
    /// Probe the system with a bound constraint on one variable.
    Probe {
        file: PathBuf,
        /// `x <= u`, `x >= l` or `l <= x <= u`.
        #[arg(long)]
        constraint: String,
        #[arg(long, default_value = "full")]
        policy: ProbePolicy,
    },
    /// Branch and prune.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        prune: PruneArgs,
        #[arg(long, default_value_t = 1e-8)]
        delta: f64,
        #[arg(long, default_value = "widest")]
        branching: Branching,
        /// Output format; defaults to `--format`.
        #[arg(long, value_enum)]
        out: Option<Out>,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long)]
        parallel: bool,
    },
    /// Propagate and print every contractor step.
    Trace {
        file: PathBuf,
        #[arg(long, default_value = "fair")]
        schedule: Schedule,
    },
    /// Run a benchmark family.
    Bench {
        #[arg(value_enum)]
        family: Family,
        /// Dimensions, `N` or `A..B` (inclusive).
        #[arg(long, default_value = "3..12", value_parser = parse_range)]
        n: (usize, usize),
        #[arg(long, default_value = "prop,fbc,rbc", value_delimiter = ',')]
        strategies: Vec<PruneStrategy>,
        /// Write CSV here instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Initial box `LO,HI` for every coordinate.
        #[arg(long = "box", default_value = "-1,1", value_parser = parse_pair, allow_hyphen_values = true)]
        domain: (f64, f64),
        #[arg(long, default_value_t = 1e-4)]
        delta: f64,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long)]
        parallel: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Broyden,
}

#[derive(Args)]
struct PruneArgs {
    #[arg(long, default_value = "fbc")]
    strategy: PruneStrategy,
    #[arg(long, default_value = "full")]
    probe: ProbePolicy,
    /// Width at which extreme-segment search stops; 0 means canonical.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Adaptive stopping width factor.
    #[arg(long)]
    adaptive: Option<f64>,
}

impl PruneArgs {
    fn consistency(&self) -> ConsistencyConfig {
        ConsistencyConfig {
            eps: self.eps,
            adaptive: self.adaptive,
            policy: self.probe,
            propagation: PropagateOptions::default(),
        }
    }
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long)]
    max_splits: Option<u64>,
    #[arg(long)]
    max_boxes: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl LimitArgs {
    fn limits(&self) -> Limits {
        Limits {
            max_boxes: self.max_boxes,
            max_splits: self.max_splits,
            time: self.time_limit.map(Duration::from_secs_f64),
        }
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad dimension `{t}`"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b)?),
        None => (num(s)?, num(s)?),
    };
    if a == 0 || a > b {
        return Err(format!("empty or zero dimension range `{s}`"));
    }
    Ok((a, b))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad bound `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad bound `{b}`"))?;
    if !(lo <= hi) {
        return Err(format!("empty box `{s}`"));
    }
    Ok((lo, hi))
}

/// What a command produced: standard output and the exit status.
struct Outcome {
    stdout: String,
    code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, code: 0 }
    }
}

/// A usage or input error, reported with exit status 2.
struct Usage(String);

fn load(path: &PathBuf, grid: &Grid) -> Result<ConstraintSystem, Usage> {
    let src = std::fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    let es = parse(&src).map_err(|e| Usage(format!("{}:{e}", path.display())))?;
    Ok(decompose(&es, grid))
}

fn text_stats(s: &SolveStats) -> String {
    format!(
        "splits={} prunes={} probes={} activations={} millis={}",
        s.splits, s.prunes, s.probes, s.activations, s.millis
    )
}

fn run(cli: Cli) -> Result<Outcome, Usage> {
    let grid = cli.grid;
    let json = cli.format == Format::Json;
    match cli.command {
        Command::Check { file } => {
            let cs = load(&file, &grid)?;
            if !json {
                return Ok(Outcome::ok(cs.to_text()));
            }
            let vars: Vec<Value> = cs
                .vars()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    json!({
                        "name": v.name,
                        "kind": v.kind.to_string(),
                        "domain": output::interval(&cs.initial_box()[i], &grid),
                    })
                })
                .collect();
            let atoms: Vec<String> = (0..cs.atoms().len()).map(|k| cs.atom_text(k)).collect();
            let v = json!({ "grid": grid.to_string(), "variables": vars, "atoms": atoms });
            Ok(Outcome::ok(output::render(&v) + "\n"))
        }
        Command::Prune { file, prune } => {
            let cs = load(&file, &grid)?;
            let cfg = SolverConfig { strategy: prune.strategy, consistency: prune.consistency(), ..SolverConfig::default() };
            let solver = Solver::new(&cs, cfg);
            let mut stats = SolveStats::default();
            let primary = cs.initial_box().truncated(cs.n_primary());
            let b = solver.prune(&primary, &mut stats);
            let stdout = if json {
                let v = json!({ "box": output::named_box(&cs, &b, cs.n_primary()), "stats": output::stats(&stats) });
                output::render(&v) + "\n"
            } else {
                cs.primary_text(&b) + "\n"
            };
            Ok(Outcome { stdout, code: if b.is_empty() { 1 } else { 0 } })
        }
        Command::Probe { file, constraint, policy } => {
            let cs = load(&file, &grid)?;
            let c = constraint::parse_constraint(&constraint, &grid).map_err(Usage)?;
            let var = cs
                .var_index(&c.var)
                .filter(|&i| i < cs.n_primary())
                .ok_or_else(|| Usage(format!("unknown variable `{}`", c.var)))?;
            let mut k = Consistency::new(&cs, ConsistencyConfig { policy, ..ConsistencyConfig::default() });
            let full = cs.extend_box(&cs.initial_box().truncated(cs.n_primary()));
            let r = k.probe(&full, var, c.constraint);
            let stdout = if json {
                output::render(&json!({ "result": r.to_string() })) + "\n"
            } else {
                format!("{r}\n")
            };
            Ok(Outcome::ok(stdout))
        }
        Command::Solve { file, prune, delta, branching, out, limits, parallel } => {
            if !(delta > 0.0) {
                return Err(Usage("--delta must be positive".into()));
            }
            let cs = load(&file, &grid)?;
            let cfg = SolverConfig {
                strategy: prune.strategy,
                consistency: prune.consistency(),
                delta,
                branching,
                limits: limits.limits(),
                parallel,
            };
            let r = Solver::new(&cs, cfg).solve();
            let out = out.unwrap_or(if json { Out::Json } else { Out::Text });
            let n = cs.n_primary();
            let stdout = match out {
                Out::Json => output::render(&output::solver_result(&cs, &r)) + "\n",
                Out::Csv => {
                    let mut s = String::from("box,status,var,lo,hi\n");
                    for (k, b) in r.boxes.iter().enumerate() {
                        for i in 0..n {
                            let (lo, hi) = b.bx[i].bounds().expect("result boxes are non-empty");
                            let f = |x| boxprobe::interval::fmt_bound(x, &grid);
                            let _ = writeln!(s, "{k},{},{},{},{}", b.status, cs.vars()[i].name, f(lo), f(hi));
                        }
                    }
                    s
                }
                Out::Text => {
                    let mut s = String::new();
                    if r.boxes.is_empty() {
                        s.push_str("empty\n");
                    }
                    for (k, b) in r.boxes.iter().enumerate() {
                        let _ = writeln!(s, "box {k} {} {}", b.status, cs.primary_text(&b.bx));
                    }
                    let _ = writeln!(s, "{}", text_stats(&r.stats));
                    s
                }
            };
            Ok(Outcome { stdout, code: if r.boxes.is_empty() { 1 } else { 0 } })
        }
        Command::Trace { file, schedule } => {
            let cs = load(&file, &grid)?;
            let opts = PropagateOptions { record: true, ..PropagateOptions::default() };
            let p = propagate(&cs, cs.initial_box(), schedule, opts);
            let trace = p.trace.expect("recorded trace");
            let stdout = if json {
                let steps: Vec<Value> = trace
                    .steps
                    .iter()
                    .enumerate()
                    .map(|(i, st)| {
                        let mut ch = serde_json::Map::new();
                        for (v, iv) in &st.changed {
                            ch.insert(cs.vars()[*v].name.clone(), output::interval(iv, &grid));
                        }
                        json!({ "step": i, "atom": st.atom, "changed": ch })
                    })
                    .collect();
                let v = json!({
                    "steps": steps,
                    "fixpoint": output::named_box(&cs, &trace.terminal, cs.n_vars()),
                    "digest": format!("{:016x}", digest(&trace.terminal)),
                });
                output::render(&v) + "\n"
            } else {
                trace.to_text(&cs)
            };
            Ok(Outcome::ok(stdout))
        }
        Command::Bench { family: Family::Broyden, n, strategies, csv, domain, delta, limits, parallel } => {
            if !(delta > 0.0) {
                return Err(Usage("--delta must be positive".into()));
            }
            let base = BenchConfig::default();
            let mut lim = base.solver.limits;
            let given = limits.limits();
            lim.max_boxes = given.max_boxes.or(lim.max_boxes);
            lim.max_splits = given.max_splits.or(lim.max_splits);
            lim.time = given.time.or(lim.time);
            let cfg = BenchConfig {
                ns: (n.0..=n.1).collect(),
                strategies,
                solver: SolverConfig { delta, limits: lim, ..base.solver },
                domain,
                grid,
                parallel,
            };
            let records = run_bench(&cfg);
            let mut csv_text = Vec::new();
            write_csv(&records, &mut csv_text).map_err(|e| Usage(e.to_string()))?;
            if let Some(path) = csv {
                std::fs::write(&path, &csv_text).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
            }
            let stdout = if json {
                output::render(&serde_json::to_value(&records).expect("records")) + "\n"
            } else {
                String::from_utf8(csv_text).expect("utf-8 csv")
            };
            Ok(Outcome::ok(stdout))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(o) => {
            print!("{}", o.stdout);
            ExitCode::from(o.code)
        }
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
