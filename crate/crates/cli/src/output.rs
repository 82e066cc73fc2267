//! JSON rendering that keeps bounds in the interval serialization.

use boxprobe::decompose::ConstraintSystem;
use boxprobe::interval::{fmt_bound, Grid, Interval, IntervalBox};
use boxprobe::solve::{SolveStats, SolverResult};
use serde_json::{json, Map, Number, Value};

/// A bound as a JSON number carrying the exact serialized digits, or the
/// strings `"-inf"` / `"+inf"`.
fn bound(x: f64, grid: &Grid) -> Value {
    let s = fmt_bound(x, grid);
    if x.is_infinite() {
        return Value::String(s);
    }
    Value::Number(serde_json::from_str::<Number>(&s).expect("bound is a JSON number"))
}

pub fn interval(iv: &Interval, grid: &Grid) -> Value {
    match iv.bounds() {
        None => Value::String("empty".into()),
        Some((a, b)) => Value::Array(vec![bound(a, grid), bound(b, grid)]),
    }
}

/// `{name: [lo, hi], ...}` over the first `n` variables, or `"empty"`.
pub fn named_box(cs: &ConstraintSystem, b: &IntervalBox, n: usize) -> Value {
    if b.is_empty() {
        return Value::String("empty".into());
    }
    let mut m = Map::new();
    for (i, v) in cs.vars().iter().take(n).enumerate() {
        m.insert(v.name.clone(), interval(&b[i], cs.grid()));
    }
    Value::Object(m)
}

pub fn stats(s: &SolveStats) -> Value {
    json!({
        "splits": s.splits,
        "prunes": s.prunes,
        "probes": s.probes,
        "activations": s.activations,
        "millis": s.millis,
    })
}

pub fn solver_result(cs: &ConstraintSystem, r: &SolverResult) -> Value {
    let n = cs.n_primary();
    let boxes: Vec<Value> = r
        .boxes
        .iter()
        .map(|b| json!({ "vars": named_box(cs, &b.bx, n), "status": b.status.to_string() }))
        .collect();
    json!({ "boxes": boxes, "stats": stats(&r.stats) })
}

/// Serializes with the exact bound digits preserved.
pub fn render(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}
