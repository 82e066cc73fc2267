//! Command-line probe constraints: `x <= u`, `x >= l`, `l <= x <= u`.

use boxprobe::boxcon::ProbeConstraint;
use boxprobe::expr::{literal_ceil, literal_floor};
use boxprobe::interval::Grid;

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedConstraint {
    pub var: String,
    pub constraint: ProbeConstraint,
}

#[derive(Clone, Copy, PartialEq)]
enum Dir {
    Down,
    Up,
}

/// Rounds a signed decimal (or `inf`) to the bound grid in direction `dir`,
/// so the probe never excludes a value the literal admits.
fn number(s: &str, dir: Dir, grid: &Grid) -> Result<f64, String> {
    let s = s.trim();
    let (neg, body) = match s.as_bytes().first() {
        Some(b'-') => (true, s[1..].trim_start()),
        Some(b'+') => (false, s[1..].trim_start()),
        _ => (false, s),
    };
    let magnitude_dir = if neg { if dir == Dir::Down { Dir::Up } else { Dir::Down } } else { dir };
    let m = if body == "inf" {
        f64::INFINITY
    } else {
        let r = match magnitude_dir {
            Dir::Down => literal_floor(body),
            Dir::Up => literal_ceil(body),
        };
        r.map_err(|e| e.to_string())?
    };
    let v = if neg { -m } else { m };
    Ok(match dir {
        Dir::Down => grid.round_down(v),
        Dir::Up => grid.round_up(v),
    })
}

fn is_name(s: &str) -> bool {
    let mut c = s.chars();
    c.next().is_some_and(|f| f.is_ascii_alphabetic() || f == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
        && s != "inf"
}

pub fn parse_constraint(s: &str, grid: &Grid) -> Result<ParsedConstraint, String> {
    let bad = || format!("bad constraint `{s}` (expected `x <= u`, `x >= l` or `l <= x <= u`)");
    let le: Vec<&str> = s.split("<=").map(str::trim).collect();
    match le.as_slice() {
        [l, x, u] if is_name(x) => {
            let lo = number(l, Dir::Down, grid)?;
            let hi = number(u, Dir::Up, grid)?;
            Ok(ParsedConstraint { var: x.to_string(), constraint: ProbeConstraint::Range(lo, hi) })
        }
        [x, u] if is_name(x) => {
            Ok(ParsedConstraint { var: x.to_string(), constraint: ProbeConstraint::Upper(number(u, Dir::Up, grid)?) })
        }
        [_] => match s.split(">=").map(str::trim).collect::<Vec<_>>().as_slice() {
            [x, l] if is_name(x) => Ok(ParsedConstraint {
                var: x.to_string(),
                constraint: ProbeConstraint::Lower(number(l, Dir::Down, grid)?),
            }),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pc(s: &str, g: &Grid) -> ProbeConstraint {
        parse_constraint(s, g).unwrap().constraint
    }

    #[test]
    fn forms() {
        let g = Grid::Binary64;
        assert_eq!(pc("x <= 1", &g), ProbeConstraint::Upper(1.0));
        assert_eq!(pc("y>=-2.5", &g), ProbeConstraint::Lower(-2.5));
        assert_eq!(pc("-1 <= z1 <= 3", &g), ProbeConstraint::Range(-1.0, 3.0));
        assert_eq!(parse_constraint("x <= 1", &g).unwrap().var, "x");
        assert_eq!(pc("x <= inf", &g), ProbeConstraint::Upper(f64::INFINITY));
    }

    #[test]
    fn inexact_bounds_widen() {
        let g = Grid::Binary64;
        assert_eq!(pc("x <= 0.1", &g), ProbeConstraint::Upper(0.1));
        assert_eq!(pc("x >= 0.1", &g), ProbeConstraint::Lower(0.1f64.next_down()));
        assert_eq!(pc("x <= -0.1", &g), ProbeConstraint::Upper(-(0.1f64.next_down())));
        assert_eq!(pc("x >= -0.1", &g), ProbeConstraint::Lower(-(0.1f64)));
        assert_eq!(pc("x <= 0.3", &g), ProbeConstraint::Upper(0.3f64.next_up()));
    }

    #[test]
    fn snaps_to_grid() {
        let c = Grid::coarse();
        assert_eq!(pc("x <= 1.2", &c), ProbeConstraint::Upper(1.5));
        assert_eq!(pc("1.2 <= x <= 1.2", &c), ProbeConstraint::Range(1.0, 1.5));
    }

    #[test]
    fn rejects() {
        let g = Grid::Binary64;
        for s in ["x < 1", "1 <= 2", "x <= y", "<= 1", "x >= 1 >= 0", "x <= 1e", "1 >= x"] {
            assert!(parse_constraint(s, &g).is_err(), "{s}");
        }
    }
}
