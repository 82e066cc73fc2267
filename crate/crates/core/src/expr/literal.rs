//! Decimal literals and their exact relation to binary64.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::pow;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LiteralError {
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("number `{0}` overflows binary64")]
    Overflow(String),
}

/// Nearest binary64 value of an unsigned decimal literal and how it compares
/// with the literal's real value.
pub(crate) fn literal_parts(s: &str) -> Result<(f64, Ordering), LiteralError> {
    let bad = || LiteralError::Malformed(s.to_string());
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let digits = digits.trim_start_matches('0');
    let v: f64 = s.parse().map_err(|_| bad())?;
    if v.is_infinite() {
        return Err(LiteralError::Overflow(s.to_string()));
    }
    if digits.is_empty() {
        return Ok((0.0, Ordering::Equal));
    }
    let e10 = exp.saturating_sub(frac.len() as i64);
    // magnitude is roughly 10^(len + e10); far below the subnormal range
    // the nearest value is 0 and it lies below the literal
    if (digits.len() as i64).saturating_add(e10) < -400 {
        return Ok((0.0, Ordering::Less));
    }
    let m: BigInt = digits.parse().map_err(|_| bad())?;
    let ten = BigInt::from(10);
    let exact = if e10 >= 0 {
        BigRational::from_integer(m * pow(ten, e10 as usize))
    } else {
        BigRational::new(m, pow(ten, (-e10) as usize))
    };
    let approx = BigRational::from_float(v).ok_or_else(bad)?;
    Ok((v, approx.cmp(&exact)))
}

/// Nearest binary64 value and whether it equals the literal exactly.
pub fn literal_value(s: &str) -> Result<(f64, bool), LiteralError> {
    literal_parts(s).map(|(v, o)| (v, o == Ordering::Equal))
}

/// Largest binary64 value not above the literal.
pub fn literal_floor(s: &str) -> Result<f64, LiteralError> {
    let (v, o) = literal_parts(s)?;
    Ok(if o == Ordering::Greater { v.next_down() } else { v })
}

/// Smallest binary64 value not below the literal.
pub fn literal_ceil(s: &str) -> Result<f64, LiteralError> {
    let (v, o) = literal_parts(s)?;
    Ok(if o == Ordering::Less { v.next_up() } else { v })
}

/// Decimal text that denotes exactly the finite nonnegative value `x`.
pub fn exact_decimal(x: f64) -> String {
    debug_assert!(x.is_finite() && x >= 0.0);
    let short = format!("{}", x);
    if matches!(literal_value(&short), Ok((_, true))) {
        return short;
    }
    let long = format!("{:.1100}", x);
    let long = long.trim_end_matches('0');
    long.trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactness() {
        assert_eq!(literal_value("0.5").unwrap(), (0.5, true));
        assert_eq!(literal_value("0.1").unwrap(), (0.1, false));
        assert_eq!(literal_value("1e3").unwrap(), (1000.0, true));
        assert_eq!(literal_value("12.50e-1").unwrap(), (1.25, true));
        assert_eq!(literal_value("0.000").unwrap(), (0.0, true));
        assert_eq!(literal_value("1e-500").unwrap(), (0.0, false));
        assert!(literal_value("1e400").is_err());
        assert!(literal_value(".").is_err());
    }

    #[test]
    fn floor_and_ceil_bracket() {
        let lo = literal_floor("0.1").unwrap();
        let hi = literal_ceil("0.1").unwrap();
        assert!(lo < hi);
        assert_eq!(lo.next_up(), hi);
        assert_eq!(literal_floor("2").unwrap(), 2.0);
        assert_eq!(literal_ceil("2").unwrap(), 2.0);
    }

    #[test]
    fn exact_decimal_round_trips() {
        for x in [0.0, 1.0, 0.1, 1e-320, 5e-324, 123456.789, f64::MAX, 1.0 / 3.0] {
            let s = exact_decimal(x);
            assert_eq!(literal_value(&s).unwrap(), (x, true), "{s}");
        }
    }
}
